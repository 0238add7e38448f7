"""
Report rendering: Markdown for people, canonical JSON for machines.
"""
from __future__ import annotations

import json
from typing import List, Optional, Sequence

from ..core.d3fend import DefensiveCategory
from ..core.exceptions import DocumentError
from ..core.report import AnalysisReport, report_from_dict, report_to_dict
from ..core.schemas import decode_json
from ..core.stride import StrideCategory

NONE = "_none_"


def _table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> List[str]:
    if not rows:
        return [NONE, ""]
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join("---" for _ in headers) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join("" if v is None else str(v).replace("|", "\\|") for v in row) + " |")
    lines.append("")
    return lines


def _score(value: Optional[int]) -> str:
    return "" if value is None else f"{value:02d}"


def render_markdown(report: AnalysisReport) -> bytes:
    """Markdown document laid out like the analysis tables; stable ordering."""
    run = report.run
    md: List[str] = []
    md.append("# Threat Modeling Report")
    md.append("")
    md.append(f"- Dataset: {run.dataset_version}")
    md.append(f"- Threshold: {run.threshold} (ranked by {run.rank_by})")
    md.append(f"- Config digest: `{run.config_digest}`")
    md.append(f"- Tool version: {run.tool_version}")
    md.append(f"- Started: {run.started_at or 'n/a'}")
    md.append(f"- Finished: {run.finished_at or 'n/a'}")
    md.append("")

    md.append("## Scope")
    md.append("")
    md.extend(_table(["Key", "Value"], sorted(report.scope.items())))

    md.append("## Threat Groups")
    md.append("")
    md.extend(_table(
        ["Group", "ID", "Matched keywords"],
        [(g.name, g.group_id, ", ".join(g.matched_keywords)) for g in report.groups],
    ))
    if report.merge_stages:
        md.append("Merged in stages:")
        md.append("")
        for keyword, gids in report.merge_stages.items():
            md.append(f"- {keyword}: {', '.join(gids)}")
        md.append("")

    md.append("## Technique Frequency")
    md.append("")
    md.extend(_table(
        ["TTP ID", "Technique", "Tactics", "Score"],
        [(r.technique_id, r.technique_name, ", ".join(r.tactics), _score(r.score)) for r in report.frequency_table],
    ))

    md.append("## STRIDE Elicitation")
    md.append("")
    md.extend(_table(
        ["Category", "DFD elements"],
        [
            (cat.label, ", ".join(report.elicitation.get(cat, ())))
            for cat in StrideCategory
            if report.elicitation.get(cat)
        ],
    ))

    md.append("## Subsystems")
    md.append("")
    if not report.subsystems:
        md.append(NONE)
        md.append("")
    for sub in report.subsystems:
        md.append(f"### {sub.name} (`{sub.subsystem_id}`)")
        md.append("")
        md.append(f"Elements: {', '.join(sub.element_ids)}")
        md.append("")
        md.append("#### Threat map")
        md.append("")
        md.extend(_table(
            ["Element", "STRIDE", "ATT&CK tactics"],
            [(eid, cat.label, "; ".join(tactics)) for (eid, cat), tactics in sub.threat_map.rows.items()],
        ))
        md.append("#### Enumerated techniques")
        md.append("")
        md.extend(_table(
            ["Element", "STRIDE", "Tactic", "TTP ID", "Technique", "Score", "Impact", "Composite"],
            [
                (r.element_id, r.stride_category.label, r.tactic_name, r.technique_id,
                 r.technique_name, _score(r.frequency), r.impact, r.composite)
                for r in sub.techniques
            ],
        ))

    md.append("## Priority Techniques")
    md.append("")
    md.extend(_table(
        ["Rank", "TTP ID", "Technique", "Frequency", "Band", "Impact", "Composite", "Subsystems", "Elements"],
        [
            (p.rank, p.technique_id, p.technique_name, _score(p.frequency), p.band,
             p.impact, p.composite, ", ".join(p.subsystems), ", ".join(p.elements))
            for p in report.priorities
        ],
    ))

    md.append("## Mitigation Matrix")
    md.append("")
    if report.mitigations is None:
        md.append("_no countermeasure mapping configured_")
        md.append("")
    else:
        rows = []
        for m in report.mitigations:
            cells = []
            for cat in DefensiveCategory:
                entries = m.countermeasures.get(cat, ())
                cells.append("; ".join(f"{e.technique.name} ({e.technique.id})" for e in entries))
            rows.append((m.technique_id, m.technique_name, *cells, "yes" if m.uncovered else ""))
        md.extend(_table(["TTP ID", "Technique", *(c.value for c in DefensiveCategory), "Uncovered"], rows))

    md.append("## Warnings")
    md.append("")
    if report.warnings:
        md.extend(f"- {w}" for w in report.warnings)
    else:
        md.append(NONE)
    md.append("")

    return "\n".join(md).encode("utf-8")


def render_json(report: AnalysisReport) -> bytes:
    """Canonical JSON: sorted keys, two-space indent, integers only."""
    text = json.dumps(report_to_dict(report), sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def read_report(data: bytes | str) -> AnalysisReport:
    """
    Parse a rendered report.json back into a report.

    Raises:
        DocumentError: invalid JSON or missing report sections
    """
    raw = decode_json(data, "report", DocumentError)
    if not isinstance(raw, dict):
        raise DocumentError("report: top-level value must be a JSON object")
    return report_from_dict(raw)
