"""
Analysis report data model and its dictionary form.

The dictionary form is what ``report.json`` holds; ``report_from_dict``
rebuilds the report from it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .d3fend import CountermeasureEntry, DefensiveCategory, DefensiveTechnique, MitigationRow, RelationLabel
from .exceptions import DocumentError
from .layers import FrequencyRow, Layer
from .prioritize import ScoredTechnique, SubsystemThreatMap
from .stride import StrideCategory

REPORT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RunMetadata:
    dataset_version: str
    config_digest: str
    threshold: str
    rank_by: str
    tool_version: str
    started_at: str = ""
    finished_at: str = ""


@dataclass(frozen=True)
class SelectedGroup:
    group_id: str
    name: str
    matched_keywords: Tuple[str, ...] = ()


@dataclass(frozen=True)
class SubsystemAnalysis:
    subsystem_id: str
    name: str
    element_ids: Tuple[str, ...]
    threat_map: SubsystemThreatMap
    techniques: Tuple[ScoredTechnique, ...] = ()


@dataclass(frozen=True)
class PriorityEntry:
    """A distinct technique across all analysed subsystems."""
    technique_id: str
    technique_name: str
    tactics: Tuple[str, ...]
    frequency: int
    band: str
    rank: int
    subsystems: Tuple[str, ...]
    elements: Tuple[str, ...]
    impact: Optional[int] = None
    composite: Optional[int] = None


@dataclass(frozen=True)
class AnalysisReport:
    run: RunMetadata
    scope: Dict[str, str] = field(default_factory=dict)
    groups: Tuple[SelectedGroup, ...] = ()
    merge_stages: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    merged_layer: Layer = field(default_factory=lambda: Layer(name="merged"))
    frequency_table: Tuple[FrequencyRow, ...] = ()
    elicitation: Dict[StrideCategory, Tuple[str, ...]] = field(default_factory=dict)
    subsystems: Tuple[SubsystemAnalysis, ...] = ()
    priorities: Tuple[PriorityEntry, ...] = ()
    mitigations: Optional[Tuple[MitigationRow, ...]] = None
    warnings: Tuple[str, ...] = ()


def _scored_to_dict(row: ScoredTechnique) -> Dict[str, Any]:
    return {
        "element_id": row.element_id,
        "stride_category": row.stride_category.value,
        "tactic_name": row.tactic_name,
        "technique_id": row.technique_id,
        "technique_name": row.technique_name,
        "frequency": row.frequency,
        "impact": row.impact,
        "composite": row.composite,
        "rank": row.rank,
    }


def _scored_from_dict(data: Dict[str, Any]) -> ScoredTechnique:
    return ScoredTechnique(
        element_id=data["element_id"],
        stride_category=StrideCategory(data["stride_category"]),
        tactic_name=data["tactic_name"],
        technique_id=data["technique_id"],
        technique_name=data["technique_name"],
        frequency=data["frequency"],
        impact=data.get("impact"),
        composite=data.get("composite"),
        rank=data.get("rank"),
    )


def _mitigation_to_dict(row: MitigationRow) -> Dict[str, Any]:
    return {
        "technique_id": row.technique_id,
        "technique_name": row.technique_name,
        "uncovered": row.uncovered,
        "countermeasures": {
            cat.value: [
                {
                    "id": e.technique.id,
                    "name": e.technique.name,
                    "relation": e.relation.value,
                    "artifact": e.artifact,
                }
                for e in row.countermeasures.get(cat, ())
            ]
            for cat in DefensiveCategory
        },
    }


def _mitigation_from_dict(data: Dict[str, Any]) -> MitigationRow:
    grouped = {}
    for cat in DefensiveCategory:
        grouped[cat] = tuple(
            CountermeasureEntry(
                technique=DefensiveTechnique(id=e["id"], name=e["name"], category=cat),
                relation=RelationLabel(e["relation"]),
                artifact=e.get("artifact"),
            )
            for e in data["countermeasures"].get(cat.value, [])
        )
    return MitigationRow(
        technique_id=data["technique_id"],
        technique_name=data["technique_name"],
        countermeasures=grouped,
        uncovered=data["uncovered"],
    )


def report_to_dict(report: AnalysisReport) -> Dict[str, Any]:
    run = report.run
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "run": {
            "dataset_version": run.dataset_version,
            "config_digest": run.config_digest,
            "threshold": run.threshold,
            "rank_by": run.rank_by,
            "tool_version": run.tool_version,
            "timestamps": {"started": run.started_at, "finished": run.finished_at},
        },
        "scope": dict(report.scope),
        "groups": [
            {"id": g.group_id, "name": g.name, "matched_keywords": list(g.matched_keywords)}
            for g in report.groups
        ],
        "merge_stages": {k: list(v) for k, v in report.merge_stages.items()},
        "merged_layer": {
            "name": report.merged_layer.name,
            "domain": report.merged_layer.domain_label,
            "scores": dict(report.merged_layer.scores),
        },
        "frequency_table": [
            {
                "technique_id": r.technique_id,
                "technique_name": r.technique_name,
                "tactics": list(r.tactics),
                "score": r.score,
            }
            for r in report.frequency_table
        ],
        "elicitation": {cat.value: list(ids) for cat, ids in report.elicitation.items()},
        "subsystems": [
            {
                "id": s.subsystem_id,
                "name": s.name,
                "elements": list(s.element_ids),
                "threat_map": [
                    {"element_id": eid, "stride_category": cat.value, "tactics": list(tactics)}
                    for (eid, cat), tactics in s.threat_map.rows.items()
                ],
                "techniques": [_scored_to_dict(r) for r in s.techniques],
            }
            for s in report.subsystems
        ],
        "priorities": [
            {
                "technique_id": p.technique_id,
                "technique_name": p.technique_name,
                "tactics": list(p.tactics),
                "frequency": p.frequency,
                "band": p.band,
                "rank": p.rank,
                "impact": p.impact,
                "composite": p.composite,
                "subsystems": list(p.subsystems),
                "elements": list(p.elements),
            }
            for p in report.priorities
        ],
        "mitigations": (
            None if report.mitigations is None
            else [_mitigation_to_dict(m) for m in report.mitigations]
        ),
        "warnings": list(report.warnings),
    }


def report_from_dict(data: Dict[str, Any]) -> AnalysisReport:
    """
    Rebuild a report from its dictionary form.

    Raises:
        DocumentError: missing keys or values of the wrong shape
    """
    try:
        run = data["run"]
        layer = data["merged_layer"]
        return AnalysisReport(
            run=RunMetadata(
                dataset_version=run["dataset_version"],
                config_digest=run["config_digest"],
                threshold=run["threshold"],
                rank_by=run["rank_by"],
                tool_version=run["tool_version"],
                started_at=run["timestamps"]["started"],
                finished_at=run["timestamps"]["finished"],
            ),
            scope=dict(data["scope"]),
            groups=tuple(
                SelectedGroup(group_id=g["id"], name=g["name"], matched_keywords=tuple(g["matched_keywords"]))
                for g in data["groups"]
            ),
            merge_stages={k: tuple(v) for k, v in data["merge_stages"].items()},
            merged_layer=Layer(name=layer["name"], scores=layer["scores"], domain_label=layer["domain"]),
            frequency_table=tuple(
                FrequencyRow(
                    technique_id=r["technique_id"],
                    score=r["score"],
                    technique_name=r["technique_name"],
                    tactics=tuple(r["tactics"]),
                )
                for r in data["frequency_table"]
            ),
            elicitation={StrideCategory(k): tuple(v) for k, v in data["elicitation"].items()},
            subsystems=tuple(
                SubsystemAnalysis(
                    subsystem_id=s["id"],
                    name=s["name"],
                    element_ids=tuple(s["elements"]),
                    threat_map=SubsystemThreatMap(
                        subsystem_id=s["id"],
                        rows={
                            (r["element_id"], StrideCategory(r["stride_category"])): tuple(r["tactics"])
                            for r in s["threat_map"]
                        },
                    ),
                    techniques=tuple(_scored_from_dict(r) for r in s["techniques"]),
                )
                for s in data["subsystems"]
            ),
            priorities=tuple(
                PriorityEntry(
                    technique_id=p["technique_id"],
                    technique_name=p["technique_name"],
                    tactics=tuple(p["tactics"]),
                    frequency=p["frequency"],
                    band=p["band"],
                    rank=p["rank"],
                    subsystems=tuple(p["subsystems"]),
                    elements=tuple(p["elements"]),
                    impact=p.get("impact"),
                    composite=p.get("composite"),
                )
                for p in data["priorities"]
            ),
            mitigations=(
                None if data["mitigations"] is None
                else tuple(_mitigation_from_dict(m) for m in data["mitigations"])
            ),
            warnings=tuple(data["warnings"]),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise DocumentError(f"report: malformed report data ({type(e).__name__}: {e})")
