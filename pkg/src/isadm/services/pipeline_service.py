"""
Service running the full analysis pipeline.

Stages run in order: load, elicit, select, merge, score, enumerate,
prioritize, mitigate. Any error is re-raised as a PipelineStageError
naming the stage and, where one is involved, the input file.
"""
from __future__ import annotations

import contextvars
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar

from .. import __version__
from ..core import d3fend, dfd, intel, layers, prioritize, stride
from ..core.config import FORMATS, RunConfig
from ..core.exceptions import IsadmError, ModelValidationError, OutputError, PipelineStageError
from ..core.io import FileLock, atomic_write, read_input
from ..core.report import AnalysisReport, PriorityEntry, RunMetadata, SelectedGroup, SubsystemAnalysis
from ..core.service_logging import log_service_call
from ..core.service_result import ServiceResult
from ..events import (
    ReportWritten,
    StageCompleted,
    StageStarted,
    WarningEmitted,
    bus,
    emit_warning,
    run_scope,
)
from .report_service import render_json, render_markdown

logger = logging.getLogger("isadm.services.pipeline")

MERGED_LAYER_NAME = "Merged threat groups"

T = TypeVar("T")


@dataclass(frozen=True)
class Inputs:
    model: dfd.SystemModel
    matrix: stride.ApplicabilityMatrix
    dataset: intel.IntelDataset
    crosswalk: prioritize.TacticCrosswalk
    allow_list: Optional[frozenset]
    impacts: Optional[prioritize.ImpactTable]
    countermeasures: Optional[d3fend.CountermeasureMapping]


def _load(stage: str, path: Path, loader: Callable[[bytes], T]) -> T:
    try:
        return loader(read_input(path))
    except IsadmError as e:
        raise PipelineStageError(stage, e, str(path))


@contextmanager
def _stage(name: str, path: Optional[Path] = None) -> Iterator[None]:
    bus.publish(StageStarted(stage=name))
    start = time.perf_counter()
    try:
        yield
    except PipelineStageError:
        raise
    except IsadmError as e:
        raise PipelineStageError(name, e, str(path) if path else None)
    duration_ms = (time.perf_counter() - start) * 1000
    logger.debug(f"stage {name} finished in {duration_ms:.2f}ms")
    bus.publish(StageCompleted(stage=name, duration_ms=duration_ms))


@contextmanager
def collect_warnings() -> Iterator[List[str]]:
    """Collect warning messages emitted by this run while the block runs."""
    collected: List[str] = []
    with run_scope() as run_id:
        def on_warning(event: WarningEmitted) -> None:
            if event.run_id == run_id:
                collected.append(event.message)

        with bus.subscribed(WarningEmitted, on_warning):
            yield collected


def load_inputs(config: RunConfig) -> Inputs:
    """Parse and validate every input file named by the config."""
    with _stage("load"):
        config.check_paths()

    model = _load("load", config.model, dfd.parse_model)
    violations = dfd.validate_model(model)
    if violations:
        details = "; ".join(f"{v.code} {v.id}: {v.message}" for v in violations)
        raise PipelineStageError(
            "load",
            ModelValidationError(f"model has {len(violations)} violations: {details}", violations),
            str(config.model),
        )

    matrix = _load("load", config.matrix, stride.load_matrix) if config.matrix else stride.default_matrix()
    dataset = _load("load", config.dataset, intel.load_dataset)
    crosswalk = (
        _load("load", config.crosswalk, prioritize.load_crosswalk)
        if config.crosswalk else prioritize.default_crosswalk()
    )
    allow_list = _load("load", config.allow_list, intel.load_allow_list) if config.allow_list else None
    impacts = _load("load", config.impacts, prioritize.load_impacts) if config.impacts else None

    countermeasures = None
    if config.d3fend_catalog and config.d3fend_mapping:
        catalog = _load("load", config.d3fend_catalog, d3fend.load_catalog)
        countermeasures = _load(
            "load",
            config.d3fend_mapping,
            lambda mapping_bytes: d3fend.load_mapping(mapping_bytes, catalog),
        )

    return Inputs(model, matrix, dataset, crosswalk, allow_list, impacts, countermeasures)


def select_groups(config: RunConfig, inputs: Inputs) -> Tuple[List[SelectedGroup], Dict[str, Tuple[str, ...]]]:
    """Groups to merge, plus their keyword categories for staged merging."""
    dataset = inputs.dataset
    if config.keywords:
        hits = intel.search_groups(dataset, config.keywords)
        if inputs.allow_list is not None:
            hits = intel.apply_allow_list(hits, inputs.allow_list, dataset)
        selected = [
            SelectedGroup(h.group_id, dataset.groups[h.group_id].name, h.matched_keywords)
            for h in hits
        ]
        categories = {k: tuple(v) for k, v in intel.partition_by_keyword(hits, config.keywords).items()}
    else:
        selected = [SelectedGroup(gid, dataset.group(gid).name) for gid in dict.fromkeys(config.groups)]
        categories = {}

    if not selected:
        emit_warning("pipeline", "no threat groups selected; merged layer is empty")
    return selected, categories


def merge_groups(
    config: RunConfig,
    dataset: intel.IntelDataset,
    selected: Sequence[SelectedGroup],
    categories: Dict[str, Tuple[str, ...]],
) -> layers.Layer:
    if not selected:
        return layers.Layer(name=MERGED_LAYER_NAME)

    if config.staged_merge and categories:
        staged = {
            keyword: [intel.group_layer(dataset, gid) for gid in gids]
            for keyword, gids in categories.items()
        }
        merged, _ = layers.merge_staged(staged, MERGED_LAYER_NAME)
        return merged

    return layers.merge([intel.group_layer(dataset, g.group_id) for g in selected], MERGED_LAYER_NAME)


def _subsystem_ids(config: RunConfig, model: dfd.SystemModel) -> List[str]:
    if config.subsystems:
        return sorted(dict.fromkeys(config.subsystems))
    return sorted(s.id for s in model.subsystems)


def analyse_subsystem(
    subsystem_id: str,
    inputs: Inputs,
    findings: Sequence[stride.ThreatFinding],
    merged: layers.Layer,
    policy: prioritize.ThresholdPolicy,
) -> SubsystemAnalysis:
    """Map one subsystem's findings to tactics and enumerate its techniques."""
    elements = dfd.subsystem_elements(inputs.model, subsystem_id)
    element_ids = {e.id for e in elements}
    tmap = prioritize.map_findings(
        [f for f in findings if f.element_id in element_ids],
        inputs.crosswalk,
        subsystem_id,
    )
    rows = prioritize.enumerate_techniques(tmap, merged, inputs.dataset, policy)
    sub = inputs.model.subsystem(subsystem_id)
    return SubsystemAnalysis(
        subsystem_id=subsystem_id,
        name=sub.name if sub else subsystem_id,
        element_ids=tuple(e.id for e in elements),
        threat_map=tmap,
        techniques=tuple(rows),
    )


def _with_composites(analysis: SubsystemAnalysis, impacts: prioritize.ImpactTable) -> SubsystemAnalysis:
    """Attach impact, composite and rank while keeping enumeration order."""
    scored = prioritize.composite_score(analysis.techniques, impacts)
    by_key = {(r.element_id, r.stride_category, r.technique_id): r for r in scored}
    rows = tuple(by_key[(r.element_id, r.stride_category, r.technique_id)] for r in analysis.techniques)
    return replace(analysis, techniques=rows)


def build_priorities(
    analyses: Sequence[SubsystemAnalysis],
    rank_key: str,
    bands: prioritize.FrequencyBands,
) -> List[PriorityEntry]:
    """Distinct techniques across subsystems, ranked by ``rank_key``."""
    acc: Dict[str, dict] = {}
    for analysis in analyses:
        for row in analysis.techniques:
            entry = acc.setdefault(row.technique_id, {
                "row": row,
                "tactics": {},
                "subsystems": set(),
                "elements": set(),
            })
            entry["tactics"][row.tactic_name] = None
            entry["subsystems"].add(analysis.subsystem_id)
            entry["elements"].add(row.element_id)

    def sort_key(item):
        row = item["row"]
        primary = row.composite if rank_key == "composite" and row.composite is not None else row.frequency
        return (-primary, -row.frequency, row.technique_id)

    ordered = sorted(acc.values(), key=sort_key)
    return [
        PriorityEntry(
            technique_id=item["row"].technique_id,
            technique_name=item["row"].technique_name,
            tactics=tuple(item["tactics"]),
            frequency=item["row"].frequency,
            band=prioritize.band_label(item["row"].frequency, bands),
            rank=rank,
            subsystems=tuple(sorted(item["subsystems"])),
            elements=tuple(sorted(item["elements"])),
            impact=item["row"].impact,
            composite=item["row"].composite,
        )
        for rank, item in enumerate(ordered, start=1)
    ]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_pipeline(config: RunConfig) -> AnalysisReport:
    """
    Execute the whole analysis for a run config.

    Deterministic for identical inputs apart from the run timestamps.

    Raises:
        PipelineStageError: wrapping the failing stage's error
    """
    started_at = _now()
    with collect_warnings() as warnings:
        inputs = load_inputs(config)
        dataset = inputs.dataset
        policy = config.policy
        rank_key = config.rank_key

        with _stage("elicit", config.matrix or config.model):
            findings = stride.elicit_threats(inputs.model, inputs.matrix)
            elicitation = {
                cat: tuple(ids) for cat, ids in stride.findings_by_category(findings).items()
            }

        # Explicit group ids come from the run config, keyword hits from the intel files
        select_path = (config.allow_list or config.dataset) if config.keywords else config.source
        with _stage("select", select_path):
            selected, categories = select_groups(config, inputs)

        with _stage("merge", config.dataset):
            merged = merge_groups(config, dataset, selected, categories)

        with _stage("score", config.dataset):
            table = layers.frequency_table(merged, dataset)

        with _stage("enumerate", config.model):
            subsystem_ids = _subsystem_ids(config, inputs.model)
            # Composite ranking thresholds the ranked list, so enumerate everything first
            enum_policy = policy if rank_key == "frequency" else prioritize.All()

            def run_one(sid: str) -> SubsystemAnalysis:
                return analyse_subsystem(sid, inputs, findings, merged, enum_policy)

            if config.max_workers > 1 and len(subsystem_ids) > 1:
                with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
                    futures = [
                        pool.submit(contextvars.copy_context().run, run_one, sid) for sid in subsystem_ids
                    ]
                    analyses = [f.result() for f in futures]
            else:
                analyses = [run_one(sid) for sid in subsystem_ids]

        with _stage("prioritize", config.impacts):
            impacts = inputs.impacts
            if rank_key == "composite" and impacts is None:
                emit_warning("pipeline", "composite ranking without an impact table; every impact defaults to 1")
                impacts = prioritize.ImpactTable()
            if impacts is not None:
                analyses = [_with_composites(a, impacts) for a in analyses]

            priorities = build_priorities(analyses, rank_key, config.bands)
            if rank_key == "composite":
                kept = prioritize.apply_threshold(priorities, policy, key="composite")
                priorities = [replace(p, rank=i) for i, p in enumerate(kept, start=1)]
                keep_ids = {p.technique_id for p in priorities}
                analyses = [
                    replace(a, techniques=tuple(r for r in a.techniques if r.technique_id in keep_ids))
                    for a in analyses
                ]

        mitigations = None
        if inputs.countermeasures is not None:
            with _stage("mitigate", config.d3fend_mapping):
                mitigations = tuple(d3fend.mitigation_matrix(priorities, inputs.countermeasures))
                uncovered = [m.technique_id for m in mitigations if m.uncovered]
                if uncovered:
                    emit_warning(
                        "pipeline",
                        f"no D3FEND countermeasures mapped for {', '.join(uncovered)}; analyst review needed",
                    )

        with _stage("digest", config.source):
            digest = config.digest()

    report = AnalysisReport(
        run=RunMetadata(
            dataset_version=dataset.version_label,
            config_digest=digest,
            threshold=str(policy),
            rank_by=config.rank_by,
            tool_version=__version__,
            started_at=started_at,
            finished_at=_now(),
        ),
        scope=dict(inputs.model.metadata),
        groups=tuple(selected),
        merge_stages=categories if config.staged_merge else {},
        merged_layer=merged,
        frequency_table=tuple(table),
        elicitation=elicitation,
        subsystems=tuple(analyses),
        priorities=tuple(priorities),
        mitigations=mitigations,
        warnings=tuple(dict.fromkeys(warnings)),
    )
    logger.info(
        f"Pipeline finished: {len(selected)} groups, {len(table)} scored techniques, "
        f"{len(analyses)} subsystems, {len(priorities)} priorities"
    )
    return report


OUTPUT_FILES = {
    "markdown": "report.md",
    "json": "report.json",
    "navigator": "merged_layer.navigator.json",
}


def write_outputs(report: AnalysisReport, out_dir: Path, formats) -> List[Path]:
    """
    Write the selected output formats into ``out_dir``.

    Raises:
        OutputError: a file cannot be written
    """
    renderers = {
        "markdown": render_markdown,
        "json": render_json,
        "navigator": lambda r: layers.export_navigator(r.merged_layer),
    }
    written = []
    for fmt in FORMATS:
        if fmt not in formats:
            continue
        path = Path(out_dir) / OUTPUT_FILES[fmt]
        try:
            atomic_write(path, renderers[fmt](report))
        except OSError as e:
            raise OutputError(f"cannot write {path}: {e}")
        bus.publish(ReportWritten(path=str(path), format=fmt))
        written.append(path)
    return written


@log_service_call("analyze")
def analyze(config: RunConfig, lock_timeout: float = 5.0) -> ServiceResult[Dict[str, object]]:
    """Run the pipeline and write its outputs while holding the output-dir lock."""
    out_dir = Path(config.out)
    with FileLock(out_dir, timeout=lock_timeout):
        report = run_pipeline(config)
        written = write_outputs(report, out_dir, config.formats)

    return ServiceResult.ok(
        data={"report": report, "written": written},
        message=f"Wrote {len(written)} file(s) to {out_dir}",
        warnings=list(report.warnings),
    )
