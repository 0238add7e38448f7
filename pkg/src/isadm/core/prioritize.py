"""
STRIDE-to-tactic crosswalk, technique enumeration and prioritization.

Findings expand to ATT&CK tactics through the crosswalk; every technique
of the merged layer carrying one of those tactics becomes a candidate
row scored by its group frequency. Threshold policies cut the list and
an optional impact table turns frequency into a composite risk score.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Protocol, Sequence, Tuple, Union

from ..events import emit_warning
from .exceptions import ConfigError, CrosswalkError, IntegrityError
from .intel import IntelDataset
from .layers import TECHNIQUE_ID_RE, Layer
from .schemas import ImpactDoc, decode_json, parse_document
from .stride import StrideCategory, ThreatFinding

logger = logging.getLogger("isadm.prioritize")

RankKey = Literal["frequency", "composite"]


@dataclass(frozen=True)
class TacticCrosswalk:
    tactics: Mapping[StrideCategory, Tuple[str, ...]]

    def __post_init__(self):
        for cat in StrideCategory:
            if not self.tactics.get(cat):
                raise CrosswalkError(f"crosswalk has no tactics for {cat.value}")

    def __getitem__(self, category: StrideCategory) -> Tuple[str, ...]:
        return self.tactics[category]


def default_crosswalk() -> TacticCrosswalk:
    return TacticCrosswalk({
        StrideCategory.SPOOFING: ("Initial Access", "Credential Access"),
        StrideCategory.TAMPERING: ("Execution", "Persistence", "Impact"),
        StrideCategory.REPUDIATION: ("Defense Evasion",),
        StrideCategory.INFORMATION_DISCLOSURE: ("Collection", "Exfiltration"),
        StrideCategory.DENIAL_OF_SERVICE: ("Impact",),
        StrideCategory.ELEVATION_OF_PRIVILEGE: ("Privilege Escalation",),
    })


def load_crosswalk(data: bytes | str) -> TacticCrosswalk:
    """
    Load a crosswalk document: one key per STRIDE category.

    Raises:
        CrosswalkError: malformed JSON, unknown or missing category, empty list
    """
    raw = decode_json(data, "crosswalk", CrosswalkError)
    if not isinstance(raw, dict):
        raise CrosswalkError("crosswalk: top-level value must be a JSON object")

    tactics: Dict[StrideCategory, Tuple[str, ...]] = {}
    for key, value in raw.items():
        try:
            cat = StrideCategory.parse(key)
        except ValueError as e:
            raise CrosswalkError(f"crosswalk: {e}")
        if cat in tactics:
            raise CrosswalkError(f"crosswalk: category {cat.value} given twice")
        if not isinstance(value, list) or not all(isinstance(t, str) and t.strip() for t in value):
            raise CrosswalkError(f"crosswalk: {key} must map to a list of tactic names")
        tactics[cat] = tuple(dict.fromkeys(t.strip() for t in value))

    missing = [c.value for c in StrideCategory if c not in tactics]
    if missing:
        raise CrosswalkError(f"crosswalk: missing categories {', '.join(missing)}")
    return TacticCrosswalk(tactics)


# Threshold policies

@dataclass(frozen=True)
class TopN:
    n: int
    scope: Literal["cell", "global"] = "cell"

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"top-N threshold needs a positive N, got {self.n}")

    def __str__(self) -> str:
        return f"top:{self.n}"


@dataclass(frozen=True)
class MinScore:
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ConfigError(f"minimum score must be nonnegative, got {self.m}")

    def __str__(self) -> str:
        return f"min:{self.m}"


@dataclass(frozen=True)
class All:
    def __str__(self) -> str:
        return "all"


ThresholdPolicy = Union[TopN, MinScore, All]


def parse_policy(text: str, top_scope: str = "cell") -> ThresholdPolicy:
    """
    Parse ``min:M``, ``top:N`` or ``all``.

    Raises:
        ConfigError: unrecognized syntax or out-of-range number
    """
    value = text.strip().lower()
    if value == "all":
        return All()
    kind, _, number = value.partition(":")
    if kind in ("min", "top") and number.strip().lstrip("-").isdigit():
        n = int(number)
        if kind == "min":
            return MinScore(n)
        if top_scope not in ("cell", "global"):
            raise ConfigError(f"top scope must be 'cell' or 'global', got '{top_scope}'")
        return TopN(n, scope=top_scope)
    raise ConfigError(f"invalid threshold '{text}' (expected min:M, top:N or all)")


# Impacts

@dataclass(frozen=True)
class ImpactTable:
    impacts: Mapping[str, int] = field(default_factory=dict)
    default_impact: int = 1

    def __post_init__(self):
        for tid, value in [("default", self.default_impact), *self.impacts.items()]:
            if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= 5:
                raise CrosswalkError(f"impact for {tid} must be an integer in 1..5, got {value!r}")

    def impact(self, technique_id: str) -> int:
        return self.impacts.get(technique_id, self.default_impact)


def load_impacts(data: bytes | str) -> ImpactTable:
    doc = parse_document(data, ImpactDoc, "impact table", CrosswalkError)
    for tid in doc.impacts:
        if not TECHNIQUE_ID_RE.match(tid):
            raise CrosswalkError(f"impact table: malformed technique id '{tid}'")
    return ImpactTable(impacts=dict(doc.impacts), default_impact=doc.default)


# Frequency bands

@dataclass(frozen=True)
class FrequencyBands:
    high: int = 10
    medium: int = 5

    def __post_init__(self):
        if self.medium > self.high:
            raise ConfigError(f"medium band ({self.medium}) must not exceed high band ({self.high})")


def band_label(frequency: int, bands: FrequencyBands = FrequencyBands()) -> str:
    if frequency >= bands.high:
        return "High"
    if frequency >= bands.medium:
        return "Medium"
    return "Low"


# Scored rows

@dataclass(frozen=True)
class ScoredTechnique:
    element_id: str
    stride_category: StrideCategory
    tactic_name: str
    technique_id: str
    technique_name: str
    frequency: int
    impact: Optional[int] = None
    composite: Optional[int] = None
    rank: Optional[int] = None

    def __post_init__(self):
        if self.frequency < 1:
            raise IntegrityError(f"{self.technique_id}: frequency must be positive")
        if (self.impact is None) != (self.composite is None):
            raise IntegrityError(f"{self.technique_id}: impact and composite must be set together")
        if self.impact is not None and self.composite != self.frequency * self.impact:
            raise IntegrityError(
                f"{self.technique_id}: composite {self.composite} != {self.frequency} x {self.impact}"
            )
        if self.rank is not None and self.rank < 1:
            raise IntegrityError(f"{self.technique_id}: rank must be positive")


@dataclass(frozen=True)
class SubsystemThreatMap:
    subsystem_id: str
    rows: Mapping[Tuple[str, StrideCategory], Tuple[str, ...]] = field(default_factory=dict)


class Rankable(Protocol):
    technique_id: str
    frequency: int
    composite: Optional[int]


def map_findings(
    findings: Iterable[ThreatFinding],
    crosswalk: TacticCrosswalk,
    subsystem_id: str,
) -> SubsystemThreatMap:
    """Expand each finding to its crosswalk tactics, in crosswalk order."""
    rows = {
        (f.element_id, f.category): crosswalk[f.category]
        for f in sorted(findings, key=lambda f: (f.element_id, f.category.order))
    }
    return SubsystemThreatMap(subsystem_id=subsystem_id, rows=rows)


def _rank_key(score: int, technique_id: str):
    return (-score, technique_id)


def _top_ids(scores: Mapping[str, int], n: int) -> set:
    return set(sorted(scores, key=lambda t: _rank_key(scores[t], t))[:n])


def enumerate_techniques(
    tmap: SubsystemThreatMap,
    merged: Layer,
    dataset: IntelDataset,
    policy: ThresholdPolicy,
) -> List[ScoredTechnique]:
    """
    Enumerate scored techniques for every (element, category, tactic).

    MinScore keeps scores >= m, TopN keeps the n best per (element,
    category, tactic) cell (or per whole map when its scope is global),
    All keeps everything. A technique is listed once per (element,
    category), under the first qualifying tactic in crosswalk order.
    """
    unknown = sorted(t for t in merged.scores if t not in dataset.techniques)
    if unknown:
        emit_warning(
            "prioritize",
            f"merged layer '{merged.name}' scores {len(unknown)} techniques absent from dataset "
            f"{dataset.version_label}: {', '.join(unknown)}",
        )

    by_tactic: Dict[str, Dict[str, int]] = {}
    for tid, score in merged.scores.items():
        tech = dataset.techniques.get(tid)
        if tech is None:
            continue
        for tactic in tech.tactics:
            by_tactic.setdefault(tactic, {})[tid] = score

    global_top = isinstance(policy, TopN) and policy.scope == "global"

    rows: List[ScoredTechnique] = []
    for (element_id, category), tactics in sorted(tmap.rows.items(), key=lambda kv: (kv[0][0], kv[0][1].order)):
        seen: set = set()
        for tactic in tactics:
            candidates = by_tactic.get(tactic, {})
            if isinstance(policy, MinScore):
                kept = {t: s for t, s in candidates.items() if s >= policy.m}
            elif isinstance(policy, TopN) and not global_top:
                top = _top_ids(candidates, policy.n)
                kept = {t: s for t, s in candidates.items() if t in top}
            else:
                kept = dict(candidates)

            for tid in sorted(kept, key=lambda t: _rank_key(kept[t], t)):
                if tid in seen:
                    continue
                seen.add(tid)
                rows.append(ScoredTechnique(
                    element_id=element_id,
                    stride_category=category,
                    tactic_name=tactic,
                    technique_id=tid,
                    technique_name=dataset.techniques[tid].name,
                    frequency=kept[tid],
                ))

    if global_top:
        top = _top_ids({r.technique_id: r.frequency for r in rows}, policy.n)
        rows = [r for r in rows if r.technique_id in top]

    logger.debug(f"Enumerated {len(rows)} rows for subsystem '{tmap.subsystem_id}' with {policy}")
    return rows


def composite_score(rows: Sequence[ScoredTechnique], impacts: ImpactTable) -> List[ScoredTechnique]:
    """
    Fill impact and composite (= frequency x impact) and rank rows.

    Output is in rank order: composite desc, frequency desc, technique id
    asc; ranks are positional 1..k.
    """
    scored = []
    for r in rows:
        impact = impacts.impact(r.technique_id)
        scored.append(replace(r, impact=impact, composite=r.frequency * impact, rank=None))
    scored.sort(key=lambda r: (-r.composite, -r.frequency, r.technique_id, r.element_id, r.stride_category.order))
    return [replace(r, rank=i) for i, r in enumerate(scored, start=1)]


def _key_value(row: Rankable, key: RankKey) -> int:
    if key == "composite":
        if row.composite is None:
            raise ConfigError(f"composite ranking requested but {row.technique_id} has no composite score")
        return row.composite
    return row.frequency


def apply_threshold(rows: Sequence[Rankable], policy: ThresholdPolicy, key: RankKey = "frequency") -> list:
    """
    Cut rows by a policy on ``key``, preserving their relative order.

    Raises:
        ConfigError: composite key requested for rows without composites
    """
    values = [_key_value(r, key) for r in rows]
    if isinstance(policy, MinScore):
        return [r for r, v in zip(rows, values) if v >= policy.m]
    if isinstance(policy, TopN):
        order = sorted(
            range(len(rows)),
            key=lambda i: (-values[i], -rows[i].frequency, rows[i].technique_id, i),
        )
        keep = set(order[:policy.n])
        return [r for i, r in enumerate(rows) if i in keep]
    return list(rows)
