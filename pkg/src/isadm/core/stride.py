"""
STRIDE threat elicitation over DFD elements.

Which categories apply to an element is decided by an applicability
matrix: a base rule per element kind, optionally replaced per element
id by an override.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping

from .dfd import ElementKind, SystemModel
from .exceptions import CrosswalkError, UnknownIdError
from .schemas import MatrixDoc, parse_document

logger = logging.getLogger("isadm.stride")


class StrideCategory(str, Enum):
    SPOOFING = "Spoofing"
    TAMPERING = "Tampering"
    REPUDIATION = "Repudiation"
    INFORMATION_DISCLOSURE = "InformationDisclosure"
    DENIAL_OF_SERVICE = "DenialOfService"
    ELEVATION_OF_PRIVILEGE = "ElevationOfPrivilege"

    @property
    def letter(self) -> str:
        return _LETTERS[self]

    @property
    def label(self) -> str:
        """Human-readable name, e.g. 'Information Disclosure'."""
        return _LABELS[self]

    @property
    def order(self) -> int:
        return _ORDER[self]

    @classmethod
    def parse(cls, code: str) -> "StrideCategory":
        """Accept a one-letter code, the enum value or the display label."""
        key = code.strip()
        for cat in cls:
            if key.upper() == cat.letter or key == cat.value or key.lower() == cat.label.lower():
                return cat
        raise ValueError(f"unknown STRIDE category '{code}'")


_LETTERS = {
    StrideCategory.SPOOFING: "S",
    StrideCategory.TAMPERING: "T",
    StrideCategory.REPUDIATION: "R",
    StrideCategory.INFORMATION_DISCLOSURE: "I",
    StrideCategory.DENIAL_OF_SERVICE: "D",
    StrideCategory.ELEVATION_OF_PRIVILEGE: "E",
}
_LABELS = {
    StrideCategory.SPOOFING: "Spoofing",
    StrideCategory.TAMPERING: "Tampering",
    StrideCategory.REPUDIATION: "Repudiation",
    StrideCategory.INFORMATION_DISCLOSURE: "Information Disclosure",
    StrideCategory.DENIAL_OF_SERVICE: "Denial of Service",
    StrideCategory.ELEVATION_OF_PRIVILEGE: "Elevation of Privilege",
}
_ORDER = {cat: i for i, cat in enumerate(StrideCategory)}

ALL_CATEGORIES: FrozenSet[StrideCategory] = frozenset(StrideCategory)


def _categories(codes: Iterable[str]) -> FrozenSet[StrideCategory]:
    return frozenset(StrideCategory.parse(c) for c in codes)


@dataclass(frozen=True)
class ApplicabilityMatrix:
    base: Mapping[ElementKind, FrozenSet[StrideCategory]]
    overrides: Mapping[str, FrozenSet[StrideCategory]] = field(default_factory=dict)

    def __post_init__(self):
        missing = [k.value for k in ElementKind if k not in self.base]
        if missing:
            raise CrosswalkError(f"applicability matrix base lacks kinds: {', '.join(missing)}")

    def effective(self, element_id: str, kind: ElementKind) -> FrozenSet[StrideCategory]:
        if element_id in self.overrides:
            return self.overrides[element_id]
        return self.base[kind]


@dataclass(frozen=True, order=True)
class ThreatFinding:
    element_id: str
    category: StrideCategory


def default_matrix() -> ApplicabilityMatrix:
    """The common STRIDE-per-element convention."""
    return ApplicabilityMatrix(
        base={
            ElementKind.EXTERNAL_ENTITY: _categories("SR"),
            ElementKind.PROCESS: ALL_CATEGORIES,
            ElementKind.DATA_FLOW: _categories("TID"),
            ElementKind.DATA_STORE: _categories("TRID"),
        },
        overrides={},
    )


def load_matrix(data: bytes | str) -> ApplicabilityMatrix:
    """
    Load a matrix document.

    A missing ``base`` keeps the default base; a given ``base`` must name
    all four element kinds.

    Raises:
        CrosswalkError: schema violation, unknown kind or category code
    """
    doc = parse_document(data, MatrixDoc, "applicability matrix", CrosswalkError)

    try:
        if doc.base is None:
            base = dict(default_matrix().base)
        else:
            kinds = {k.value: k for k in ElementKind}
            unknown = sorted(set(doc.base) - kinds.keys())
            if unknown:
                raise CrosswalkError(f"applicability matrix: unknown element kinds {', '.join(unknown)}")
            base = {kinds[k]: _categories(v) for k, v in doc.base.items()}
        overrides = {eid: _categories(v) for eid, v in doc.overrides.items()}
    except ValueError as e:
        raise CrosswalkError(f"applicability matrix: {e}")

    return ApplicabilityMatrix(base=base, overrides=overrides)


def elicit_threats(model: SystemModel, matrix: ApplicabilityMatrix) -> List[ThreatFinding]:
    """
    Emit one finding per applicable (element, category) pair.

    Output is sorted by element id, then S,T,R,I,D,E.

    Raises:
        UnknownIdError: an override names an element absent from the model
    """
    known = set(model.element_ids)
    unknown = sorted(set(matrix.overrides) - known)
    if unknown:
        raise UnknownIdError(f"matrix overrides reference unknown elements: {', '.join(unknown)}")

    findings = {
        ThreatFinding(el.id, cat)
        for el in model.elements
        for cat in matrix.effective(el.id, el.kind)
    }
    result = sorted(findings, key=lambda f: (f.element_id, f.category.order))
    logger.debug(f"Elicited {len(result)} findings over {len(model.elements)} elements")
    return result


def findings_by_category(findings: Iterable[ThreatFinding]) -> Dict[StrideCategory, List[str]]:
    """Partition findings by category; ids sorted inside each category."""
    grouped: Dict[StrideCategory, set] = {cat: set() for cat in StrideCategory}
    for f in findings:
        grouped[f.category].add(f.element_id)
    return {cat: sorted(ids) for cat, ids in grouped.items()}
