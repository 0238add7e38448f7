"""
Declarative data-flow-diagram system model.

A model document is a single JSON object listing trust boundaries, DFD
elements and named subsystems. Parsing builds the immutable in-memory
model; referential checks are a separate step so a broken model can
still be inspected and reported on.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import ValidationError

from ..events import emit_warning
from .exceptions import IntegrityError, ModelSyntaxError, UnknownIdError
from .schemas import ModelDoc, format_validation_error

logger = logging.getLogger("isadm.dfd")


class ElementKind(str, Enum):
    EXTERNAL_ENTITY = "external_entity"
    PROCESS = "process"
    DATA_FLOW = "data_flow"
    DATA_STORE = "data_store"


@dataclass(frozen=True)
class DfdElement:
    id: str
    kind: ElementKind
    name: str = ""
    boundary_ids: FrozenSet[str] = frozenset()
    source_id: Optional[str] = None
    sink_id: Optional[str] = None

    @property
    def is_flow(self) -> bool:
        return self.kind is ElementKind.DATA_FLOW


@dataclass(frozen=True)
class TrustBoundary:
    id: str
    name: str = ""


@dataclass(frozen=True)
class Subsystem:
    id: str
    name: str
    element_ids: FrozenSet[str]


@dataclass(frozen=True)
class SystemModel:
    elements: Tuple[DfdElement, ...] = ()
    boundaries: Tuple[TrustBoundary, ...] = ()
    subsystems: Tuple[Subsystem, ...] = ()
    metadata: Dict[str, str] = field(default_factory=dict)

    def element(self, element_id: str) -> Optional[DfdElement]:
        for el in self.elements:
            if el.id == element_id:
                return el
        return None

    def subsystem(self, subsystem_id: str) -> Optional[Subsystem]:
        for sub in self.subsystems:
            if sub.id == subsystem_id:
                return sub
        return None

    @property
    def element_ids(self) -> List[str]:
        return [el.id for el in self.elements]


@dataclass(frozen=True)
class Violation:
    """One broken model invariant, identified by a stable code."""
    code: str
    id: str
    message: str


# Stable violation codes
DUPLICATE_ID = "DUPLICATE_ID"
DANGLING_REF = "DANGLING_REF"
EMPTY_ID = "EMPTY_ID"
EMPTY_SUBSYSTEM = "EMPTY_SUBSYSTEM"
MISSING_ENDPOINT = "MISSING_ENDPOINT"
UNEXPECTED_ENDPOINT = "UNEXPECTED_ENDPOINT"
INVALID_ENDPOINT = "INVALID_ENDPOINT"


def parse_model(text: bytes | str) -> SystemModel:
    """
    Parse a model document into a SystemModel.

    No referential validation is performed; see validate_model.

    Raises:
        ModelSyntaxError: malformed JSON, schema violation or unknown kind
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ModelSyntaxError(f"model document is not valid UTF-8 ({e.reason})")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelSyntaxError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno)

    if not isinstance(raw, dict):
        raise ModelSyntaxError("model document must be a JSON object")

    try:
        doc = ModelDoc.model_validate(raw)
    except ValidationError as e:
        raise ModelSyntaxError(format_validation_error(e))

    for key in sorted(doc.model_extra or {}):
        emit_warning("dfd", f"ignoring unknown top-level key '{key}' in model document")

    kinds = {k.value: k for k in ElementKind}
    elements = []
    for el in doc.elements:
        kind = kinds.get(el.kind)
        if kind is None:
            raise ModelSyntaxError(
                f"unknown element kind '{el.kind}' for element '{el.id}' "
                f"(expected one of {', '.join(kinds)})"
            )
        elements.append(DfdElement(
            id=el.id,
            kind=kind,
            name=el.name,
            boundary_ids=frozenset(el.boundaries),
            source_id=el.source,
            sink_id=el.sink,
        ))

    model = SystemModel(
        elements=tuple(elements),
        boundaries=tuple(TrustBoundary(id=b.id, name=b.name) for b in doc.boundaries),
        subsystems=tuple(
            Subsystem(id=s.id, name=s.name, element_ids=frozenset(s.elements))
            for s in doc.subsystems
        ),
        metadata=dict(doc.metadata),
    )
    logger.debug(
        f"Parsed model: {len(model.elements)} elements, "
        f"{len(model.boundaries)} boundaries, {len(model.subsystems)} subsystems"
    )
    return model


def validate_model(model: SystemModel) -> List[Violation]:
    """
    Check every model invariant.

    Returns violations sorted by code, then offending id; empty iff the
    model is valid.
    """
    violations: List[Violation] = []

    for role, ids in (
        ("element", [e.id for e in model.elements]),
        ("boundary", [b.id for b in model.boundaries]),
        ("subsystem", [s.id for s in model.subsystems]),
    ):
        for ident, count in Counter(ids).items():
            if not ident.strip():
                violations.append(Violation(EMPTY_ID, ident, f"{role} with empty id"))
            elif count > 1:
                violations.append(Violation(DUPLICATE_ID, ident, f"{role} id '{ident}' declared {count} times"))

    by_id = {e.id: e for e in model.elements}
    boundary_ids = {b.id for b in model.boundaries}

    for el in model.elements:
        for bid in sorted(el.boundary_ids - boundary_ids):
            violations.append(Violation(DANGLING_REF, el.id, f"element '{el.id}' references unknown boundary '{bid}'"))

        if el.is_flow:
            for role, target in (("source", el.source_id), ("sink", el.sink_id)):
                if not target:
                    violations.append(Violation(MISSING_ENDPOINT, el.id, f"data flow '{el.id}' has no {role}"))
                elif target not in by_id:
                    violations.append(Violation(DANGLING_REF, el.id, f"data flow '{el.id}' {role} '{target}' does not exist"))
                elif by_id[target].is_flow:
                    violations.append(Violation(INVALID_ENDPOINT, el.id, f"data flow '{el.id}' {role} '{target}' is itself a data flow"))
        elif el.source_id is not None or el.sink_id is not None:
            violations.append(Violation(UNEXPECTED_ENDPOINT, el.id, f"{el.kind.value} '{el.id}' must not declare source or sink"))

    for sub in model.subsystems:
        if not sub.element_ids:
            violations.append(Violation(EMPTY_SUBSYSTEM, sub.id, f"subsystem '{sub.id}' has no elements"))
        for eid in sorted(sub.element_ids - by_id.keys()):
            violations.append(Violation(DANGLING_REF, sub.id, f"subsystem '{sub.id}' references unknown element '{eid}'"))

    return sorted(violations, key=lambda v: (v.code, v.id, v.message))


def subsystem_elements(model: SystemModel, subsystem_id: str) -> List[DfdElement]:
    """
    Elements of a subsystem, sorted by id.

    Raises:
        UnknownIdError: subsystem_id is not declared
        IntegrityError: the subsystem names an element the model lacks
    """
    sub = model.subsystem(subsystem_id)
    if sub is None:
        known = ", ".join(sorted(s.id for s in model.subsystems)) or "none"
        raise UnknownIdError(f"unknown subsystem '{subsystem_id}' (known: {known})")

    by_id = {e.id: e for e in model.elements}
    missing = sorted(sub.element_ids - by_id.keys())
    if missing:
        raise IntegrityError(f"subsystem '{subsystem_id}' references unknown elements: {', '.join(missing)}")
    return [by_id[eid] for eid in sorted(sub.element_ids)]


def serialize_model(model: SystemModel) -> bytes:
    """Render a model back into its document form."""
    elements = []
    for el in model.elements:
        item = {
            "id": el.id,
            "kind": el.kind.value,
            "name": el.name,
            "boundaries": sorted(el.boundary_ids),
        }
        if el.source_id is not None:
            item["source"] = el.source_id
        if el.sink_id is not None:
            item["sink"] = el.sink_id
        elements.append(item)

    doc = {
        "metadata": dict(sorted(model.metadata.items())),
        "boundaries": [{"id": b.id, "name": b.name} for b in model.boundaries],
        "elements": elements,
        "subsystems": [
            {"id": s.id, "name": s.name, "elements": sorted(s.element_ids)}
            for s in model.subsystems
        ],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
