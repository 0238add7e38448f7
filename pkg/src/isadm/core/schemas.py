"""Document schemas for every JSON file isadm reads."""
from __future__ import annotations

import json
from typing import Any, Dict, List, Literal, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .exceptions import DocumentError


class StrictModel(BaseModel):
    """Objects inside documents reject unknown keys."""
    model_config = ConfigDict(extra="forbid")


# System model

class BoundaryDoc(StrictModel):
    id: str
    name: str = ""


class ElementDoc(StrictModel):
    id: str
    kind: str
    name: str
    boundaries: List[str] = Field(default_factory=list)
    source: Optional[str] = None
    sink: Optional[str] = None


class SubsystemDoc(StrictModel):
    id: str
    name: str = ""
    elements: List[str]


class ModelDoc(BaseModel):
    # Unknown top-level keys are tolerated and reported by the parser
    model_config = ConfigDict(extra="allow")

    metadata: Dict[str, str] = Field(default_factory=dict)
    boundaries: List[BoundaryDoc] = Field(default_factory=list)
    elements: List[ElementDoc] = Field(default_factory=list)
    subsystems: List[SubsystemDoc] = Field(default_factory=list)


# Applicability matrix, crosswalk and impacts

class MatrixDoc(StrictModel):
    base: Optional[Dict[str, List[str]]] = None
    overrides: Dict[str, List[str]] = Field(default_factory=dict)


class ImpactDoc(StrictModel):
    default: int = Field(default=1, ge=1, le=5)
    impacts: Dict[str, int] = Field(default_factory=dict)


# Intelligence dataset

class TechniqueDoc(StrictModel):
    id: str
    name: str
    tactics: List[str]


class GroupDoc(StrictModel):
    id: str
    name: str
    aliases: List[str] = Field(default_factory=list)
    description: str = ""
    techniques: List[str] = Field(default_factory=list)


class DatasetDoc(StrictModel):
    version_label: str
    techniques: List[TechniqueDoc] = Field(default_factory=list)
    groups: List[GroupDoc] = Field(default_factory=list)


class AllowListDoc(StrictModel):
    include_groups: List[str]


# Navigator layers

class NavigatorTechniqueDoc(BaseModel):
    model_config = ConfigDict(extra="ignore")

    techniqueID: str
    score: Optional[int] = None
    enabled: bool = True


class NavigatorLayerDoc(BaseModel):
    model_config = ConfigDict(extra="ignore")

    name: str
    domain: str
    techniques: List[NavigatorTechniqueDoc]


# D3FEND

class DefensiveTechniqueDoc(StrictModel):
    id: str
    name: str
    category: str


class CatalogDoc(StrictModel):
    defensive_techniques: List[DefensiveTechniqueDoc] = Field(default_factory=list)


class MappingEntryDoc(StrictModel):
    d3fend: str
    relation: str
    artifact: Optional[str] = None


class MappingDoc(StrictModel):
    mappings: Dict[str, List[MappingEntryDoc]] = Field(default_factory=dict)


# Run configuration

class BandsDoc(StrictModel):
    high: int = Field(default=10, ge=1)
    medium: int = Field(default=5, ge=1)


class RunConfigDoc(StrictModel):
    model: str
    dataset: str
    matrix: Optional[str] = None
    crosswalk: Optional[str] = None
    allow_list: Optional[str] = None
    impacts: Optional[str] = None
    d3fend_catalog: Optional[str] = None
    d3fend_mapping: Optional[str] = None
    keywords: Optional[List[str]] = None
    groups: Optional[List[str]] = None
    subsystems: Optional[List[str]] = None
    threshold: str = "min:5"
    rank_by: Literal["freq", "composite"] = "freq"
    top_scope: Literal["cell", "global"] = "cell"
    out: str = "out"
    formats: List[Literal["markdown", "json", "navigator"]] = Field(
        default_factory=lambda: ["markdown", "json", "navigator"]
    )
    bands: BandsDoc = Field(default_factory=BandsDoc)
    staged_merge: bool = True
    max_workers: int = Field(default=1, ge=1)


def format_validation_error(exc: ValidationError) -> str:
    """Flatten a pydantic error into one line: ``loc: msg; loc: msg``."""
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err.get("loc", ())) or "<root>"
        parts.append(f"{loc}: {err.get('msg', 'invalid')}")
    return "; ".join(parts)


def decode_json(data: bytes | str, what: str, error_cls: Type[DocumentError] = DocumentError) -> Any:
    """Parse JSON text, reporting the position of syntax errors."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise error_cls(f"{what}: not valid UTF-8 ({e.reason} at byte {e.start})")
    try:
        return json.loads(data)
    except json.JSONDecodeError as e:
        raise error_cls(f"{what}: invalid JSON: {e.msg} (line {e.lineno}, column {e.colno})")


def parse_document(
    data: bytes | str,
    schema: Type[BaseModel],
    what: str,
    error_cls: Type[DocumentError] = DocumentError,
):
    """Decode JSON and validate it against ``schema``."""
    raw = decode_json(data, what, error_cls)
    if not isinstance(raw, dict):
        raise error_cls(f"{what}: top-level value must be a JSON object")
    try:
        return schema.model_validate(raw)
    except ValidationError as e:
        raise error_cls(f"{what}: {format_validation_error(e)}")
