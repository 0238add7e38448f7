"""
Run configuration for an analysis.

A run config is a JSON document naming the input files (relative paths
resolve against the config file's directory), the group selection, the
threshold policy and the outputs to write.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, FrozenSet, Optional, Tuple

from .exceptions import ConfigError, DocumentError
from .io import sha256_file
from .prioritize import FrequencyBands, ThresholdPolicy, parse_policy
from .schemas import RunConfigDoc, parse_document

FORMATS = ("markdown", "json", "navigator")
RANK_KEYS = {"freq": "frequency", "composite": "composite"}

# Config fields that name input files
PATH_FIELDS = (
    "model",
    "matrix",
    "dataset",
    "allow_list",
    "crosswalk",
    "impacts",
    "d3fend_catalog",
    "d3fend_mapping",
)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration."""
    model: Path
    dataset: Path
    matrix: Optional[Path] = None
    crosswalk: Optional[Path] = None
    allow_list: Optional[Path] = None
    impacts: Optional[Path] = None
    d3fend_catalog: Optional[Path] = None
    d3fend_mapping: Optional[Path] = None
    keywords: Tuple[str, ...] = ()
    groups: Tuple[str, ...] = ()
    subsystems: Tuple[str, ...] = ()
    threshold: str = "min:5"
    rank_by: str = "freq"
    top_scope: str = "cell"
    out: Path = Path("out")
    formats: FrozenSet[str] = frozenset(FORMATS)
    bands: FrequencyBands = field(default_factory=FrequencyBands)
    staged_merge: bool = True
    max_workers: int = 1
    source: Optional[Path] = None

    def __post_init__(self):
        if not self.formats:
            raise ConfigError("at least one output format must be selected")
        unknown = sorted(set(self.formats) - set(FORMATS))
        if unknown:
            raise ConfigError(f"unknown output formats: {', '.join(unknown)}")
        if self.rank_by not in RANK_KEYS:
            raise ConfigError(f"rank_by must be 'freq' or 'composite', got '{self.rank_by}'")
        if not self.keywords and not self.groups:
            raise ConfigError("run config needs 'keywords' or an explicit 'groups' list")
        if bool(self.d3fend_catalog) != bool(self.d3fend_mapping):
            raise ConfigError("d3fend_catalog and d3fend_mapping must be given together")
        parse_policy(self.threshold, self.top_scope)

    @property
    def policy(self) -> ThresholdPolicy:
        return parse_policy(self.threshold, self.top_scope)

    @property
    def rank_key(self) -> str:
        return RANK_KEYS[self.rank_by]

    def input_paths(self) -> Dict[str, Path]:
        """Configured input files keyed by config field."""
        return {name: getattr(self, name) for name in PATH_FIELDS if getattr(self, name) is not None}

    def check_paths(self) -> None:
        """
        Raises:
            ConfigError: a referenced input file does not exist
        """
        missing = [f"{name}={path}" for name, path in self.input_paths().items() if not path.is_file()]
        if missing:
            raise ConfigError(f"referenced files do not exist: {', '.join(missing)}")

    def with_overrides(
        self,
        threshold: Optional[str] = None,
        rank_by: Optional[str] = None,
        subsystems: Optional[Tuple[str, ...]] = None,
        out: Optional[Path] = None,
    ) -> RunConfig:
        """Apply CLI flag overrides."""
        changes = {}
        if threshold is not None:
            changes["threshold"] = threshold
        if rank_by is not None:
            changes["rank_by"] = rank_by
        if subsystems:
            changes["subsystems"] = tuple(subsystems)
        if out is not None:
            changes["out"] = Path(out)
        return replace(self, **changes) if changes else self

    def canonical(self) -> dict:
        """Canonical form used for the digest; output location is excluded."""
        data = asdict(self)
        for key in ("out", "source", "max_workers"):
            data.pop(key)
        for key in PATH_FIELDS:
            if data[key] is not None:
                data[key] = Path(data[key]).name
        data["formats"] = sorted(self.formats)
        data["keywords"] = list(self.keywords)
        data["groups"] = list(self.groups)
        data["subsystems"] = sorted(self.subsystems)
        return data

    def digest(self) -> str:
        """
        Stable sha256 over the canonical config plus the bytes of every
        referenced input file.
        """
        payload = {
            "config": self.canonical(),
            "files": {name: sha256_file(path) for name, path in sorted(self.input_paths().items())},
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _resolve(base: Path, value: Optional[str]) -> Optional[Path]:
    if value is None:
        return None
    path = Path(value).expanduser()
    return path if path.is_absolute() else (base / path)


def load_run_config(path: Path) -> RunConfig:
    """
    Load a run config file.

    Raises:
        ConfigError: unreadable file, schema violation or inconsistent fields
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read run config {path}: {e}")

    try:
        doc = parse_document(data, RunConfigDoc, f"run config {path}")
    except DocumentError as e:
        raise ConfigError(str(e))

    base = path.parent
    return RunConfig(
        **{name: _resolve(base, getattr(doc, name)) for name in PATH_FIELDS},
        keywords=tuple(doc.keywords or ()),
        groups=tuple(doc.groups or ()),
        subsystems=tuple(doc.subsystems or ()),
        threshold=doc.threshold,
        rank_by=doc.rank_by,
        top_scope=doc.top_scope,
        out=_resolve(base, doc.out),
        formats=frozenset(doc.formats),
        bands=FrequencyBands(high=doc.bands.high, medium=doc.bands.medium),
        staged_merge=doc.staged_merge,
        max_workers=doc.max_workers,
        source=path,
    )
