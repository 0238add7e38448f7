"""
Threat-intelligence dataset: techniques, threat groups, sector search.

The dataset is a flat JSON derived from ATT&CK (not raw STIX). Groups
are found by keyword search over their name, aliases and description,
optionally narrowed by an analyst-maintained allow-list, and each
selected group becomes a unit-score layer.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple
from urllib.parse import urlparse

import requests

from ..events import emit_warning
from .exceptions import ConfigError, DatasetError, FetchError, IntegrityError, OfflineError, OutputError, UnknownIdError
from .io import atomic_write
from .layers import TECHNIQUE_ID_RE, Layer
from .paths import OFFLINE_ENV, offline_enabled
from .schemas import AllowListDoc, DatasetDoc, parse_document

logger = logging.getLogger("isadm.intel")

FETCH_TIMEOUT = 60


@dataclass(frozen=True)
class Technique:
    id: str
    name: str
    tactics: Tuple[str, ...]

    @property
    def is_subtechnique(self) -> bool:
        return "." in self.id


@dataclass(frozen=True)
class ThreatGroup:
    id: str
    name: str
    aliases: Tuple[str, ...] = ()
    description: str = ""
    technique_ids: FrozenSet[str] = frozenset()


@dataclass(frozen=True)
class IntelDataset:
    version_label: str
    techniques: Mapping[str, Technique] = field(default_factory=dict)
    groups: Mapping[str, ThreatGroup] = field(default_factory=dict)

    def group(self, group_id: str) -> ThreatGroup:
        try:
            return self.groups[group_id]
        except KeyError:
            raise UnknownIdError(f"unknown threat group '{group_id}'")


@dataclass(frozen=True)
class KeywordHit:
    group_id: str
    matched_keywords: Tuple[str, ...]


def _duplicates(ids: Iterable[str]) -> List[str]:
    return sorted(i for i, n in Counter(ids).items() if n > 1)


def load_dataset(data: bytes | str) -> IntelDataset:
    """
    Load and fully validate a dataset document.

    Raises:
        DatasetError: schema violation or malformed technique id
        IntegrityError: duplicate ids or a group using an unknown technique
    """
    doc = parse_document(data, DatasetDoc, "dataset", DatasetError)

    for tech in doc.techniques:
        if not TECHNIQUE_ID_RE.match(tech.id):
            raise DatasetError(f"dataset: malformed technique id '{tech.id}'")
        if not tech.tactics:
            raise DatasetError(f"dataset: technique {tech.id} has no tactics")

    dup = _duplicates(t.id for t in doc.techniques)
    if dup:
        raise IntegrityError(f"dataset: duplicate technique ids: {', '.join(dup)}")
    dup = _duplicates(g.id for g in doc.groups)
    if dup:
        raise IntegrityError(f"dataset: duplicate group ids: {', '.join(dup)}")

    techniques = {
        t.id: Technique(id=t.id, name=t.name, tactics=tuple(dict.fromkeys(t.tactics)))
        for t in doc.techniques
    }

    groups = {}
    for g in doc.groups:
        dangling = sorted(set(g.techniques) - techniques.keys())
        if dangling:
            raise IntegrityError(
                f"dataset: group '{g.id}' references unknown technique {dangling[0]}"
                + (f" (and {len(dangling) - 1} more)" if len(dangling) > 1 else "")
            )
        groups[g.id] = ThreatGroup(
            id=g.id,
            name=g.name,
            aliases=tuple(g.aliases),
            description=g.description,
            technique_ids=frozenset(g.techniques),
        )

    dataset = IntelDataset(version_label=doc.version_label, techniques=techniques, groups=groups)
    logger.debug(f"Loaded dataset {dataset.version_label}: {len(groups)} groups, {len(techniques)} techniques")
    return dataset


def serialize_dataset(dataset: IntelDataset) -> bytes:
    """Render a dataset document; techniques and groups sorted by id."""
    doc = {
        "version_label": dataset.version_label,
        "techniques": [
            {"id": t.id, "name": t.name, "tactics": list(t.tactics)}
            for _, t in sorted(dataset.techniques.items())
        ],
        "groups": [
            {
                "id": g.id,
                "name": g.name,
                "aliases": list(g.aliases),
                "description": g.description,
                "techniques": sorted(g.technique_ids),
            }
            for _, g in sorted(dataset.groups.items())
        ],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def search_groups(dataset: IntelDataset, keywords: Sequence[str]) -> List[KeywordHit]:
    """
    Case-insensitive substring search over name, aliases and description.

    Each matching group appears once with every keyword it matched, in
    query order. Hits are sorted by group name.

    Raises:
        ConfigError: no keywords, or a keyword that is blank after trimming
    """
    terms = [k.strip() for k in keywords]
    if not terms:
        raise ConfigError("keyword search needs at least one keyword")
    if any(not t for t in terms):
        raise ConfigError("keywords must not be blank")
    terms = list(dict.fromkeys(terms))

    hits = []
    for group in dataset.groups.values():
        haystack = "\n".join((group.name, *group.aliases, group.description)).lower()
        matched = tuple(t for t in terms if t.lower() in haystack)
        if matched:
            hits.append(KeywordHit(group_id=group.id, matched_keywords=matched))

    hits.sort(key=lambda h: (dataset.groups[h.group_id].name.lower(), h.group_id))
    logger.info(f"Keyword search {terms} matched {len(hits)} groups")
    return hits


def load_allow_list(data: bytes | str) -> FrozenSet[str]:
    doc = parse_document(data, AllowListDoc, "allow-list", DatasetError)
    return frozenset(doc.include_groups)


def apply_allow_list(
    hits: Sequence[KeywordHit],
    allowed: FrozenSet[str],
    dataset: IntelDataset,
) -> List[KeywordHit]:
    """Keep hits whose group is allow-listed; unknown allow-list ids warn."""
    for gid in sorted(allowed - dataset.groups.keys()):
        emit_warning("intel", f"allow-list names unknown group '{gid}'")
    kept = [h for h in hits if h.group_id in allowed]
    dropped = len(hits) - len(kept)
    if dropped:
        logger.info(f"Allow-list removed {dropped} of {len(hits)} keyword hits")
    return kept


def group_layer(dataset: IntelDataset, group_id: str) -> Layer:
    """Unit-score layer: 1 for every technique the group uses."""
    group = dataset.group(group_id)
    return Layer(name=group.name, scores={tid: 1 for tid in group.technique_ids})


def partition_by_keyword(hits: Sequence[KeywordHit], keywords: Sequence[str]) -> Dict[str, List[str]]:
    """
    Group ids per keyword category for staged merging.

    A group belongs to the first keyword (in query order) it matched.
    """
    order = list(dict.fromkeys(k.strip() for k in keywords if k.strip()))
    categories: Dict[str, List[str]] = {k: [] for k in order}
    for hit in hits:
        categories[hit.matched_keywords[0]].append(hit.group_id)
    return {k: v for k, v in categories.items() if v}


def fetch_dataset(url: str, destination: Path, timeout: float = FETCH_TIMEOUT) -> int:
    """
    Download raw bytes to ``destination`` without parsing them.

    Returns:
        Number of bytes written

    Raises:
        OfflineError: ISADM_OFFLINE is enabled
        ConfigError: url is not an http(s) URL
        FetchError: network failure or non-success status
        OutputError: destination cannot be written
    """
    if offline_enabled():
        raise OfflineError(f"network access disabled ({OFFLINE_ENV}=1); set {OFFLINE_ENV}=0 to fetch {url}")

    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise ConfigError(f"not a valid http(s) URL: {url}")

    logger.info(f"Fetching {url}")
    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
    except requests.HTTPError as e:
        raise FetchError(f"fetch {url} failed with HTTP {e.response.status_code}")
    except requests.RequestException as e:
        raise FetchError(f"fetch {url} failed: {e}")

    body = response.content
    try:
        atomic_write(Path(destination), body)
    except OSError as e:
        raise OutputError(f"cannot write {destination}: {e}")

    logger.info(f"Saved {len(body)} bytes to {destination}")
    return len(body)
