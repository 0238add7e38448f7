"""
D3FEND countermeasure lookup.

The defensive knowledge graph is consumed as two flat documents: a
catalog of defensive techniques with their category, and a mapping from
ATT&CK technique ids to defensive techniques annotated with the relation
label and, optionally, the digital artifact linking them.
"""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exceptions import CountermeasureError, IntegrityError
from .layers import TECHNIQUE_ID_RE
from .prioritize import Rankable
from .schemas import CatalogDoc, MappingDoc, parse_document

logger = logging.getLogger("isadm.d3fend")

DEFENSIVE_ID_RE = re.compile(r"^D3-[A-Z]+$")


class DefensiveCategory(str, Enum):
    HARDEN = "Harden"
    DETECT = "Detect"
    ISOLATE = "Isolate"
    DECEIVE = "Deceive"
    EVICT = "Evict"
    RESTORE = "Restore"

    @property
    def relation(self) -> "RelationLabel":
        return RelationLabel(f"may-{self.value.lower()}")


class RelationLabel(str, Enum):
    MAY_HARDEN = "may-harden"
    MAY_DETECT = "may-detect"
    MAY_ISOLATE = "may-isolate"
    MAY_DECEIVE = "may-deceive"
    MAY_EVICT = "may-evict"
    MAY_RESTORE = "may-restore"


@dataclass(frozen=True)
class DefensiveTechnique:
    id: str
    name: str
    category: DefensiveCategory


@dataclass(frozen=True)
class CountermeasureEntry:
    technique: DefensiveTechnique
    relation: RelationLabel
    artifact: Optional[str] = None


@dataclass(frozen=True)
class CountermeasureMapping:
    entries: Mapping[str, Tuple[CountermeasureEntry, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class MitigationRow:
    technique_id: str
    technique_name: str
    countermeasures: Mapping[DefensiveCategory, Tuple[CountermeasureEntry, ...]]
    uncovered: bool


def load_catalog(catalog_data: bytes | str) -> Dict[str, DefensiveTechnique]:
    """
    Load a defensive technique catalog keyed by id.

    Raises:
        CountermeasureError: schema violation, malformed id, unknown category
        IntegrityError: duplicate catalog id
    """
    catalog_doc = parse_document(catalog_data, CatalogDoc, "d3fend catalog", CountermeasureError)

    dup = sorted(i for i, n in Counter(t.id for t in catalog_doc.defensive_techniques).items() if n > 1)
    if dup:
        raise IntegrityError(f"d3fend catalog: duplicate ids: {', '.join(dup)}")

    catalog: Dict[str, DefensiveTechnique] = {}
    for item in catalog_doc.defensive_techniques:
        if not DEFENSIVE_ID_RE.match(item.id):
            raise CountermeasureError(f"d3fend catalog: malformed defensive id '{item.id}'")
        try:
            category = DefensiveCategory(item.category)
        except ValueError:
            raise CountermeasureError(f"d3fend catalog: {item.id} has unknown category '{item.category}'")
        catalog[item.id] = DefensiveTechnique(id=item.id, name=item.name, category=category)

    logger.debug(f"Loaded {len(catalog)} defensive techniques")
    return catalog


def load_mapping(
    mapping_data: bytes | str,
    catalog: Mapping[str, DefensiveTechnique],
) -> CountermeasureMapping:
    """
    Load a technique-to-countermeasure mapping, cross-checked against ``catalog``.

    Raises:
        CountermeasureError: schema violation, malformed id, unknown relation,
            relation/category mismatch
        IntegrityError: mapping to an unknown defensive technique
    """
    mapping_doc = parse_document(mapping_data, MappingDoc, "d3fend mapping", CountermeasureError)

    entries: Dict[str, Tuple[CountermeasureEntry, ...]] = {}
    for tid, items in sorted(mapping_doc.mappings.items()):
        if not TECHNIQUE_ID_RE.match(tid):
            raise CountermeasureError(f"d3fend mapping: malformed technique id '{tid}'")
        resolved = []
        for item in items:
            if not DEFENSIVE_ID_RE.match(item.d3fend):
                raise CountermeasureError(f"d3fend mapping: {tid} has malformed defensive id '{item.d3fend}'")
            technique = catalog.get(item.d3fend)
            if technique is None:
                raise IntegrityError(f"d3fend mapping: {tid} references unknown defensive technique {item.d3fend}")
            try:
                relation = RelationLabel(item.relation)
            except ValueError:
                raise CountermeasureError(f"d3fend mapping: {tid} -> {item.d3fend} has unknown relation '{item.relation}'")
            if relation is not technique.category.relation:
                raise CountermeasureError(
                    f"d3fend mapping: {tid} -> {item.d3fend} relation {relation.value} does not match "
                    f"category {technique.category.value}"
                )
            resolved.append(CountermeasureEntry(technique=technique, relation=relation, artifact=item.artifact))
        entries[tid] = tuple(resolved)

    logger.debug(f"Loaded mappings for {len(entries)} attack techniques")
    return CountermeasureMapping(entries=entries)


def load_countermeasures(
    catalog_data: bytes | str,
    mapping_data: bytes | str,
) -> Tuple[Dict[str, DefensiveTechnique], CountermeasureMapping]:
    """Load a catalog and a mapping checked against it."""
    catalog = load_catalog(catalog_data)
    return catalog, load_mapping(mapping_data, catalog)


def countermeasures_for(
    mapping: CountermeasureMapping,
    technique_id: str,
) -> Dict[DefensiveCategory, List[CountermeasureEntry]]:
    """
    Entries for a technique grouped Harden, Detect, Isolate, Deceive,
    Evict, Restore; each group sorted by defensive id. Unknown ids give
    six empty groups.
    """
    grouped: Dict[DefensiveCategory, List[CountermeasureEntry]] = {cat: [] for cat in DefensiveCategory}
    for entry in mapping.entries.get(technique_id, ()):
        grouped[entry.technique.category].append(entry)
    for items in grouped.values():
        items.sort(key=lambda e: (e.technique.id, e.artifact or ""))
    return grouped


def mitigation_matrix(
    prioritized: Sequence[Rankable],
    mapping: CountermeasureMapping,
) -> List[MitigationRow]:
    """One row per distinct technique in priority order, uncovered when unmapped."""
    rows: List[MitigationRow] = []
    seen = set()
    for item in prioritized:
        tid = item.technique_id
        if tid in seen:
            continue
        seen.add(tid)
        grouped = countermeasures_for(mapping, tid)
        rows.append(MitigationRow(
            technique_id=tid,
            technique_name=getattr(item, "technique_name", ""),
            countermeasures={cat: tuple(v) for cat, v in grouped.items()},
            uncovered=not any(grouped.values()),
        ))
    return rows
