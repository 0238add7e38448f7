"""
Technique-score layers and their algebra.

A layer maps ATT&CK technique ids to positive integer scores, the
in-memory analogue of an ATT&CK Navigator layer. Merging sums scores,
so merging one unit layer per threat group yields how many groups use
each technique.
"""
from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Mapping, Sequence, Tuple

from pydantic import ValidationError

from ..events import emit_warning
from .exceptions import LayerFormatError
from .schemas import NavigatorLayerDoc, decode_json, format_validation_error

if TYPE_CHECKING:
    from .intel import IntelDataset

logger = logging.getLogger("isadm.layers")

DOMAIN = "enterprise-attack"
NAVIGATOR_LAYER_VERSION = "4.5"
TECHNIQUE_ID_RE = re.compile(r"^T\d{4}(\.\d{3})?$")


@dataclass(frozen=True)
class Layer:
    name: str
    scores: Mapping[str, int] = field(default_factory=dict)
    domain_label: str = DOMAIN

    def __post_init__(self):
        clean: Dict[str, int] = {}
        for tid, score in self.scores.items():
            if not TECHNIQUE_ID_RE.match(tid):
                raise LayerFormatError(f"layer '{self.name}': malformed technique id '{tid}'")
            if isinstance(score, bool) or not isinstance(score, int):
                raise LayerFormatError(f"layer '{self.name}': score for {tid} must be an integer")
            if score < 0:
                raise LayerFormatError(f"layer '{self.name}': negative score {score} for {tid}")
            if score:
                clean[tid] = score
        object.__setattr__(self, "scores", dict(sorted(clean.items())))

    def __len__(self) -> int:
        return len(self.scores)

    def score(self, technique_id: str) -> int:
        return self.scores.get(technique_id, 0)


@dataclass(frozen=True)
class FrequencyRow:
    technique_id: str
    score: int
    technique_name: str = ""
    tactics: Tuple[str, ...] = ()


def merge(layers: Sequence[Layer], merged_name: str) -> Layer:
    """
    Sum scores across layers.

    Raises:
        LayerFormatError: empty input or layers from different domains
    """
    if not layers:
        raise LayerFormatError("cannot merge an empty list of layers")

    domains = sorted({layer.domain_label for layer in layers})
    if len(domains) > 1:
        raise LayerFormatError(f"cannot merge layers from different domains: {', '.join(domains)}")

    total: Counter = Counter()
    for layer in layers:
        total.update(layer.scores)

    merged = Layer(name=merged_name, scores=dict(total), domain_label=domains[0])
    logger.debug(f"Merged {len(layers)} layers into '{merged_name}' ({len(merged)} techniques)")
    return merged


def merge_staged(
    categories: Mapping[str, Sequence[Layer]],
    merged_name: str,
) -> Tuple[Layer, Dict[str, Layer]]:
    """
    Two-stage merge: each category's layers first, then the category layers.

    Empty categories are skipped. Returns the final layer and the
    per-category intermediate layers keyed by category.

    Raises:
        LayerFormatError: no layer in any category
    """
    staged: Dict[str, Layer] = {}
    for category, layers in categories.items():
        if layers:
            staged[category] = merge(layers, f"{merged_name} ({category})")

    return merge(list(staged.values()), merged_name), staged


def frequency_table(layer: Layer, dataset: "IntelDataset | None" = None) -> List[FrequencyRow]:
    """One row per scored technique, score descending then id ascending."""
    rows = []
    for tid, score in layer.scores.items():
        name, tactics = "", ()
        if dataset is not None and tid in dataset.techniques:
            tech = dataset.techniques[tid]
            name, tactics = tech.name, tech.tactics
        rows.append(FrequencyRow(technique_id=tid, score=score, technique_name=name, tactics=tactics))
    rows.sort(key=lambda r: (-r.score, r.technique_id))
    return rows


def export_navigator(layer: Layer) -> bytes:
    """Render the Navigator layer subset with techniques sorted by id."""
    doc = {
        "name": layer.name,
        "versions": {"layer": NAVIGATOR_LAYER_VERSION},
        "domain": layer.domain_label,
        "techniques": [
            {"techniqueID": tid, "score": score}
            for tid, score in sorted(layer.scores.items())
        ],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def import_navigator(data: bytes | str) -> Layer:
    """
    Read a Navigator layer, keeping enabled entries with a positive score.

    Disabled entries are skipped. Entries with no score or a zero score
    are dropped with a warning. Fields outside the supported subset are
    ignored.

    Raises:
        LayerFormatError: malformed JSON, missing field, negative score
    """
    raw = decode_json(data, "navigator layer", LayerFormatError)
    if not isinstance(raw, dict):
        raise LayerFormatError("navigator layer: top-level value must be a JSON object")
    try:
        doc = NavigatorLayerDoc.model_validate(raw)
    except ValidationError as e:
        raise LayerFormatError(f"navigator layer: {format_validation_error(e)}")

    scores: Dict[str, int] = {}
    for entry in doc.techniques:
        tid = entry.techniqueID
        if not entry.enabled:
            logger.debug(f"layer '{doc.name}': skipping disabled {tid}")
            continue
        if entry.score is None or entry.score == 0:
            emit_warning("layers", f"layer '{doc.name}': dropping {tid} with no positive score")
            continue
        if entry.score < 0:
            raise LayerFormatError(f"navigator layer '{doc.name}': negative score {entry.score} for {tid}")
        if tid in scores:
            if scores[tid] != entry.score:
                emit_warning(
                    "layers",
                    f"layer '{doc.name}': {tid} listed with scores {scores[tid]} and {entry.score}; keeping {scores[tid]}",
                )
            continue
        scores[tid] = entry.score

    return Layer(name=doc.name, scores=scores, domain_label=doc.domain)
