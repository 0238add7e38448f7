"""
Services over intelligence datasets: group search, layer merging, fetch.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from ..core import intel, layers
from ..core.exceptions import ConfigError, OutputError
from ..core.io import atomic_write, read_input
from ..core.service_logging import log_service_call
from ..core.service_result import ServiceResult


def _hits(dataset: intel.IntelDataset, keywords: Sequence[str], allow_list: Optional[Path]):
    hits = intel.search_groups(dataset, keywords)
    if allow_list is not None:
        hits = intel.apply_allow_list(hits, intel.load_allow_list(read_input(allow_list)), dataset)
    return hits


@log_service_call("search_groups")
def find_groups(
    dataset_path: Path,
    keywords: Sequence[str],
    allow_list: Optional[Path] = None,
) -> ServiceResult[Dict[str, Any]]:
    """Keyword hits, optionally narrowed by an allow-list."""
    dataset = intel.load_dataset(read_input(dataset_path))
    hits = _hits(dataset, keywords, allow_list)
    return ServiceResult.ok(
        data={"dataset": dataset, "hits": hits},
        message=f"{len(hits)} group(s) matched",
    )


@log_service_call("merge_layers")
def merge_groups(
    dataset_path: Path,
    out_path: Path,
    group_ids: Sequence[str] = (),
    keywords: Sequence[str] = (),
    allow_list: Optional[Path] = None,
    name: str = "Merged threat groups",
) -> ServiceResult[Dict[str, Any]]:
    """Merge unit layers of the chosen groups and write a Navigator layer."""
    if bool(group_ids) == bool(keywords):
        raise ConfigError("give either group ids or keywords")

    dataset = intel.load_dataset(read_input(dataset_path))
    if keywords:
        hits = _hits(dataset, keywords, allow_list)
        categories = intel.partition_by_keyword(hits, keywords)
        if not categories:
            raise ConfigError(f"no group matched keywords {', '.join(keywords)}")
        merged, _ = layers.merge_staged(
            {k: [intel.group_layer(dataset, g) for g in gids] for k, gids in categories.items()},
            name,
        )
        selected = [h.group_id for h in hits]
    else:
        selected = list(dict.fromkeys(group_ids))
        merged = layers.merge([intel.group_layer(dataset, g) for g in selected], name)

    try:
        atomic_write(Path(out_path), layers.export_navigator(merged))
    except OSError as e:
        raise OutputError(f"cannot write {out_path}: {e}")

    return ServiceResult.ok(
        data={"layer": merged, "groups": selected, "table": layers.frequency_table(merged, dataset)},
        message=f"Merged {len(selected)} group layer(s) into {out_path} ({len(merged)} techniques)",
    )


@log_service_call("fetch_dataset")
def fetch(url: str, out_path: Path) -> ServiceResult[int]:
    """Download raw dataset bytes; refused while offline mode is on."""
    size = intel.fetch_dataset(url, Path(out_path))
    return ServiceResult.ok(data=size, message=f"Fetched {size} bytes to {out_path}")
