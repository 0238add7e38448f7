"""
Merge threat group layers into one Navigator layer.
"""
from pathlib import Path
from typing import Optional

import click

from .common import finish, split_csv


@click.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(path_type=Path),
              help="Intelligence dataset JSON")
@click.option("--groups", "group_ids", default=None, help="Comma-separated group ids")
@click.option("--keywords", default=None, help="Comma-separated keywords (merged per keyword first)")
@click.option("--allow-list", "allow_list", type=click.Path(path_type=Path), default=None,
              help="Analyst allow-list of group ids (keyword mode only)")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path),
              help="Output Navigator layer file")
def merge(
    dataset_path: Path,
    group_ids: Optional[str],
    keywords: Optional[str],
    allow_list: Optional[Path],
    out_path: Path,
) -> None:
    """Sum group layers into a technique frequency layer.

    Give either --groups or --keywords.

    \b
    Examples:
        isadm merge --dataset financial.json --keywords bank,financial --out merged.json
        isadm merge --dataset financial.json --groups G0001,G0002 --out merged.json
    """
    from ..services.intel_service import merge_groups

    result = merge_groups(
        dataset_path,
        out_path,
        group_ids=split_csv(group_ids),
        keywords=split_csv(keywords),
        allow_list=allow_list,
    )
    finish(result)

    for row in result.data["table"]:
        click.echo(f"{row.technique_id:<12} {row.score:02d}  {row.technique_name}")
    click.echo(f"✅ {result.message}")
