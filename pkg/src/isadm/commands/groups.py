"""
Search threat groups by keyword.
"""
from pathlib import Path
from typing import Optional

import click

from .common import finish, split_csv


@click.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(path_type=Path),
              help="Intelligence dataset JSON")
@click.option("--keywords", required=True, help="Comma-separated keywords, e.g. bank,financial")
@click.option("--allow-list", "allow_list", type=click.Path(path_type=Path), default=None,
              help="Analyst allow-list of group ids")
def groups(dataset_path: Path, keywords: str, allow_list: Optional[Path]) -> None:
    """Find threat groups whose name, aliases or description mention a keyword.

    \b
    Examples:
        isadm groups --dataset financial.json --keywords bank,financial
    """
    from ..services.intel_service import find_groups

    result = find_groups(dataset_path, split_csv(keywords), allow_list)
    finish(result)

    dataset = result.data["dataset"]
    for hit in result.data["hits"]:
        group = dataset.group(hit.group_id)
        click.echo(f"{hit.group_id:<8} {group.name:<24} {', '.join(hit.matched_keywords)}")
    click.echo(f"✅ {result.message}")
