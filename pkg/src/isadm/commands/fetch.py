"""
Download a raw intelligence dataset.
"""
from pathlib import Path

import click

from .common import finish


@click.command()
@click.option("--url", "--fetch-url", "url", required=True, help="Dataset URL (http or https)")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path),
              help="Destination file")
def fetch(url: str, out_path: Path) -> None:
    """Fetch dataset bytes. Refused while ISADM_OFFLINE is on (the default).

    \b
    Examples:
        ISADM_OFFLINE=0 isadm fetch --url https://example.org/enterprise.json --out raw.json
    """
    from ..services.intel_service import fetch as fetch_service

    result = fetch_service(url, out_path)
    finish(result)
    click.echo(f"✅ {result.message}")
