"""
Run the full threat analysis pipeline.
"""
from pathlib import Path
from typing import Optional, Tuple

import click

from .common import finish


@click.command()
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path),
              help="Run configuration JSON")
@click.option("--subsystem", "subsystems", multiple=True,
              help="Subsystem id to analyse (repeatable; default: all)")
@click.option("--threshold", default=None, help="top:N, min:M or all")
@click.option("--rank-by", "rank_by", type=click.Choice(["freq", "composite"]), default=None,
              help="Rank priorities by frequency or frequency x impact")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Output directory (default: from config)")
@click.option("--lock-timeout", type=float, default=5.0, show_default=True,
              help="Seconds to wait for the output directory lock")
def analyze(
    config_path: Path,
    subsystems: Tuple[str, ...],
    threshold: Optional[str],
    rank_by: Optional[str],
    out_dir: Optional[Path],
    lock_timeout: float,
) -> None:
    """Model, elicit, merge, enumerate, prioritize and map countermeasures.

    \b
    Examples:
        isadm analyze --config run.json --out out/
        isadm analyze --config run.json --subsystem backup --threshold min:5
        isadm analyze --config run.json --rank-by composite --threshold top:5
    """
    from ..core.config import load_run_config
    from ..core.exceptions import IsadmError
    from ..services.pipeline_service import analyze as analyze_service

    try:
        config = load_run_config(config_path).with_overrides(
            threshold=threshold,
            rank_by=rank_by,
            subsystems=subsystems,
            out=out_dir,
        )
    except IsadmError as e:
        click.echo(f"❌ {e}", err=True)
        raise SystemExit(e.exit_code)

    result = analyze_service(config, lock_timeout=lock_timeout)
    finish(result)

    for path in result.data["written"]:
        click.echo(f"  {path}")
    click.echo(f"✅ {result.message}")
