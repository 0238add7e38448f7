"""
Validate a system model file.
"""
from pathlib import Path

import click

from .common import finish


@click.command()
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path),
              help="System model JSON (DFD elements, boundaries, subsystems)")
def validate(model_path: Path) -> None:
    """Check a system model for structural violations.

    Exits 2 and lists every violation when the model is invalid.

    \b
    Examples:
        isadm validate --model branch_office_model.json
    """
    from ..services.model_service import validate_model_file

    result = validate_model_file(model_path)
    for violation in (result.data or {}).get("violations", []):
        click.echo(f"  {violation.code:<20} {violation.id or '-':<10} {violation.message}")
    finish(result)
    click.echo(f"✅ {result.message}")
