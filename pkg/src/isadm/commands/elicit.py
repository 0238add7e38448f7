"""
STRIDE-per-element elicitation over a whole model.
"""
from pathlib import Path
from typing import Optional

import click

from .common import finish


@click.command()
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path),
              help="System model JSON")
@click.option("--matrix", "matrix_path", type=click.Path(path_type=Path), default=None,
              help="Applicability matrix JSON (default: standard STRIDE-per-element table)")
def elicit(model_path: Path, matrix_path: Optional[Path]) -> None:
    """List threat findings per STRIDE category.

    \b
    Examples:
        isadm elicit --model model.json
        isadm elicit --model model.json --matrix matrix.json
    """
    from ..services.model_service import elicit_file

    result = elicit_file(model_path, matrix_path)
    finish(result)

    for category, element_ids in result.data["by_category"].items():
        click.echo(f"{category.label:<24} {', '.join(element_ids) or '-'}")
    click.echo(f"✅ {result.message}")
