"""Helpers shared by CLI commands."""
from typing import List, Optional

import click

from ..core.service_result import ServiceResult


def split_csv(value: Optional[str]) -> List[str]:
    """Split a comma-separated option into trimmed non-empty items."""
    if not value:
        return []
    return [item.strip() for item in value.split(",") if item.strip()]


def finish(result: ServiceResult) -> None:
    """Print warnings and the failure message, then exit with the result code."""
    for warning in result.warnings:
        click.echo(f"⚠️  {warning}", err=True)
    if not result.success:
        click.echo(f"❌ {result.message}", err=True)
        raise SystemExit(result.code)
