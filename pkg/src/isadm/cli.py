"""
isadm command-line interface.
"""
import sys

import click

from . import __version__
from .commands import analyze, elicit, fetch, groups, merge, validate

EXIT_USAGE = 1


class IsadmGroup(click.Group):
    """Click group whose usage errors share the configuration exit code."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)


@click.group(cls=IsadmGroup)
@click.version_option(version=__version__, prog_name="isadm")
def cli():
    """isadm - STRIDE threat modeling prioritized by ATT&CK intelligence."""


cli.add_command(validate.validate)
cli.add_command(elicit.elicit)
cli.add_command(groups.groups)
cli.add_command(merge.merge)
cli.add_command(fetch.fetch)
cli.add_command(analyze.analyze)


def main():
    """Entry point for the CLI."""
    from .core.logging_config import setup_logging
    from .core.paths import forced_log_level

    setup_logging(force_level=forced_log_level())

    try:
        cli()
    except KeyboardInterrupt:
        click.echo("\n⚠️  Interrupted", err=True)
        sys.exit(130)
    except Exception as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
