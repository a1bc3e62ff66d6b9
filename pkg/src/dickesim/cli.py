"""Command-line scenario runner.

Exit codes: 0 success, 2 config parse error, 3 config validation error,
4 engine error, 5 engine cross-check (acceptance) violation.
"""

from __future__ import annotations

import sys

import click

from . import __version__
from .errors import (AcceptanceViolation, DickesimError, ScenarioParseError,
                     ScenarioValidationError)
from .scenarios import (bundled_scenarios, compare_engines, load_config,
                        run_scenario)

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_ENGINE = 4
EXIT_ACCEPTANCE = 5


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, ScenarioParseError):
        return EXIT_PARSE
    if isinstance(exc, ScenarioValidationError):
        return EXIT_VALIDATION
    if isinstance(exc, AcceptanceViolation):
        return EXIT_ACCEPTANCE
    return EXIT_ENGINE


def _guarded(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DickesimError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_code(exc))


@click.group()
@click.version_option(__version__)
def main():
    """Collective spontaneous emission scenarios: rates, trajectories,
    preparation protocols, and engine cross-checks."""


def _common_options(fn):
    fn = click.option("--out-dir", default="out", show_default=True,
                      help="Directory for output artifacts.")(fn)
    fn = click.option("--seed-override", type=int, default=None,
                      help="Replace the geometry seed.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                      default="csv", show_default=True,
                      help="Tabular artifact format (summaries stay JSON).")(fn)
    return fn


@main.command()
@click.argument("config_path")
@_common_options
def run(config_path, out_dir, seed_override, fmt):
    """Run the scenario in CONFIG_PATH (a file or a bundled name)."""
    config = _guarded(load_config, config_path, seed_override)
    result = _guarded(run_scenario, config, out_dir, fmt)
    for path in result.artifacts:
        click.echo(path)


@main.command()
@click.argument("config_path")
@_common_options
def compare(config_path, out_dir, seed_override, fmt):
    """Cross-validate decay engines on the scenario in CONFIG_PATH."""
    config = _guarded(load_config, config_path, seed_override)
    result = _guarded(compare_engines, config, out_dir, fmt)
    for path in result.artifacts:
        click.echo(path)
    click.echo("all engine cross-checks passed")


@main.command("list-scenarios")
def list_scenarios():
    """List the bundled scenario names."""
    for name in sorted(bundled_scenarios()):
        click.echo(name)


if __name__ == "__main__":
    main()
