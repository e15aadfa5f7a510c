"""
Command line entry point for variadic nominal anti-unification.

    vnau gen --problem fixtures/two_lggs.vnau --algo rigid --output json

Reports go to stdout (or --out), diagnostics to stderr.
Exit codes: 0 success, 1 usage or input error, 2 truncated search,
3 a result failed verification.
"""

import json
import logging
import sys

import click

from services.clone_service import (
    ALGORITHMS, ATOMS_AUTO, FREE_BINDER_POLICIES, FREE_NONE, RunConfig, run,
)
from services.errors import VerificationError, VnauError
from services.problem_parser import load_problem
from services.vnau_engine import BINDERS_ALL, BINDERS_CANONICAL, SearchLimits

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TRUNCATED = 2
EXIT_VERIFICATION = 3

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


class _UsageExitCode:
    """Report command line usage errors with the input-error exit code."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as error:
            error.exit_code = EXIT_USAGE
            raise


class VnauCommand(_UsageExitCode, click.Command):
    pass


class VnauGroup(_UsageExitCode, click.Group):
    command_class = VnauCommand


@click.group(cls=VnauGroup)
@click.option("--verbose", "-v", is_flag=True, help="Log search progress to stderr.")
def cli(verbose):
    """Variadic nominal anti-unification."""
    configure_logging(verbose)


@cli.command()
@click.option("--problem", "problem_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Problem file to generalize.")
@click.option("--algo", type=click.Choice(ALGORITHMS), default="general", show_default=True)
@click.option("--rigidity", default="lcs", show_default=True, help="lcs, lcs-min=N or lcs-det.")
@click.option("--atoms", default=ATOMS_AUTO, show_default=True, help="auto, auto-fresh or a,b,c.")
@click.option("--minimize/--no-minimize", default=True, show_default=True)
@click.option("--max-states", type=click.IntRange(min=1), envvar="VNAU_MAX_STATES")
@click.option("--max-results", type=click.IntRange(min=1), envvar="VNAU_MAX_RESULTS")
@click.option("--output", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), help="Write the report here.")
@click.option("--binders", type=click.Choice([BINDERS_CANONICAL, BINDERS_ALL]),
              default=BINDERS_CANONICAL, show_default=True, help="Binders tried when decomposing abstractions.")
@click.option("--free-binders", type=click.Choice(FREE_BINDER_POLICIES), default=FREE_NONE, show_default=True)
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--check-invariants", is_flag=True, help="Verify every engine transition.")
@click.pass_context
def gen(ctx, problem_path, algo, rigidity, atoms, minimize, max_states, max_results,
        output, out, binders, free_binders, threads, check_invariants):
    """Compute generalizations of the two terms of a problem file."""
    config = RunConfig(
        algorithm=algo,
        rigidity=rigidity,
        atom_base=atoms,
        limits=SearchLimits(max_states=max_states, max_results=max_results),
        minimize=minimize,
        output=output,
        free_binders=free_binders,
        binder_choice=binders,
        workers=threads,
        check_invariants=check_invariants,
    )
    try:
        report = run(config, load_problem(problem_path))
    except VerificationError as error:
        click.echo(f"error: {error}", err=True)
        ctx.exit(EXIT_VERIFICATION)
    except (VnauError, ValueError) as error:
        click.echo(f"error: {error}", err=True)
        ctx.exit(EXIT_USAGE)

    if output == "json":
        text = json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    else:
        text = report.to_text()
    with click.open_file(out or "-", "w", encoding="utf-8") as stream:
        stream.write(text)

    if report.truncated:
        click.echo("warning: search limit reached; the report is partial", err=True)
        ctx.exit(EXIT_TRUNCATED)
    ctx.exit(EXIT_OK)


def main():
    cli(prog_name="vnau")


if __name__ == "__main__":
    main()
