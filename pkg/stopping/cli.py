"""Command line interface.

Every subcommand writes one CSV or JSON document to standard output (or
``--output-file``) and exits with 0 on success, 1 when the input is
rejected and 2 when a verification fails.  Diagnostics go to standard error.
"""

import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click

from stopping import controller
from stopping.config import Settings
from stopping.consts import DEFAULT_OFFERS, DEFAULT_XI_SWEEP, OutputFormat
from stopping.domain import AmbiguitySpec, DiscreteDistribution
from stopping.errors import InvalidParameter, StoppingError
from stopping.serializers.serializer import (
    Result,
    distribution_from_json,
    serialize,
    spec_from_json,
)


logger = logging.getLogger(__name__)

Decorator = Callable[[Callable[..., Any]], Callable[..., Any]]


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as ex:
        raise InvalidParameter(f"Cannot read '{path}': {ex.strerror}.") from ex


def load_distribution(path: str) -> DiscreteDistribution:
    return distribution_from_json(_read_text(path))


def _spec(params: Dict[str, Any]) -> AmbiguitySpec:
    flags = [params[key] for key in ("kind", "mu", "sigma2", "mad", "L")]
    if params["spec_file"] is not None:
        if any(flag is not None for flag in flags):
            raise InvalidParameter("Use either --spec or the parameter flags, not both.")
        spec = spec_from_json(_read_text(params["spec_file"]))
        return controller.build_spec(
            spec.kind.value, spec.mu, spec.sigma2, spec.mad, spec.support_upper
        )
    return controller.build_spec(*flags)


def spec_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options describing the ambiguity set."""
    options: List[Decorator] = [
        click.option("--spec", "spec_file", type=click.Path(dir_okay=False), help="Spec JSON file."),
        click.option("--kind", help="Ambiguity set kind; inferred from the flags when omitted."),
        click.option("--mu", type=float, help="Mean of the offers."),
        click.option("--sigma2", type=float, help="Variance of the offers."),
        click.option("--mad", type=float, help="Mean absolute deviation of the offers."),
        click.option("--L", "L", type=float, help="Upper bound of the support."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def output_options(default: OutputFormat) -> Decorator:
    def decorate(func: Callable[..., Any]) -> Callable[..., Any]:
        func = click.option(
            "--output-file", type=click.Path(dir_okay=False), help="Write here instead of stdout."
        )(func)
        return click.option("--out", "fmt", default=default.value, show_default=True,
                            help="Output format: csv or json.")(func)

    return decorate


def _override(field: str) -> Callable[[click.Context, click.Parameter, Optional[int]], Optional[int]]:
    """Option callback replacing one of the configured defaults of the command."""

    def callback(ctx: click.Context, param: click.Parameter, value: Optional[int]) -> Optional[int]:
        defaults = ctx.find_object(controller.Defaults)
        if value is not None and defaults is not None:
            ctx.obj = defaults._replace(**{field: value})
        return value

    return callback


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """``--seed`` and ``--threads``, accepted by every command.

    Only simulations draw random numbers and only simulations and
    verifications use worker threads; the other commands are deterministic
    and single threaded whatever the flags say.
    """
    func = click.option("--threads", type=int, expose_value=False, callback=_override("threads"),
                        help="Worker threads.")(func)
    return click.option("--seed", type=int, expose_value=False, callback=_override("seed"),
                        help="Root seed of the random streams.")(func)


def _emit(compute: Callable[[], Result], fmt: str, output_file: Optional[str]) -> int:
    """Run ``compute``, serialize its result or error and write it out."""
    result: Result
    try:
        result = compute()
    except StoppingError as ex:
        click.echo(f"error: {ex.error}", err=True)
        result = ex
    output = serialize(result, fmt)
    if output_file is None:
        click.echo(output.text, nl=False)
    else:
        try:
            Path(output_file).write_bytes(output.content)
        except OSError as ex:
            click.echo(f"error: cannot write '{output_file}': {ex.strerror}", err=True)
            return 1
    return output.status_code


@click.group()
@click.option("--verbose", is_flag=True, help="Log debug records to stderr.")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """Distributionally robust stopping thresholds."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    settings = Settings()
    config = {key: getattr(settings, key) for key in dir(settings) if key.isupper()}
    ctx.obj = controller.load_defaults(config)


@cli.command()
@spec_options
@click.option("--n", "n", type=int, default=DEFAULT_OFFERS, show_default=True, help="Number of offers.")
@click.option("--method", default="closed-form", show_default=True,
              help="generic, closed-form or both.")
@run_options
@output_options(OutputFormat.CSV)
def thresholds(n: int, method: str, fmt: str, output_file: Optional[str], **params: Any) -> int:
    """Robust thresholds T(0..n)."""
    return _emit(lambda: controller.get_thresholds(_spec(params), n, method), fmt, output_file)


@cli.command()
@spec_options
@click.option("--xi", type=float, required=True, help="Argument of E[min(xi, X)].")
@run_options
@output_options(OutputFormat.JSON)
def momentbound(xi: float, fmt: str, output_file: Optional[str], **params: Any) -> int:
    """Tight bound on E[min(xi, X)] with its worst case and dual certificate."""
    return _emit(lambda: controller.get_momentbound(_spec(params), xi), fmt, output_file)


@cli.command()
@spec_options
@click.option("--n", "n", type=int, default=DEFAULT_OFFERS, show_default=True, help="Number of offers.")
@click.option("--rule", default="optimal", show_default=True, help="optimal, first or static:<T>.")
@click.option("--nature", default="worst", show_default=True,
              help="worst, fixed:<dist.json> or correlated:<dist.json>.")
@click.option("--episodes", type=int, help="Number of episodes.")
@click.option("--block-size", type=int, help="Episodes per random stream.")
@run_options
@output_options(OutputFormat.JSON)
@click.pass_obj
def simulate(
    defaults: controller.Defaults,
    n: int,
    rule: str,
    nature: str,
    episodes: Optional[int],
    block_size: Optional[int],
    fmt: str,
    output_file: Optional[str],
    **params: Any,
) -> int:
    """Monte Carlo payoff of a stopping rule against a nature strategy."""
    return _emit(
        lambda: controller.get_simulation(
            _spec(params),
            n,
            rule,
            nature,
            episodes=defaults.episodes if episodes is None else episodes,
            seed=defaults.seed,
            load=load_distribution,
            threads=defaults.threads,
            block_size=defaults.block_size if block_size is None else block_size,
        ),
        fmt,
        output_file,
    )


@cli.command()
@spec_options
@click.option("--xi-sweep", "xi_count", type=int, default=DEFAULT_XI_SWEEP, show_default=True,
              help="Number of xi values checked.")
@click.option("--grid", "--grid-points", "grid_points", type=int,
              help="Grid size of the enumeration oracle.")
@click.option("--n", "n", type=int, default=DEFAULT_OFFERS, show_default=True,
              help="Number of offers of the compared schedules.")
@run_options
@output_options(OutputFormat.JSON)
@click.pass_obj
def verify(
    defaults: controller.Defaults,
    xi_count: int,
    grid_points: Optional[int],
    n: int,
    fmt: str,
    output_file: Optional[str],
    **params: Any,
) -> int:
    """Check the closed forms against brute-force oracles."""
    return _emit(
        lambda: controller.get_verification(
            _spec(params),
            xi_count=xi_count,
            grid_points=defaults.grid_points if grid_points is None else grid_points,
            n=n,
            threads=defaults.threads,
        ),
        fmt,
        output_file,
    )


@cli.command()
@click.option("--figure", "number", type=int, required=True, help="1 (turning point) or 5 (masses).")
@click.option("--mu", type=float, required=True)
@click.option("--sigma2", type=float, required=True)
@click.option("--L", "L", type=float, required=True)
@click.option("--n", "n", type=int, default=DEFAULT_OFFERS, show_default=True, help="Number of offers.")
@run_options
@output_options(OutputFormat.CSV)
def figure(
    number: int, mu: float, sigma2: float, L: float, n: int, fmt: str, output_file: Optional[str]
) -> int:
    """Data series of the turning-point and worst-case mass figures."""
    return _emit(lambda: controller.get_figure(number, mu, sigma2, L, n), fmt, output_file)


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return its exit code."""
    try:
        code = cli.main(args=argv, prog_name="stopping", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as ex:
        ex.show()
        return 1
    return code if isinstance(code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
