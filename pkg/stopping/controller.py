"""Controller shared by the command line and the web routes."""

import logging
from typing import Any, Callable, Mapping, NamedTuple, Optional, Union

from stopping import consts
from stopping.ambiguity import membership_discrepancy, validate
from stopping.consts import DUAL_TOL, MOMENT_TOL, AmbiguityKind, Method
from stopping.domain import (
    AmbiguitySpec,
    DiscreteDistribution,
    FigureData,
    MomentBoundCertificate,
    SimulationReport,
    ThresholdResult,
    ThresholdSchedule,
    VerificationReport,
)
from stopping.errors import InvalidDistribution, InvalidParameter, VerificationFailed
from stopping.game import (
    FirstOffer,
    FixedIID,
    FullyCorrelated,
    NatureStrategy,
    PerStepWorstCase,
    ScheduleRule,
    StaticThreshold,
    StoppingRule,
    monte_carlo,
    static_threshold_rule,
)
from stopping.oracle import certificate_for, verify_spec
from stopping.thresholds import (
    bound_oracle,
    figure_five_masses,
    figure_one_series,
    robust_thresholds,
    robust_thresholds_generic,
    thresholds_two_point_large_L,
)


logger = logging.getLogger(__name__)

DistributionLoader = Callable[[str], DiscreteDistribution]


class Defaults(NamedTuple):
    seed: int
    episodes: int
    grid_points: int
    threads: int
    block_size: int


def config_int(config: Mapping[str, Any], key: str, default: int, minimum: Optional[int] = None) -> int:
    """Read an integer setting, falling back to ``default`` when it is unusable."""
    value = config.get(key, default)
    try:
        parsed = int(value)
    except (TypeError, ValueError):
        logger.error("Invalid configuration - %s: '%s'. Setting to %s.", key, value, default)
        return default
    if minimum is not None and parsed < minimum:
        logger.error("Invalid configuration - %s: '%s'. Setting to %s.", key, value, default)
        return default
    return parsed


def load_defaults(config: Mapping[str, Any]) -> Defaults:
    """Numeric defaults from a Flask config or a :class:`~stopping.config.Settings` mapping."""
    return Defaults(
        seed=config_int(config, "STOPPING_SEED", consts.DEFAULT_SEED, minimum=0),
        episodes=config_int(config, "STOPPING_EPISODES", consts.DEFAULT_EPISODES, minimum=1),
        grid_points=config_int(config, "STOPPING_GRID_POINTS", consts.DEFAULT_GRID_POINTS, minimum=3),
        threads=config_int(config, "STOPPING_THREADS", consts.DEFAULT_THREADS, minimum=1),
        block_size=config_int(config, "STOPPING_BLOCK_SIZE", consts.DEFAULT_BLOCK_SIZE, minimum=1),
    )


def infer_kind(
    sigma2: Optional[float], mad: Optional[float], L: Optional[float]
) -> AmbiguityKind:
    """Kind implied by which parameters were given."""
    if mad is not None:
        return AmbiguityKind.MEAN_MAD_SUPPORT if L is not None else AmbiguityKind.MEAN_MAD
    if sigma2 is not None:
        return AmbiguityKind.MEAN_VAR_SUPPORT if L is not None else AmbiguityKind.MEAN_VARIANCE
    return AmbiguityKind.MEAN_ONLY


def build_spec(
    kind: Optional[str],
    mu: Optional[float],
    sigma2: Optional[float] = None,
    mad: Optional[float] = None,
    L: Optional[float] = None,
) -> AmbiguitySpec:
    """Build and validate a spec; without ``kind`` it is inferred from the parameters.

    Raises
    ------
    ValidationError
        If the kind is unknown, a parameter is missing or out of range, or
        the set is empty.
    """
    if mu is None:
        raise InvalidParameter("Parameter mu is required.")
    resolved = AmbiguityKind.get(kind) if kind else infer_kind(sigma2, mad, L)
    return validate(AmbiguitySpec(kind=resolved, mu=mu, sigma2=sigma2, mad=mad, support_upper=L))


def get_thresholds(spec: AmbiguitySpec, n: int, method: Union[Method, str] = Method.CLOSED_FORM) -> ThresholdResult:
    """Compute the schedule of ``spec`` for ``n`` offers.

    Raises
    ------
    VerificationFailed
        With ``Method.BOTH`` when the two schedules differ beyond tolerance.
    """
    validate(spec)
    method = Method.get(method)
    report = None
    if spec.kind is AmbiguityKind.TWO_POINT and spec.L >= 2 * spec.mu:
        closed, report = thresholds_two_point_large_L(spec.mu, spec.var, spec.L, n)
    else:
        closed = robust_thresholds(spec, n)
    if method is Method.CLOSED_FORM:
        return ThresholdResult(spec=spec, method=method, schedule=closed, turning_points=report)

    generic = robust_thresholds_generic(spec, n, bound_oracle(spec))
    if method is Method.GENERIC:
        return ThresholdResult(spec=spec, method=method, schedule=generic, turning_points=report)

    difference = max(abs(a - b) for a, b in zip(closed.values, generic.values))
    scale = max(1.0, spec.L) if spec.support_upper is not None else max(1.0, spec.mu)
    if difference > DUAL_TOL * scale:
        raise VerificationFailed(
            f"Closed-form and generic schedules differ by {difference!r} for {spec.kind}."
        )
    return ThresholdResult(
        spec=spec,
        method=method,
        schedule=closed,
        turning_points=report,
        generic=generic,
        max_difference=difference,
    )


def get_momentbound(spec: AmbiguitySpec, xi: float) -> MomentBoundCertificate:
    """Certificate of the tight bound on ``E[min(xi, X)]``."""
    validate(spec)
    cert = certificate_for(spec, xi)
    logger.debug("Bound at xi=%s for %s: %s (%s)", xi, spec.kind, cert.value, cert.regime_name)
    return cert


def parse_rule(token: str, schedule: ThresholdSchedule) -> StoppingRule:
    """Rule from ``optimal``, ``first`` or ``static:<T>``."""
    name, _, argument = token.strip().partition(":")
    name = name.lower()
    if name == "optimal" and not argument:
        return ScheduleRule(schedule)
    if name == "first" and not argument:
        return FirstOffer()
    if name == "static":
        try:
            threshold = float(argument)
        except ValueError as ex:
            raise InvalidParameter(f"Static threshold is not a number: '{argument}'.") from ex
        return static_threshold_rule(threshold)
    raise InvalidParameter(
        f"Unsupported rule '{token}'. Valid options are: optimal, first, static:<T>."
    )


def _member(dist: DiscreteDistribution, spec: AmbiguitySpec) -> DiscreteDistribution:
    gap = membership_discrepancy(dist, spec)
    if gap > MOMENT_TOL:
        raise InvalidDistribution(f"Distribution is not a member of the {spec.kind} set (off by {gap!r}).")
    return dist


def parse_nature(
    token: str,
    spec: AmbiguitySpec,
    rule: StoppingRule,
    optimal: ThresholdSchedule,
    load: DistributionLoader,
) -> NatureStrategy:
    """Nature from ``worst``, ``fixed:<path>`` or ``correlated:<path>``.

    ``worst`` answers a threshold rule with the worst case at each of its
    thresholds; against a static threshold that is the worst case at the
    threshold itself, against the first-offer rule the optimal schedule is
    used.
    """
    name, _, argument = token.strip().partition(":")
    name = name.lower()
    if name == "worst" and not argument:
        if isinstance(rule, ScheduleRule):
            return PerStepWorstCase(spec, rule.schedule)
        if isinstance(rule, StaticThreshold):
            n = optimal.n
            flat = ThresholdSchedule(n=n, values=(rule.threshold,) * (n + 1))
            return PerStepWorstCase(spec, flat)
        return PerStepWorstCase(spec, optimal)
    if name == "fixed" and argument:
        return FixedIID(_member(load(argument), spec))
    if name == "correlated" and argument:
        return FullyCorrelated(_member(load(argument), spec))
    raise InvalidParameter(
        f"Unsupported nature '{token}'. Valid options are: worst, fixed:<file>, correlated:<file>."
    )


def get_simulation(
    spec: AmbiguitySpec,
    n: int,
    rule: str,
    nature: str,
    episodes: int,
    seed: int,
    load: DistributionLoader,
    threads: int = consts.DEFAULT_THREADS,
    block_size: int = consts.DEFAULT_BLOCK_SIZE,
) -> SimulationReport:
    """Simulate ``rule`` against ``nature`` on ``n`` offers."""
    validate(spec)
    optimal = robust_thresholds(spec, n)
    stopping_rule = parse_rule(rule, optimal)
    strategy = parse_nature(nature, spec, stopping_rule, optimal, load)
    return monte_carlo(
        stopping_rule, strategy, n, episodes, seed, threads=threads, block_size=block_size
    )


def get_verification(
    spec: AmbiguitySpec,
    xi_count: int = consts.DEFAULT_XI_SWEEP,
    grid_points: int = consts.DEFAULT_GRID_POINTS,
    n: int = consts.DEFAULT_OFFERS,
    threads: int = consts.DEFAULT_THREADS,
) -> VerificationReport:
    """Check the closed forms of ``spec`` against the oracles."""
    return verify_spec(spec, xi_count=xi_count, grid_points=grid_points, n=n, threads=threads)


def get_figure(number: int, mu: float, sigma2: float, L: float, n: int) -> FigureData:
    """Data behind the turning-point figure (1) or the worst-case mass figure (5)."""
    if number == 1:
        validate(AmbiguitySpec(kind=AmbiguityKind.TWO_POINT, mu=mu, sigma2=sigma2, support_upper=L))
        return FigureData(number=1, rows=tuple(figure_one_series(mu, sigma2, L, n)))
    if number == 5:
        validate(AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=mu, sigma2=sigma2, support_upper=L))
        return FigureData(number=5, rows=tuple(figure_five_masses(mu, sigma2, L, n)))
    raise InvalidParameter(f"Unknown figure {number}. Valid options are: 1, 5.")
