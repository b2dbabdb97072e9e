"""Tight bounds on ``E[min(xi, X)]`` with primal-dual certificates.

Two moment problems are solved in closed form: mean, variance and support
``[0, L]`` (three regimes), and mean, mean absolute deviation and support
``[0, L]`` (four regimes, ``L`` possibly infinite).  Every bound comes with
an extremal distribution and a majorant ``lambda0 + lambda1*x +
lambda2*phi(x)`` whose moment-weighted value equals the bound.
"""

import logging
import math
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from stopping.ambiguity import validate, witness_distribution
from stopping.consts import (
    DEFAULT_MAJORANT_GRID,
    MOMENT_TOL,
    SUPPORT_TOL,
    TRIPLE_PROB_TOL,
    AmbiguityKind,
    Basis,
)
from stopping.domain import AmbiguitySpec, DiscreteDistribution, Majorant, MomentBoundCertificate
from stopping.errors import (
    InfeasibleSupportTriple,
    InvalidParameter,
    PreconditionViolated,
    XiOutOfRange,
)


logger = logging.getLogger(__name__)

Rhs = Tuple[float, float, float]

STATEMENT = "statement"
PROOF = "proof"
BOTH = "both"


def basis_function(basis: Basis, center: float) -> Callable[[np.ndarray], np.ndarray]:
    """Third moment function of a basis: ``x**2`` or ``|x - center|``."""
    if basis is Basis.POLYNOMIAL2:
        return np.square
    return lambda x: np.abs(x - center)


def distinct_points(points: Sequence[float]) -> np.ndarray:
    """Sorted points with near-coincident entries merged."""
    kept: List[float] = []
    for point in sorted(float(p) for p in points):
        if not kept or point - kept[-1] > SUPPORT_TOL * max(1.0, abs(point)):
            kept.append(point)
    return np.array(kept)


def solve_on_support(
    points: Sequence[float], rhs: Rhs, basis: Basis, center: float = 0.0
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Probabilities on ``points`` matching the moments ``rhs``, or None.

    Coinciding points are merged first; with fewer than three distinct points
    the overdetermined system is solved in the least squares sense and
    accepted only when it is consistent.

    Returns
    -------
    Optional[Tuple[np.ndarray, np.ndarray]]
        The distinct sorted points and their probabilities, or None if the
        system is singular, inconsistent or has a probability outside
        ``[-1e-12, 1 + 1e-12]``.
    """
    xs = distinct_points(points)
    matrix = np.vstack([np.ones_like(xs), xs, basis_function(basis, center)(xs)])
    target = np.array(rhs, dtype=float)
    try:
        if len(xs) == 3:
            probs = np.linalg.solve(matrix, target)
        else:
            probs = np.linalg.lstsq(matrix, target, rcond=None)[0]
    except np.linalg.LinAlgError:
        return None
    scale = max(1.0, float(np.max(np.abs(target))))
    if np.max(np.abs(matrix @ probs - target)) > MOMENT_TOL * scale:
        return None
    if np.any(probs < -TRIPLE_PROB_TOL) or np.any(probs > 1 + TRIPLE_PROB_TOL):
        return None
    return xs, probs


def constructed_distribution(
    points: Union[Sequence[float], np.ndarray], probs: Union[Sequence[float], np.ndarray], L: float
) -> DiscreteDistribution:
    """Build a distribution from solver output, clamping round-off weights.

    Raises
    ------
    InfeasibleSupportTriple
        If a weight lies outside ``[-1e-12, 1 + 1e-12]``.
    """
    weights = np.asarray(probs, dtype=float)
    if np.any(weights < -TRIPLE_PROB_TOL) or np.any(weights > 1 + TRIPLE_PROB_TOL):
        raise InfeasibleSupportTriple(
            f"Weights {weights.tolist()} on {list(points)} are not probabilities."
        )
    weights = np.clip(weights, 0.0, 1.0)
    weights = weights / weights.sum()
    return DiscreteDistribution.from_atoms(
        zip(points, weights), support_upper=L if math.isfinite(L) else None
    )


def _support_distribution(
    points: Sequence[float], rhs: Rhs, basis: Basis, center: float, L: float
) -> DiscreteDistribution:
    solved = solve_on_support(points, rhs, basis, center)
    if solved is None:
        raise InfeasibleSupportTriple(
            f"No distribution on {tuple(points)} matches the moments {rhs}."
        )
    return constructed_distribution(*solved, L=L)


def _check_xi(xi: float, L: float) -> None:
    if not 0.0 <= xi <= L:
        raise XiOutOfRange(f"Argument xi={xi!r} is outside [0, {L!r}].")


def _variance_spec(mu: float, sigma2: float, L: float) -> AmbiguitySpec:
    return validate(
        AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=mu, sigma2=sigma2, support_upper=L)
    )


def _mad_spec(mu: float, d: float, L: float) -> AmbiguitySpec:
    if math.isfinite(L):
        return validate(
            AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD_SUPPORT, mu=mu, mad=d, support_upper=L)
        )
    return validate(AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD, mu=mu, mad=d))


def cox_breakpoints(mu: float, sigma2: float, L: float) -> Tuple[float, float]:
    """Regime boundaries ``mu - sigma2/(L - mu)`` and ``mu + sigma2/mu``."""
    if sigma2 == 0:
        return mu, mu
    return mu - sigma2 / (L - mu), mu + sigma2 / mu


def cox_regime(mu: float, sigma2: float, L: float, xi: float) -> int:
    """Regime of the variance bound at ``xi``; breakpoints belong to the lower regime."""
    if sigma2 == 0:
        return 0
    low, high = cox_breakpoints(mu, sigma2, L)
    if xi <= low:
        return 1
    if xi <= high:
        return 2
    return 3


def cox_upper_bound(mu: float, sigma2: float, L: float, xi: float) -> float:
    """Return ``max E[min(xi, X)]`` over mean ``mu``, variance ``sigma2``, support ``[0, L]``.

    Parameters
    ----------
    mu, sigma2, L : float
        A non-empty mean-variance-support set.
    xi : float
        Argument in ``[0, L]``.

    Returns
    -------
    float
        ``xi`` below ``mu - sigma2/(L - mu)``, ``mu`` above ``mu + sigma2/mu``
        and ``(mu*(L + xi) - mu**2 - sigma2)/L`` in between.

    Raises
    ------
    XiOutOfRange
        If ``xi`` is outside ``[0, L]``.
    """
    _variance_spec(mu, sigma2, L)
    _check_xi(xi, L)
    regime = cox_regime(mu, sigma2, L, xi)
    if regime == 0:
        return min(xi, mu)
    if regime == 1:
        return xi
    if regime == 2:
        return (mu * (L + xi) - (mu * mu + sigma2)) / L
    return mu


def _cox_middle_weights(mu: float, sigma2: float, L: float, xi: float) -> List[float]:
    second = mu * mu + sigma2
    return [
        (L * xi - (L + xi) * mu + second) / (L * xi),
        (L * mu - second) / ((L - xi) * xi),
        (second - xi * mu) / ((L - xi) * L),
    ]


def cox_worst_case(mu: float, sigma2: float, L: float, xi: float) -> MomentBoundCertificate:
    """Extremal distribution and majorant for :func:`cox_upper_bound`.

    The middle regime uses the three-point law on ``{0, xi, L}`` with the
    parabola through ``(0, 0)``, ``(xi, xi)`` and ``(L, xi)``; the upper
    regime solves the moment system on ``{0, mu, xi}`` against the identity
    majorant; the lower regime solves it on ``{xi, mu, L}`` against the
    constant ``xi``.

    Raises
    ------
    InfeasibleSupportTriple
        If the moment system of the selected regime has no probability solution.
    """
    value = cox_upper_bound(mu, sigma2, L, xi)
    regime = cox_regime(mu, sigma2, L, xi)
    rhs: Rhs = (1.0, mu, mu * mu + sigma2)

    if regime == 0:
        primal = DiscreteDistribution.point_mass(mu)
        lambdas = (xi, 0.0, 0.0) if xi <= mu else (0.0, 1.0, 0.0)
    elif regime == 1:
        primal = _support_distribution((xi, mu, L), rhs, Basis.POLYNOMIAL2, 0.0, L)
        lambdas = (xi, 0.0, 0.0)
    elif regime == 2:
        if L - xi > SUPPORT_TOL * L:
            primal = constructed_distribution((0.0, xi, L), _cox_middle_weights(mu, sigma2, L, xi), L)
        else:
            primal = _support_distribution((0.0, xi, L), rhs, Basis.POLYNOMIAL2, 0.0, L)
        lambdas = (0.0, (L + xi) / L, -1.0 / L)
    else:
        primal = _support_distribution((0.0, mu, xi), rhs, Basis.POLYNOMIAL2, 0.0, L)
        lambdas = (0.0, 1.0, 0.0)

    logger.debug("Variance bound at xi=%s: regime %s, value %s", xi, regime, value)
    return MomentBoundCertificate(
        value=value,
        regime=regime,
        primal=primal,
        dual=Majorant(basis=Basis.POLYNOMIAL2, lambdas=lambdas),
        xi=xi,
        rhs=rhs,
    )


def mad_breakpoints(mu: float, d: float, L: float) -> Tuple[float, float, float]:
    """Return the lower breakpoint candidates and the upper breakpoint of the MAD bound.

    Returns
    -------
    Tuple[float, float, float]
        ``(xi1, xi1_alt, xi2)`` with ``xi1 = mu - d*(L - mu)/(2*(L - mu) - d)``,
        ``xi1_alt = mu - d*L/(2*(L - mu))`` and ``xi2 = 2*mu**2/(2*mu - d)``.
        The lower candidates are ``mu`` for an infinite ``L``.
    """
    xi2 = 2 * mu * mu / (2 * mu - d)
    if not math.isfinite(L) or d == 0:
        return mu, mu, xi2
    spread = L - mu
    return mu - d * spread / (2 * spread - d), mu - d * L / (2 * spread), xi2


def mad_upper_bound(mu: float, d: float, L: float, xi: float) -> float:
    """Return ``max E[min(xi, X)]`` over mean ``mu``, MAD ``d``, support ``[0, L]``.

    ``L`` may be ``inf``; the set is then unbounded above and only
    ``xi == 0`` or ``xi >= mu`` are admissible.

    Raises
    ------
    XiOutOfRange
        If ``xi`` is outside ``[0, L]``.
    PreconditionViolated
        If ``L`` is infinite and ``0 < xi < mu``.
    """
    return mad_worst_case(mu, d, L, xi).value


class _Candidate(NamedTuple):
    regime: int
    value: float
    primal: Optional[DiscreteDistribution]
    lambdas: Tuple[float, float, float]


def _mad_left_candidates(mu: float, d: float, L: float, xi: float, rhs: Rhs) -> List[_Candidate]:
    spread = L - mu
    solved = solve_on_support((xi, mu, L), rhs, Basis.MAD, mu)
    lower = constructed_distribution(*solved, L=L) if solved is not None else None

    middle = None
    if xi > 0:
        weights = [
            1 - mu / xi + d * (L - xi) / (2 * xi * spread),
            mu / xi - d * L / (2 * xi * spread),
            d / (2 * spread),
        ]
        if min(weights) >= -TRIPLE_PROB_TOL:
            middle = constructed_distribution((0.0, xi, L), weights, L)
    return [
        _Candidate(1, xi, lower, (xi, 0.0, 0.0)),
        _Candidate(
            2,
            mu - d * (L - xi) / (2 * spread),
            middle,
            (
                mu * (L - xi) / (2 * spread),
                (L + xi - 2 * mu) / (2 * spread),
                -(L - xi) / (2 * spread),
            ),
        ),
    ]


def mad_worst_case(mu: float, d: float, L: float, xi: float) -> MomentBoundCertificate:
    """Extremal distribution and majorant of the mean-MAD-support bound.

    Right of the mean the bound is ``xi*(1 - d/(2*mu))`` up to
    ``xi2 = 2*mu**2/(2*mu - d)`` and ``mu`` beyond.  Left of the mean two
    closed forms compete: the constant ``xi`` on ``{xi, mu, L}`` and
    ``mu - d*(L - xi)/(2*(L - mu))`` on ``{0, xi, L}``.  Both candidate lower
    breakpoints are computed; the certificate keeps the larger value among
    the candidates whose primal is feasible and records in
    ``breakpoint_source`` which breakpoint classifies ``xi`` the same way.

    Raises
    ------
    XiOutOfRange
        If ``xi`` is outside ``[0, L]``.
    PreconditionViolated
        If ``L`` is infinite and ``0 < xi < mu``.
    InfeasibleSupportTriple
        If no regime yields a feasible primal.
    """
    spec = _mad_spec(mu, d, L)
    _check_xi(xi, L)
    rhs: Rhs = (1.0, mu, d)
    source: Optional[str] = None

    if d == 0:
        regime = 0
        value = min(xi, mu)
        primal = DiscreteDistribution.point_mass(mu)
        lambdas: Tuple[float, float, float] = (xi, 0.0, 0.0) if xi <= mu else (0.0, 1.0, 0.0)
    elif xi == 0 and not math.isfinite(L):
        regime, value = 0, 0.0
        primal = witness_distribution(spec)
        lambdas = (0.0, 0.0, 0.0)
    elif xi < mu or (xi == mu and math.isfinite(L)):
        if not math.isfinite(L):
            raise PreconditionViolated(
                f"Mean-MAD bound without support bound is undefined for 0 < xi={xi!r} < mu={mu!r}."
            )
        xi1, xi1_alt, _ = mad_breakpoints(mu, d, L)
        best = max(
            (c for c in _mad_left_candidates(mu, d, L, xi, rhs) if c.primal is not None),
            key=lambda c: c.value,
            default=None,
        )
        if best is None or best.primal is None:
            raise InfeasibleSupportTriple(f"No MAD regime is feasible at xi={xi!r}.")
        primal = best.primal
        regime, value, lambdas = best.regime, best.value, best.lambdas
        by_statement = (xi <= xi1) == (regime == 1)
        by_proof = (xi <= xi1_alt) == (regime == 1)
        source = BOTH if by_statement and by_proof else STATEMENT if by_statement else PROOF
        if source != BOTH:
            logger.warning(
                "Lower MAD breakpoints disagree at xi=%s (%s vs %s); %s one matches regime %s",
                xi, xi1, xi1_alt, source, regime,
            )
    else:
        xi2 = 2 * mu * mu / (2 * mu - d)
        if xi <= xi2:
            regime = 3
            value = xi * (1 - d / (2 * mu))
            primal = DiscreteDistribution.from_atoms(
                [(0.0, d / (2 * mu)), (xi2, 1 - d / (2 * mu))],
                support_upper=L if math.isfinite(L) else None,
            )
            lambdas = (xi / 2, xi / (2 * mu), -xi / (2 * mu))
        else:
            regime, value = 4, mu
            primal = _support_distribution((0.0, mu, xi), rhs, Basis.MAD, mu, L)
            lambdas = (0.0, 1.0, 0.0)

    logger.debug("MAD bound at xi=%s: regime %s, value %s", xi, regime, value)
    return MomentBoundCertificate(
        value=value,
        regime=regime,
        primal=primal,
        dual=Majorant(basis=Basis.MAD, lambdas=lambdas, center=mu),
        xi=xi,
        rhs=rhs,
        breakpoint_source=source,
    )


def check_majorant(
    m: Majorant, xi: float, L: float, grid_points: int = DEFAULT_MAJORANT_GRID
) -> float:
    """Largest amount by which ``min(xi, x)`` exceeds the majorant on ``[0, L]``.

    The uniform grid is augmented with the kinks ``xi`` and the basis center.
    An infinite ``L`` is replaced by ``4*max(xi, center, 1)``.

    Returns
    -------
    float
        Maximal violation; nonpositive for a feasible majorant.
    """
    if grid_points < 2:
        raise InvalidParameter(f"Majorant grid needs at least 2 points, got {grid_points}.")
    upper = L if math.isfinite(L) else 4 * max(xi, m.center, 1.0)
    grid = np.linspace(0.0, upper, grid_points)
    kinks = np.array([p for p in (xi, m.center) if 0.0 <= p <= upper])
    grid = np.union1d(grid, kinks)
    violation = np.minimum(xi, grid) - np.asarray(m.evaluate(grid))
    return float(np.max(violation))


def tail_lower_bound(mu: float, sigma2: float, L: float, eps: float) -> float:
    """Lower bound on ``P(X >= mu + sigma2/mu - eps)`` over the mean-variance-support set.

    Returns ``eps/(L*(L - mu - sigma2/mu))`` capped at 1.

    Raises
    ------
    InvalidParameter
        If ``eps`` is outside ``(0, mu + sigma2/mu]`` or ``L <= mu + sigma2/mu``.
    """
    _variance_spec(mu, sigma2, L)
    good = mu + sigma2 / mu
    if not 0 < eps <= good:
        raise InvalidParameter(f"Tail offset must lie in (0, {good!r}], got eps={eps!r}.")
    denominator = L * (L - good)
    if denominator <= 0:
        raise InvalidParameter(
            f"Tail bound needs L > mu + sigma2/mu, got L={L!r} and mu + sigma2/mu={good!r}."
        )
    return min(1.0, eps / denominator)


def tail_infimum(mu: float, sigma2: float, L: float, eps: float) -> float:
    """Infimum of ``P(X >= mu + sigma2/mu - eps)`` over the mean-variance-support set.

    The minorant ``x*(x - t)/(L*(L - t))`` with ``t = mu + sigma2/mu - eps``
    lies below the tail indicator on ``[0, L]``, so
    ``mu*eps/(L*(L - t))`` is always a lower bound; it is attained by the law
    on ``{0, t, L}``, which has nonnegative weights iff
    ``t >= mu - sigma2/(L - mu)``.

    Raises
    ------
    InvalidParameter
        Under the same conditions as :func:`tail_lower_bound`.
    """
    _variance_spec(mu, sigma2, L)
    good = mu + sigma2 / mu
    if not 0 < eps <= good:
        raise InvalidParameter(f"Tail offset must lie in (0, {good!r}], got eps={eps!r}.")
    if L <= good:
        raise InvalidParameter(
            f"Tail bound needs L > mu + sigma2/mu, got L={L!r} and mu + sigma2/mu={good!r}."
        )
    threshold = good - eps
    return mu * eps / (L * (L - threshold))


def tail_extremal(mu: float, sigma2: float, L: float, eps: float) -> Optional[DiscreteDistribution]:
    """The law on ``{0, t, L}`` attaining :func:`tail_infimum`, or None if infeasible.

    The middle atom sits at ``t`` itself; the infimum is approached by moving
    it just below ``t``.
    """
    threshold = mu + sigma2 / mu - eps
    if threshold <= 0:
        return None
    solved = solve_on_support((0.0, threshold, L), (1.0, mu, mu * mu + sigma2), Basis.POLYNOMIAL2)
    if solved is None:
        return None
    return constructed_distribution(*solved, L=L)

