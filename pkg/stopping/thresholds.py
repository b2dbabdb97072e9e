"""Robust threshold schedules.

``T(n) = 0`` and ``T(i) = T(i+1) + mu - B(T(i+1))`` where ``B(xi)`` is the
tight bound on ``E[min(xi, X)]`` over the ambiguity set.  The generic
recursion takes ``B`` as a callable; the closed forms below solve it for
each family of sets.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from stopping.ambiguity import feasible_p_interval, two_point_from_p, validate
from stopping.consts import MONOTONE_TOL, AmbiguityKind
from stopping.domain import (
    ArrayLike,
    AmbiguitySpec,
    DiscreteDistribution,
    FigureFiveRow,
    FigureOneRow,
    ThresholdSchedule,
    TurningPointReport,
)
from stopping.errors import InvalidParameter, PreconditionViolated, UnattainedBound
from stopping.momentbound import (
    cox_upper_bound,
    cox_worst_case,
    mad_upper_bound,
    mad_worst_case,
)


logger = logging.getLogger(__name__)

BoundOracle = Callable[[float], float]


def _check_n(n: int) -> None:
    if n < 1:
        raise InvalidParameter(f"Number of offers must be at least 1, got n={n}.")


def _schedule(n: int, values: Sequence[float]) -> ThresholdSchedule:
    """Wrap values, warning when they are not nonincreasing."""
    schedule = ThresholdSchedule(n=n, values=tuple(float(v) for v in values))
    drops = [i for i in range(n) if schedule.values[i] < schedule.values[i + 1] - MONOTONE_TOL]
    if drops:
        logger.warning("Schedule is not nonincreasing at steps %s", drops)
    return schedule


def solve_linear_recursion(alpha: float, beta: float, gamma0: float, m: int) -> List[float]:
    """Iterate ``t(i) = alpha + beta*t(i+1)`` backwards from ``t(m) = gamma0``.

    Returns
    -------
    List[float]
        ``t(0..m)``.
    """
    if m < 0:
        raise InvalidParameter(f"Recursion length must be nonnegative, got m={m}.")
    values = [0.0] * (m + 1)
    values[m] = gamma0
    for i in range(m - 1, -1, -1):
        values[i] = alpha + beta * values[i + 1]
    return values


def robust_thresholds_generic(
    spec: AmbiguitySpec, n: int, oracle: Union[BoundOracle, Sequence[BoundOracle]]
) -> ThresholdSchedule:
    """Backward recursion ``T(i) = T(i+1) + mu - B(T(i+1))`` with a pluggable bound.

    Parameters
    ----------
    spec : AmbiguitySpec
        The ambiguity set; its mean enters every step.
    n : int
        Number of offers.
    oracle : Union[BoundOracle, Sequence[BoundOracle]]
        Tight bound ``xi -> max E[min(xi, X)]``, or one bound per offer
        (sets sharing the mean of ``spec``), ``oracle[i]`` serving offer
        ``i + 1``.

    Returns
    -------
    ThresholdSchedule
        The thresholds ``T(0..n)``.
    """
    validate(spec)
    _check_n(n)
    if callable(oracle):
        oracles: Sequence[BoundOracle] = [oracle] * n
    else:
        oracles = oracle
        if len(oracles) != n:
            raise InvalidParameter(f"Expected {n} per-offer bounds, got {len(oracles)}.")
    values = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        values[i] = values[i + 1] + spec.mu - oracles[i](values[i + 1])
    return _schedule(n, values)


def two_point_step_objective(T_next: float, mu: float, sigma: float, p: ArrayLike) -> ArrayLike:
    """Return ``mu + (T_next - mu)*p + sqrt(p*(1 - p))*sigma``.

    This is ``E[max(T_next, X)]`` for the two-point member with low-point
    mass ``p`` whenever ``T_next`` lies between its two points.
    """
    return mu + (T_next - mu) * p + np.sqrt(p * (1 - p)) * sigma


def two_point_expected_max(xi: float, mu: float, sigma: float, p: ArrayLike) -> ArrayLike:
    """``E[max(xi, X)]`` for the two-point member with low-point mass ``p``, any ``xi``."""
    if sigma == 0:
        return np.full_like(np.asarray(p, dtype=float), max(xi, mu))
    low = mu - np.sqrt((1 - p) / p) * sigma
    high = mu + np.sqrt(p / (1 - p)) * sigma
    return p * np.maximum(xi, low) + (1 - p) * np.maximum(xi, high)


def _two_point_endpoints(mu: float, sigma2: float, L: float, xi: float) -> Tuple[float, float, float, float]:
    """Expected maxima at both ends of the feasible ``p`` interval."""
    sigma = math.sqrt(sigma2)
    p_lo, p_hi = feasible_p_interval(mu, sigma, L)
    return (
        p_lo,
        p_hi,
        float(two_point_expected_max(xi, mu, sigma, p_lo)),
        float(two_point_expected_max(xi, mu, sigma, p_hi)),
    )


def two_point_bound(mu: float, sigma2: float, L: float, xi: float) -> float:
    """Tight ``max E[min(xi, X)]`` over two-point members with support in ``[0, L]``.

    The expected maximum is concave in ``p`` so its minimum over the
    feasible interval sits at an endpoint.
    """
    if sigma2 == 0:
        return min(xi, mu)
    _, _, left, right = _two_point_endpoints(mu, sigma2, L, xi)
    return mu + xi - min(left, right)


def _two_point_params(mu: float, sigma2: float, L: float) -> Tuple[float, float, float, float]:
    """Coefficients of the left and right endpoint recursions.

    Returns ``(alpha_left, beta_left, alpha_right, beta_right)`` with
    ``T(i) = alpha + beta*T(i+1)``.
    """
    spread = (L - mu) ** 2
    beta_left = sigma2 / (mu * mu + sigma2)
    beta_right = spread / (spread + sigma2)
    return mu, beta_left, L * sigma2 / (spread + sigma2), beta_right


def thresholds_two_point_small_L(mu: float, sigma2: float, L: float, n: int) -> ThresholdSchedule:
    """Two-point schedule for ``L <= 2*mu``.

    ``T(i) = mu + (sigma2/mu)*(1 - (sigma2/(mu**2 + sigma2))**(n-1-i))`` for
    ``1 <= i <= n-1``; ``T(0)`` comes from one more step of the same
    recursion.

    Raises
    ------
    PreconditionViolated
        If ``L > 2*mu``.
    """
    validate(AmbiguitySpec(kind=AmbiguityKind.TWO_POINT, mu=mu, sigma2=sigma2, support_upper=L))
    _check_n(n)
    if L > 2 * mu:
        raise PreconditionViolated(f"Small support bound needs L <= 2*mu, got L={L!r}, mu={mu!r}.")
    if sigma2 == 0:
        # point mass at mu, L may equal mu
        return _schedule(n, [mu] * n + [0.0])
    alpha, beta, _, _ = _two_point_params(mu, sigma2, L)
    return _schedule(n, solve_linear_recursion(alpha, beta, mu, n - 1) + [0.0])


def thresholds_two_point_large_L(
    mu: float, sigma2: float, L: float, n: int
) -> Tuple[ThresholdSchedule, TurningPointReport]:
    """Two-point schedule for ``L >= 2*mu`` with its turning point.

    Each step evaluates the left-endpoint (``p = 1/(1 + c**2)``) and the
    right-endpoint (``p = 1/(1 + sigma2/(L - mu)**2)``) recursions on the same
    ``T(i+1)`` and keeps the minimum; ties keep the right endpoint.  The
    switch index is the largest ``i`` where the left endpoint is strictly
    smaller.

    Raises
    ------
    PreconditionViolated
        If ``L < 2*mu``.
    """
    validate(AmbiguitySpec(kind=AmbiguityKind.TWO_POINT, mu=mu, sigma2=sigma2, support_upper=L))
    _check_n(n)
    if L < 2 * mu:
        raise PreconditionViolated(f"Large support bound needs L >= 2*mu, got L={L!r}, mu={mu!r}.")

    values = [0.0] * (n + 1)
    left = [0.0] * (n + 1)
    right = [0.0] * (n + 1)
    values[n - 1] = left[n - 1] = right[n - 1] = mu
    switch: Optional[int] = None
    if sigma2 > 0:
        alpha_l, beta_l, alpha_r, beta_r = _two_point_params(mu, sigma2, L)
        for i in range(n - 2, -1, -1):
            left[i] = alpha_l + beta_l * values[i + 1]
            right[i] = alpha_r + beta_r * values[i + 1]
            if left[i] < right[i]:
                values[i] = left[i]
                if switch is None:
                    switch = i
            else:
                values[i] = right[i]
    else:
        for i in range(n - 2, -1, -1):
            values[i] = left[i] = right[i] = mu

    n0 = None if switch is None else n - switch
    logger.debug("Two-point turning point for n=%s: switch index %s", n, switch)
    report = TurningPointReport(
        n=n,
        n0=n0,
        switch_index=switch,
        left_values=tuple(left),
        right_values=tuple(right),
    )
    return _schedule(n, values), report


def two_point_worst_case_index(report: TurningPointReport, i: int) -> str:
    """Which endpoint distribution nature plays when ``T(i)`` is computed: ``"f*"`` or ``"g*"``."""
    if i >= report.n - 1:
        return "f*"
    return "f*" if report.left_values[i] < report.right_values[i] else "g*"


def thresholds_mvs_general(mu: float, sigma2: float, L: float, n: int) -> ThresholdSchedule:
    """Schedule for the mean-variance-support set.

    Iterates ``T(i) = (mu**2 + sigma2)/L + (1 - mu/L)*T(i+1)`` from
    ``T(n-1) = mu``, i.e. ``T(i) = mu + (sigma2/mu)*(1 - (1 - mu/L)**(n-1-i))``.
    """
    validate(
        AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=mu, sigma2=sigma2, support_upper=L)
    )
    _check_n(n)
    values = solve_linear_recursion((mu * mu + sigma2) / L, 1 - mu / L, mu, n - 1)
    return _schedule(n, values + [0.0])


def thresholds_mad(mu: float, d: float, n: int, L: Optional[float] = None) -> ThresholdSchedule:
    """Schedule for the mean-MAD set, with or without support bound.

    Iterates ``T(i) = mu + (d/(2*mu))*T(i+1)`` from ``T(n-1) = mu``; the
    support bound only enters through validation.

    Raises
    ------
    PreconditionViolated
        If ``d >= 2*mu``.
    """
    if d >= 2 * mu:
        raise PreconditionViolated(f"MAD schedule needs d < 2*mu, got d={d!r}, mu={mu!r}.")
    if L is None:
        validate(AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD, mu=mu, mad=d))
    else:
        validate(AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD_SUPPORT, mu=mu, mad=d, support_upper=L))
    _check_n(n)
    values = solve_linear_recursion(mu, d / (2 * mu), mu, n - 1)
    return _schedule(n, values + [0.0])


def asymptotic_payoff(spec: AmbiguitySpec) -> float:
    """Limit of ``T(0)`` as the number of offers grows."""
    validate(spec)
    mu = spec.mu
    if spec.kind in (AmbiguityKind.MEAN_ONLY, AmbiguityKind.MEAN_VARIANCE):
        return mu
    if spec.kind.has_variance:
        return mu + spec.var / mu
    return 2 * mu * mu / (2 * mu - spec.d)


def bound_oracle(spec: AmbiguitySpec) -> BoundOracle:
    """The tight ``xi -> max E[min(xi, X)]`` for the set described by ``spec``.

    Sets without support bound and a fixed variance (or only a mean) give
    ``min(xi, mu)``; for the mean-variance set this is a supremum that no
    member attains.
    """
    validate(spec)
    mu = spec.mu
    kind = spec.kind
    if kind in (AmbiguityKind.MEAN_ONLY, AmbiguityKind.MEAN_VARIANCE):
        return lambda xi: min(xi, mu)
    if kind is AmbiguityKind.TWO_POINT:
        return lambda xi: two_point_bound(mu, spec.var, spec.L, xi)
    if kind is AmbiguityKind.MEAN_VAR_SUPPORT:
        return lambda xi: cox_upper_bound(mu, spec.var, spec.L, xi)
    return lambda xi: mad_upper_bound(mu, spec.d, spec.L, xi)


def worst_case_distribution(spec: AmbiguitySpec, xi: float) -> DiscreteDistribution:
    """Nature's member minimizing ``E[max(xi, X)]``.

    Raises
    ------
    UnattainedBound
        For the mean-variance set with positive variance, whose infimum is
        only approached by pushing the high point to infinity.
    """
    validate(spec)
    mu = spec.mu
    kind = spec.kind
    if kind is AmbiguityKind.MEAN_ONLY or (kind.has_variance and spec.var == 0):
        return DiscreteDistribution.point_mass(mu)
    if kind is AmbiguityKind.MEAN_VARIANCE:
        raise UnattainedBound(
            f"No member of the mean-variance set attains the bound at xi={xi!r}; "
            "add a support bound."
        )
    if kind is AmbiguityKind.TWO_POINT:
        p_lo, p_hi, left, right = _two_point_endpoints(mu, spec.var, spec.L, xi)
        p = p_lo if left < right else p_hi
        return two_point_from_p(mu, spec.sigma, p)
    if kind is AmbiguityKind.MEAN_VAR_SUPPORT:
        return cox_worst_case(mu, spec.var, spec.L, xi).primal
    return mad_worst_case(mu, spec.d, spec.L, xi).primal


def robust_thresholds(spec: AmbiguitySpec, n: int) -> ThresholdSchedule:
    """Closed-form schedule for any ambiguity kind."""
    validate(spec)
    _check_n(n)
    mu = spec.mu
    kind = spec.kind
    if kind in (AmbiguityKind.MEAN_ONLY, AmbiguityKind.MEAN_VARIANCE):
        return _schedule(n, [mu] * n + [0.0])
    if kind is AmbiguityKind.TWO_POINT:
        if spec.L <= 2 * mu:
            return thresholds_two_point_small_L(mu, spec.var, spec.L, n)
        return thresholds_two_point_large_L(mu, spec.var, spec.L, n)[0]
    if kind is AmbiguityKind.MEAN_VAR_SUPPORT:
        return thresholds_mvs_general(mu, spec.var, spec.L, n)
    return thresholds_mad(mu, spec.d, n, spec.support_upper)


def figure_one_series(mu: float, sigma2: float, L: float, n: int) -> List[FigureOneRow]:
    """Both endpoint recursions and their per-step minimum, one row per ``i``."""
    schedule, report = thresholds_two_point_large_L(mu, sigma2, L, n)
    return [
        FigureOneRow(
            i=i,
            f_star=report.left_values[i],
            g_star=report.right_values[i],
            threshold=schedule.values[i],
            is_switch=report.is_switch(i),
        )
        for i in range(n + 1)
    ]


def figure_five_masses(mu: float, sigma2: float, L: float, n: int) -> List[FigureFiveRow]:
    """Weights of the worst case on ``{0, T(i+1), L}`` for ``i = 0..n-2``.

    ``T`` is the mean-variance-support schedule, so every ``T(i+1)`` lies in
    the middle regime of the variance bound.
    """
    schedule = thresholds_mvs_general(mu, sigma2, L, n)
    rows = []
    for i in range(n - 1):
        xi = schedule.values[i + 1]
        primal = cox_worst_case(mu, sigma2, L, xi).primal
        rows.append(
            FigureFiveRow(
                i=i,
                xi=xi,
                mass_zero=primal.mass_at(0.0),
                mass_xi=primal.mass_at(xi),
                mass_upper=primal.mass_at(L),
            )
        )
    return rows
