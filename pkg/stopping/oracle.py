"""Brute-force checks for the closed forms.

Nothing here reuses the closed-form constructions: two-point problems are
searched on a grid of the mass parameter, moment problems by enumerating
every support of at most three points drawn from a grid of ``[0, L]``.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, cast

import numpy as np

from stopping.ambiguity import (
    feasible_p_interval,
    membership_discrepancy,
    validate,
    witness_distribution,
)
from stopping.consts import (
    DEFAULT_GRID_POINTS,
    DEFAULT_MAJORANT_GRID,
    DEFAULT_OFFERS,
    DEFAULT_XI_SWEEP,
    DUAL_TOL,
    MOMENT_TOL,
    ORACLE_PROB_TOL,
    AmbiguityKind,
    Basis,
)
from stopping.domain import (
    ArrayLike,
    AmbiguitySpec,
    GridSearchResult,
    MomentBoundCertificate,
    VerificationReport,
)
from stopping.errors import InvalidParameter, NoFeasibleCandidate
from stopping.momentbound import (
    basis_function,
    check_majorant,
    constructed_distribution,
    cox_worst_case,
    distinct_points,
    mad_breakpoints,
    mad_worst_case,
)
from stopping.thresholds import (
    BoundOracle,
    asymptotic_payoff,
    bound_oracle,
    robust_thresholds,
    robust_thresholds_generic,
    two_point_bound,
    two_point_expected_max,
    two_point_step_objective,
)


logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], np.ndarray]
StepObjective = Callable[[float, float, float, ArrayLike], ArrayLike]


def grid_min_two_point(
    T_next: float,
    mu: float,
    sigma: float,
    p_interval: Tuple[float, float],
    grid_points: int,
    objective: StepObjective = two_point_step_objective,
) -> GridSearchResult:
    """Minimize the two-point step objective over a uniform grid of ``p``.

    The grid includes both ends of the interval; ties go to the smaller ``p``.

    Parameters
    ----------
    T_next : float
        Threshold of the next step.
    mu, sigma : float
        Mean and standard deviation of the two-point members.
    p_interval : Tuple[float, float]
        Feasible range of the low-point mass.
    grid_points : int
        Number of grid points, at least 3.
    objective : StepObjective
        Function of ``(T_next, mu, sigma, p)`` to minimize; defaults to
        :func:`~stopping.thresholds.two_point_step_objective`.
    """
    if grid_points < 3:
        raise InvalidParameter(f"Two-point grid needs at least 3 points, got {grid_points}.")
    lo, hi = p_interval
    if lo > hi:
        raise InvalidParameter(f"Empty mass interval ({lo!r}, {hi!r}).")
    grid = np.linspace(lo, hi, grid_points)
    values = np.asarray(objective(T_next, mu, sigma, grid), dtype=float)
    best = int(np.argmin(values))
    return GridSearchResult(
        best_arg=float(grid[best]),
        best_value=float(values[best]),
        grid_step=(hi - lo) / (grid_points - 1),
        bracket=(lo, hi),
    )


def two_point_grid_oracle(spec: AmbiguitySpec, grid_points: int) -> BoundOracle:
    """Bound ``xi -> mu + xi - min_p E[max(xi, X_p)]`` from a grid search over ``p``."""
    validate(spec)
    if spec.kind is not AmbiguityKind.TWO_POINT:
        raise InvalidParameter(f"Two-point grid oracle needs a two-point set, got {spec.kind}.")
    mu, sigma = spec.mu, spec.sigma
    if sigma == 0:
        return lambda xi: min(xi, mu)
    interval = feasible_p_interval(mu, sigma, spec.L)

    def bound(xi: float) -> float:
        found = grid_min_two_point(
            xi, mu, sigma, interval, grid_points, objective=two_point_expected_max
        )
        return mu + xi - found.best_value

    return bound


def candidate_points(spec: AmbiguitySpec, grid_points: int, extra: Sequence[float] = ()) -> np.ndarray:
    """Uniform grid of ``[0, L]`` joined with the points where extremal laws live."""
    L = spec.L
    exact = [0.0, spec.mu, L, *extra]
    if spec.kind.has_variance and spec.var > 0:
        exact += [spec.mu + spec.var / spec.mu, spec.mu - spec.var / (L - spec.mu)]
    if spec.kind.has_mad and spec.d > 0:
        exact += list(mad_breakpoints(spec.mu, spec.d, L))
    grid = np.linspace(0.0, L, grid_points)
    inside = [p for p in exact if 0.0 <= p <= L]
    return distinct_points(np.concatenate([grid, np.array(inside)]))


def _basis(spec: AmbiguitySpec) -> Tuple[Basis, float, float]:
    if spec.kind.has_mad:
        return Basis.MAD, spec.mu, spec.d
    return Basis.POLYNOMIAL2, 0.0, spec.mu ** 2 + (spec.sigma2 or 0.0)


def _prob_ok(probs: np.ndarray) -> np.ndarray:
    return cast(np.ndarray, np.all((probs >= -ORACLE_PROB_TOL) & (probs <= 1 + ORACLE_PROB_TOL), axis=1))


def feasible_supports(
    xs: np.ndarray, rhs: Tuple[float, float, float], basis: Basis, center: float, max_size: int = 3
) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yield ``(indices, probabilities)`` batches of member distributions supported on ``xs``.

    Supports are visited by size and then in lexicographic order.  Triples
    whose moment matrix is singular are skipped; their members are found
    among the pairs.
    """
    phi = basis_function(basis, center)(xs)
    target = np.asarray(rhs, dtype=float)
    tol = MOMENT_TOL * max(1.0, float(np.max(np.abs(target))))
    m = len(xs)

    single = (np.abs(xs - target[1]) <= tol) & (np.abs(phi - target[2]) <= tol)
    yield np.flatnonzero(single)[:, None], np.ones((int(single.sum()), 1))

    if max_size >= 2 and m >= 2:
        first, second = np.triu_indices(m, k=1)
        high = (target[1] - xs[first]) / (xs[second] - xs[first])
        probs = np.column_stack([1 - high, high])
        residual = np.abs(probs[:, 0] * phi[first] + probs[:, 1] * phi[second] - target[2])
        ok = _prob_ok(probs) & (residual <= tol)
        yield np.column_stack([first, second])[ok], probs[ok]

    if max_size >= 3 and m >= 3:
        det_tol = 1e-12 * max(1.0, float(np.max(np.abs(xs)))) ** 3
        for i in range(m - 2):
            j, k = np.triu_indices(m - i - 1, k=1)
            j, k = j + i + 1, k + i + 1
            idx = np.column_stack([np.full_like(j, i), j, k])
            matrix = np.stack([np.ones(idx.shape), xs[idx], phi[idx]], axis=1)
            regular = np.abs(np.linalg.det(matrix)) > det_tol
            if not regular.any():
                continue
            idx, matrix = idx[regular], matrix[regular]
            rhs_stack = np.broadcast_to(target, (len(idx), 3))[..., None]
            probs = np.linalg.solve(matrix, rhs_stack)[..., 0]
            residual = np.max(np.abs((matrix @ probs[..., None])[..., 0] - target), axis=1)
            ok = _prob_ok(probs) & (residual <= tol)
            yield idx[ok], probs[ok]


def _search(
    spec: AmbiguitySpec,
    xs: np.ndarray,
    objective: Objective,
    maximize: bool,
    grid_points: int,
) -> GridSearchResult:
    basis, center, q2 = _basis(spec)
    max_size = 2 if spec.kind is AmbiguityKind.TWO_POINT else 3
    values_at = objective(xs)
    best: Optional[Tuple[float, np.ndarray, np.ndarray]] = None
    for idx, probs in feasible_supports(xs, (1.0, spec.mu, q2), basis, center, max_size):
        if len(idx) == 0:
            continue
        totals = np.sum(probs * values_at[idx], axis=1)
        pick = int(np.argmax(totals) if maximize else np.argmin(totals))
        value = float(totals[pick])
        if best is None or (value > best[0] if maximize else value < best[0]):
            best = (value, idx[pick], probs[pick])
    if best is None:
        raise NoFeasibleCandidate(f"No member of {spec} is supported on the search grid.")
    value, idx, probs = best
    support = tuple(float(x) for x in xs[idx])
    return GridSearchResult(
        best_arg=support,
        best_value=value,
        grid_step=spec.L / (grid_points - 1),
        bracket=(0.0, spec.L),
        best_distribution=constructed_distribution(support, np.clip(probs, 0.0, None), spec.L),
    )


def _require_finite_support(spec: AmbiguitySpec, grid_points: int) -> None:
    validate(spec)
    if not math.isfinite(spec.L):
        raise InvalidParameter(f"Enumeration needs a finite support bound, got {spec.kind}.")
    if grid_points < 3:
        raise InvalidParameter(f"Enumeration grid needs at least 3 points, got {grid_points}.")


def enumerate_extremal(
    spec: AmbiguitySpec, xi: float, grid_points: int = DEFAULT_GRID_POINTS
) -> GridSearchResult:
    """Largest ``E[min(xi, X)]`` over members supported on at most three grid points.

    The grid of ``[0, L]`` is augmented with ``xi`` and the breakpoints of
    the closed forms so that the extremal supports are reachable exactly.

    Raises
    ------
    NoFeasibleCandidate
        If no support yields a member.
    """
    _require_finite_support(spec, grid_points)
    xs = candidate_points(spec, grid_points, extra=(xi,))
    result = _search(spec, xs, lambda x: np.minimum(xi, x), True, grid_points)
    logger.debug("Enumeration at xi=%s: %s on %s", xi, result.best_value, result.best_arg)
    return result


def enumerate_tail_minimum(
    spec: AmbiguitySpec, t: float, grid_points: int = DEFAULT_GRID_POINTS
) -> GridSearchResult:
    """Smallest ``P(X >= t)`` over members supported on at most three grid points.

    A point just below ``t`` is added so that the infimum, which needs mass
    immediately left of ``t``, is approached.
    """
    _require_finite_support(spec, grid_points)
    below = t * (1 - 1e-9)
    xs = candidate_points(spec, grid_points, extra=(t, below))
    return _search(spec, xs, lambda x: (x >= t).astype(float), False, grid_points)


def verify_certificate(
    cert: MomentBoundCertificate,
    spec: AmbiguitySpec,
    grid_points: int = DEFAULT_MAJORANT_GRID,
    tolerance: float = DUAL_TOL,
) -> VerificationReport:
    """Check membership, both objectives and dual feasibility of a certificate.

    Returns
    -------
    VerificationReport
        Largest discrepancy per check: ``membership``, ``primal_objective``,
        ``dual_objective`` and ``dual_feasibility``.
    """
    report = VerificationReport(tolerance=tolerance)
    report.record("membership", membership_discrepancy(cert.primal, spec))
    report.record("primal_objective", abs(cert.primal_objective() - cert.value))
    report.record("dual_objective", abs(cert.dual_objective() - cert.value))
    report.record("dual_feasibility", max(0.0, check_majorant(cert.dual, cert.xi, spec.L, grid_points)))
    return report


def certificate_for(spec: AmbiguitySpec, xi: float) -> MomentBoundCertificate:
    """Closed-form certificate of the bound at ``xi`` for variance or MAD support sets."""
    if spec.kind is AmbiguityKind.MEAN_VAR_SUPPORT:
        return cox_worst_case(spec.mu, spec.var, spec.L, xi)
    if spec.kind.has_mad:
        return mad_worst_case(spec.mu, spec.d, spec.L, xi)
    raise InvalidParameter(f"No moment bound certificate for kind {spec.kind}.")


def xi_sweep(spec: AmbiguitySpec, count: int) -> List[float]:
    """``count`` evenly spaced arguments covering every regime of the bound."""
    if count < 1:
        raise InvalidParameter(f"Sweep needs at least one point, got {count}.")
    if math.isfinite(spec.L):
        return [float(x) for x in np.linspace(0.0, spec.L, count)]
    # without support bound only 0 and [mu, inf) are admissible
    upper = 2 * asymptotic_payoff(spec)
    return [0.0] + [float(x) for x in np.linspace(spec.mu, upper, max(count - 1, 1))]


def _check_xi(
    spec: AmbiguitySpec, xi: float, grid_points: int, majorant_grid: int, tolerance: float
) -> VerificationReport:
    report = VerificationReport(tolerance=tolerance)
    if spec.kind is AmbiguityKind.TWO_POINT:
        bound = two_point_bound(spec.mu, spec.var, spec.L, xi)
        found = enumerate_extremal(spec, xi, grid_points)
        report.record("oracle_agreement", abs(found.best_value - bound))
        return report
    cert = certificate_for(spec, xi)
    for name, value in verify_certificate(cert, spec, majorant_grid, tolerance).checks.items():
        report.record(name, value)
    if math.isfinite(spec.L):
        found = enumerate_extremal(spec, xi, grid_points)
        report.record("oracle_agreement", abs(found.best_value - cert.value))
        if cert.breakpoint_source is not None:
            report.record("breakpoint_agreement", max(0.0, found.best_value - cert.value))
    return report


def verify_spec(
    spec: AmbiguitySpec,
    xi_count: int = DEFAULT_XI_SWEEP,
    grid_points: int = DEFAULT_GRID_POINTS,
    majorant_grid: int = DEFAULT_MAJORANT_GRID,
    n: int = DEFAULT_OFFERS,
    threads: int = 1,
    tolerance: float = DUAL_TOL,
) -> VerificationReport:
    """Run every applicable check for ``spec`` and collect the worst discrepancies.

    All kinds compare the closed-form schedule with the generic recursion.
    Sets with a moment bound certificate are checked at ``xi_count`` points
    (certificate checks, enumeration agreement); the two-point set compares
    its endpoint bound with the enumeration; the remaining sets check their
    witness.  The ``xi`` sweep runs on ``threads`` worker threads and is
    reduced in sweep order.
    """
    validate(spec)
    report = VerificationReport(tolerance=tolerance)
    closed = robust_thresholds(spec, n)
    generic = robust_thresholds_generic(spec, n, bound_oracle(spec))
    report.record(
        "schedule_agreement",
        max(abs(a - b) for a, b in zip(closed.values, generic.values)),
    )

    if spec.kind in (AmbiguityKind.MEAN_ONLY, AmbiguityKind.MEAN_VARIANCE):
        report.record("membership", membership_discrepancy(witness_distribution(spec), spec))
        return report

    points = xi_sweep(spec, xi_count)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        partial = list(
            executor.map(
                lambda xi: _check_xi(spec, xi, grid_points, majorant_grid, tolerance), points
            )
        )
    for sub in partial:
        for name, value in sub.checks.items():
            report.record(name, value)
    logger.info(
        "Verified %s over %s points: %s", spec.kind, len(points),
        "passed" if report.passed else f"failed {sorted(report.failures)}",
    )
    return report
