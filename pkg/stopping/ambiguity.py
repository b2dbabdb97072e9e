"""Ambiguity sets: validation, two-point members and witness distributions."""

import logging
import math
from typing import NamedTuple, Optional

from stopping.consts import INFINITY, PROB_SUM_TOL, SUPPORT_TOL, AmbiguityKind
from stopping.domain import AmbiguitySpec, DiscreteDistribution, PInterval
from stopping.errors import EmptyAmbiguitySet, InvalidParameter, NegativeSupport


logger = logging.getLogger(__name__)


class Moments(NamedTuple):
    mean: float
    variance: float
    mad: float


def _require_finite(name: str, value: Optional[float]) -> float:
    if value is None:
        raise InvalidParameter(f"Parameter {name} is required for this ambiguity kind.")
    if not math.isfinite(value):
        raise InvalidParameter(f"Parameter {name} must be finite, got {value!r}.")
    return value


def validate(spec: AmbiguitySpec) -> AmbiguitySpec:
    """Check that an ambiguity set is well formed and non-empty.

    The inequalities are checked exactly on the supplied parameters.

    Parameters
    ----------
    spec : AmbiguitySpec
        Specification to validate.

    Returns
    -------
    AmbiguitySpec
        The same specification.

    Raises
    ------
    InvalidParameter
        If a field required by the kind is missing, not finite or out of
        range, or a field the kind does not use is set.
    EmptyAmbiguitySet
        If the non-emptiness condition of the kind is violated.
    """
    kind = spec.kind
    mu = _require_finite("mu", spec.mu)
    if mu <= 0:
        raise InvalidParameter(f"Mean must be positive, got mu={mu!r}.")

    if kind.has_variance:
        sigma2 = _require_finite("sigma2", spec.sigma2)
        if sigma2 < 0:
            raise InvalidParameter(f"Variance must be nonnegative, got sigma2={sigma2!r}.")
    elif spec.sigma2 is not None:
        raise InvalidParameter(f"Kind {kind} does not take a variance.")

    if kind.has_mad:
        mad = _require_finite("mad", spec.mad)
        if mad < 0:
            raise InvalidParameter(f"Mean absolute deviation must be nonnegative, got mad={mad!r}.")
    elif spec.mad is not None:
        raise InvalidParameter(f"Kind {kind} does not take a mean absolute deviation.")

    if kind.has_support:
        L = _require_finite("L", spec.support_upper)
        if L <= 0:
            raise InvalidParameter(f"Support upper bound must be positive, got L={L!r}.")
    elif spec.support_upper is not None:
        raise InvalidParameter(f"Kind {kind} does not take a support upper bound.")

    if kind in (AmbiguityKind.MEAN_VAR_SUPPORT, AmbiguityKind.TWO_POINT):
        rhs = spec.mu * (spec.L - spec.mu)
        if not spec.var <= rhs:
            raise EmptyAmbiguitySet(
                "sigma2 <= mu*(L - mu)", detail=f"sigma2={spec.sigma2!r} > {rhs!r}"
            )
    elif kind is AmbiguityKind.MEAN_MAD_SUPPORT:
        rhs = 2 * spec.mu * (spec.L - spec.mu) / spec.L
        if not spec.d <= rhs:
            raise EmptyAmbiguitySet("mad <= 2*mu*(L - mu)/L", detail=f"mad={spec.d!r} > {rhs!r}")
    elif kind is AmbiguityKind.MEAN_MAD:
        if not spec.d < 2 * spec.mu:
            raise EmptyAmbiguitySet("mad < 2*mu", detail=f"mad={spec.d!r} >= {2 * spec.mu!r}")

    logger.debug("Validated ambiguity set %s", spec)
    return spec


def two_point_from_p(mu: float, sigma: float, p: float) -> DiscreteDistribution:
    """Two-point distribution with mean ``mu``, deviation ``sigma`` and low-point mass ``p``.

    The low point is ``mu - sqrt((1-p)/p)*sigma`` and the high point
    ``mu + sqrt(p/(1-p))*sigma``.  With ``sigma == 0`` both collapse to a
    point mass at ``mu``.

    Raises
    ------
    InvalidParameter
        If ``p`` is not in the open interval ``(0, 1)``.
    NegativeSupport
        If the low point is negative beyond round-off.
    """
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"Two-point mass must lie in (0, 1), got p={p!r}.")
    if sigma < 0:
        raise InvalidParameter(f"Standard deviation must be nonnegative, got sigma={sigma!r}.")
    low = mu - math.sqrt((1.0 - p) / p) * sigma
    high = mu + math.sqrt(p / (1.0 - p)) * sigma
    if low < -SUPPORT_TOL:
        raise NegativeSupport(f"Low support point {low!r} is negative for p={p!r}.")
    return DiscreteDistribution.from_atoms([(max(low, 0.0), p), (high, 1.0 - p)])


def feasible_p_interval(mu: float, sigma: float, L: float) -> PInterval:
    """Range of low-point masses whose two-point member lies in ``[0, L]``.

    The left end puts the low point at 0, the right end puts the high point
    at ``L``.  A zero ``sigma`` gives the degenerate interval ``(1, 1)``
    standing for the point mass at ``mu``.

    Raises
    ------
    InvalidParameter
        If ``L <= mu``.
    EmptyAmbiguitySet
        If ``sigma**2 > mu*(L - mu)``.
    """
    if L <= mu:
        raise InvalidParameter(f"Support upper bound must exceed the mean, got L={L!r} <= mu={mu!r}.")
    sigma2 = sigma * sigma
    if sigma2 > mu * (L - mu):
        raise EmptyAmbiguitySet("sigma2 <= mu*(L - mu)", detail=f"sigma2={sigma2!r}")
    if sigma == 0:
        return PInterval(1.0, 1.0)
    spread = (L - mu) ** 2
    p_lo = sigma2 / (mu * mu + sigma2)
    p_hi = spread / (spread + sigma2)
    if p_lo > p_hi:
        # only reachable through round-off on the boundary sigma2 == mu*(L - mu)
        p_hi = p_lo
    return PInterval(p_lo, p_hi)


def witness_distribution(spec: AmbiguitySpec) -> DiscreteDistribution:
    """A member of a valid ambiguity set.

    Variance kinds get the two-point law on ``{0, mu + sigma2/mu}``, MAD kinds
    the two-point law on ``{0, 2*mu**2/(2*mu - d)}``; a zero dispersion or the
    mean-only set gives the point mass at ``mu``.
    """
    validate(spec)
    mu = spec.mu
    upper = spec.support_upper
    if spec.kind.has_variance and spec.sigma2:
        sigma2 = spec.sigma2
        return DiscreteDistribution.from_atoms(
            [(0.0, sigma2 / (mu * mu + sigma2)), (mu + sigma2 / mu, mu * mu / (mu * mu + sigma2))],
            support_upper=upper,
        )
    if spec.kind.has_mad and spec.mad:
        d = spec.mad
        low_mass = d / (2 * mu)
        return DiscreteDistribution.from_atoms(
            [(0.0, low_mass), (2 * mu * mu / (2 * mu - d), 1.0 - low_mass)],
            support_upper=upper,
        )
    return DiscreteDistribution.point_mass(mu)


def moments(dist: DiscreteDistribution) -> Moments:
    """Return mean, variance and mean absolute deviation of ``dist``."""
    mean = math.fsum(prob * pt for pt, prob in dist.atoms)
    variance = math.fsum(prob * (pt - mean) ** 2 for pt, prob in dist.atoms)
    mad = math.fsum(prob * abs(pt - mean) for pt, prob in dist.atoms)
    return Moments(mean, variance, mad)


def membership_discrepancy(dist: DiscreteDistribution, spec: AmbiguitySpec) -> float:
    """Largest violation of the constraints of ``spec`` by ``dist``.

    Covers the total mass, the fixed moments, the support interval and, for
    the two-point set, the number of atoms.  Zero means exact membership.
    """
    total = math.fsum(prob for _, prob in dist.atoms)
    found = moments(dist)
    gaps = [abs(total - 1.0), abs(found.mean - spec.mu), max(0.0, -dist.atoms[0][0])]
    if spec.kind.has_variance:
        gaps.append(abs(found.variance - (spec.sigma2 or 0.0)))
    if spec.kind.has_mad:
        gaps.append(abs(found.mad - (spec.mad or 0.0)))
    if spec.L < INFINITY:
        gaps.append(max(0.0, dist.max_point - spec.L))
    if spec.kind is AmbiguityKind.TWO_POINT and len(dist.atoms) > 2:
        gaps.append(1.0)
    return max(gaps)


def is_member(dist: DiscreteDistribution, spec: AmbiguitySpec, tol: float = PROB_SUM_TOL) -> bool:
    return membership_discrepancy(dist, spec) <= tol
