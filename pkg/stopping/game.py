"""The seller-versus-nature game: stopping rules, nature strategies, Monte Carlo.

Episodes are simulated in blocks.  Every block draws from its own Philox
stream keyed by ``(seed, block)``, so a run gives the same report whatever
the number of worker threads.
"""

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple, cast

import numpy as np

from stopping.ambiguity import feasible_p_interval, membership_discrepancy, validate
from stopping.consts import DEFAULT_BLOCK_SIZE, MOMENT_TOL, AmbiguityKind
from stopping.domain import AmbiguitySpec, DiscreteDistribution, SimulationReport, ThresholdSchedule
from stopping.errors import ComputationError, InvalidParameter
from stopping.momentbound import tail_infimum
from stopping.thresholds import worst_case_distribution


logger = logging.getLogger(__name__)

AcceptanceProbability = Callable[[int, np.ndarray], float]


class StoppingRule(ABC):
    """Decides, offer by offer, with which probability to stop."""

    @abstractmethod
    def accept_probability(self, i: int, seen: np.ndarray) -> float:
        """Probability of accepting offer ``i`` (1-based) given the values ``seen`` so far."""

    def thresholds(self, n: int) -> Optional[np.ndarray]:
        """Acceptance thresholds of offers ``1..n`` if the rule is deterministic, else None."""
        return None


@dataclass(frozen=True)
class ScheduleRule(StoppingRule):
    """Accept offer ``i`` iff its value reaches ``T(i)`` of the schedule."""

    schedule: ThresholdSchedule

    def accept_probability(self, i: int, seen: np.ndarray) -> float:
        return 1.0 if seen[-1] >= self.schedule.values[i] else 0.0

    def thresholds(self, n: int) -> Optional[np.ndarray]:
        if n != self.schedule.n:
            raise InvalidParameter(f"Schedule is for n={self.schedule.n} offers, not {n}.")
        return self.schedule.acceptance_thresholds


@dataclass(frozen=True)
class StaticThreshold(StoppingRule):
    """Accept the first offer whose value reaches ``threshold``; may accept none."""

    threshold: float

    def accept_probability(self, i: int, seen: np.ndarray) -> float:
        return 1.0 if seen[-1] >= self.threshold else 0.0

    def thresholds(self, n: int) -> Optional[np.ndarray]:
        return np.full(n, self.threshold, dtype=float)


@dataclass(frozen=True)
class FirstOffer(StoppingRule):
    def accept_probability(self, i: int, seen: np.ndarray) -> float:
        return 1.0

    def thresholds(self, n: int) -> Optional[np.ndarray]:
        return np.full(n, -math.inf)


@dataclass(frozen=True)
class Randomized(StoppingRule):
    """Accept offer ``i`` with probability ``r(i, seen)``.

    ``r`` must return values in ``[0, 1]`` and not depend on anything but its
    arguments.
    """

    r: AcceptanceProbability

    def accept_probability(self, i: int, seen: np.ndarray) -> float:
        return float(self.r(i, seen))


def static_threshold_rule(T: float) -> StaticThreshold:
    """Rule accepting the first value ``>= T``."""
    if not T >= 0:
        raise InvalidParameter(f"Static threshold must be nonnegative, got T={T!r}.")
    return StaticThreshold(float(T))


def run_episode(
    rule: StoppingRule, values: np.ndarray, rng: np.random.Generator
) -> Tuple[int, float]:
    """Play one episode of ``rule`` on the offer ``values``.

    Returns
    -------
    Tuple[int, float]
        1-based index of the accepted offer and its value, or ``(0, 0.0)``
        when every offer is rejected.  ``rng`` is only consumed for
        acceptance probabilities strictly between 0 and 1.
    """
    values = np.asarray(values, dtype=float)
    for i in range(1, len(values) + 1):
        prob = rule.accept_probability(i, values[:i])
        if not 0.0 <= prob <= 1.0:
            raise InvalidParameter(f"Acceptance probability {prob!r} at offer {i} is not in [0, 1].")
        if prob == 1.0 or (prob > 0.0 and rng.random() < prob):
            return i, float(values[i - 1])
    return 0, 0.0


class NatureStrategy(ABC):
    """Chooses the offer distributions before the episodes are played."""

    correlated: bool = False

    @abstractmethod
    def distributions(self, n: int) -> List[DiscreteDistribution]:
        """Distribution of each offer ``1..n``."""


@dataclass(frozen=True)
class FixedIID(NatureStrategy):
    dist: DiscreteDistribution

    def distributions(self, n: int) -> List[DiscreteDistribution]:
        return [self.dist] * n


@dataclass(frozen=True)
class PerStepWorstCase(NatureStrategy):
    """Offer ``k`` follows the worst case at ``xi = T(k)``, the threshold the seller
    applies to it.

    Raises
    ------
    UnattainedBound
        For the mean-variance set, where no member attains the bound.
    """

    spec: AmbiguitySpec
    schedule: ThresholdSchedule

    def distributions(self, n: int) -> List[DiscreteDistribution]:
        validate(self.spec)
        if n != self.schedule.n:
            raise InvalidParameter(f"Schedule is for n={self.schedule.n} offers, not {n}.")
        found = []
        for k in range(1, n + 1):
            dist = worst_case_distribution(self.spec, self.schedule.values[k])
            gap = membership_discrepancy(dist, self.spec)
            if gap > MOMENT_TOL:
                raise ComputationError(
                    f"Worst case for offer {k} leaves the ambiguity set by {gap!r}."
                )
            found.append(dist)
        return found


@dataclass(frozen=True)
class FullyCorrelated(NatureStrategy):
    """Every offer of an episode takes one shared draw from ``dist``."""

    dist: DiscreteDistribution
    correlated: bool = True

    def distributions(self, n: int) -> List[DiscreteDistribution]:
        return [self.dist] * n


def _sample(dist: DiscreteDistribution, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws of ``dist`` from uniforms ``u``."""
    cdf = np.cumsum(dist.probs)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    return cast(np.ndarray, dist.points[idx])


class _Block(NamedTuple):
    payoffs: np.ndarray
    stops: np.ndarray
    offline_max: np.ndarray


def _play_block(
    rule: StoppingRule,
    dists: List[DiscreteDistribution],
    correlated: bool,
    size: int,
    seed: int,
    block: int,
) -> _Block:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))
    n = len(dists)
    if correlated:
        shared = _sample(dists[0], rng.random(size))
        values = np.repeat(shared[:, None], n, axis=1)
    else:
        uniforms = rng.random((size, n))
        values = np.column_stack([_sample(dist, uniforms[:, k]) for k, dist in enumerate(dists)])

    thresholds = rule.thresholds(n)
    if thresholds is not None:
        accepted = values >= thresholds
        stopped = accepted.any(axis=1)
        first = np.argmax(accepted, axis=1)
        stops = np.where(stopped, first + 1, 0)
        payoffs = np.where(stopped, values[np.arange(size), first], 0.0)
    else:
        played = [run_episode(rule, row, rng) for row in values]
        stops = np.array([index for index, _ in played], dtype=int)
        payoffs = np.array([payoff for _, payoff in played], dtype=float)
    return _Block(payoffs=payoffs, stops=stops, offline_max=values.max(axis=1))


def monte_carlo(
    rule: StoppingRule,
    nature: NatureStrategy,
    n: int,
    episodes: int,
    seed: int,
    threads: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> SimulationReport:
    """Estimate the expected payoff of ``rule`` against ``nature``.

    Parameters
    ----------
    rule : StoppingRule
        Seller's rule.
    nature : NatureStrategy
        Source of the offer distributions.
    n : int
        Number of offers per episode.
    episodes : int
        Number of simulated episodes, at least 1.
    seed : int
        Root seed; block ``b`` uses the Philox stream of
        ``SeedSequence(seed, spawn_key=(b,))``.
    threads : int
        Worker threads; does not change the result.
    block_size : int
        Episodes per block.  Changing it changes the random streams.

    Returns
    -------
    SimulationReport
        Mean payoff with its standard error (sample deviation with ``ddof=1``
        over ``sqrt(episodes)``), the stopping index histogram and the mean
        realized maximum of the offers.
    """
    if episodes < 1:
        raise InvalidParameter(f"Number of episodes must be at least 1, got {episodes}.")
    if n < 1:
        raise InvalidParameter(f"Number of offers must be at least 1, got n={n}.")
    if block_size < 1:
        raise InvalidParameter(f"Block size must be at least 1, got {block_size}.")

    dists = nature.distributions(n)
    blocks = (episodes + block_size - 1) // block_size
    sizes = [min(block_size, episodes - b * block_size) for b in range(blocks)]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        played = list(
            executor.map(
                lambda b: _play_block(rule, dists, nature.correlated, sizes[b], seed, b),
                range(blocks),
            )
        )

    payoffs = np.concatenate([part.payoffs for part in played])
    stops = np.concatenate([part.stops for part in played])
    offline = np.concatenate([part.offline_max for part in played])
    std_error = float(np.std(payoffs, ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    report = SimulationReport(
        episodes=episodes,
        mean_payoff=float(np.mean(payoffs)),
        std_error=std_error,
        seed=seed,
        selection_histogram=tuple(int(c) for c in np.bincount(stops, minlength=n + 1)),
        mean_offline_max=float(np.mean(offline)),
    )
    logger.info(
        "Simulated %s episodes of %s offers: payoff %.6f +- %.6f, %s without acceptance",
        episodes, n, report.mean_payoff, report.std_error, report.no_acceptance,
    )
    return report


def minimal_tail_mass(spec: AmbiguitySpec, T: float) -> float:
    """Infimum of ``P(X >= T)`` over the members of ``spec``.

    Below the mean the one-sided Chebyshev value
    ``(mu - T)**2/((mu - T)**2 + sigma2)`` is attained by two-point laws
    with the low point just under ``T`` whenever those fit in ``[0, L]``.
    The MAD kinds are not covered.
    """
    validate(spec)
    mu = spec.mu
    if T <= 0:
        return 1.0
    if spec.kind in (AmbiguityKind.MEAN_ONLY, AmbiguityKind.MEAN_VARIANCE):
        # mass just below T and a vanishing atom far out keep the mean
        return 0.0
    if spec.kind.has_mad:
        raise InvalidParameter(f"No tail mass bound for kind {spec.kind}.")
    sigma = spec.sigma
    if sigma == 0:
        return 1.0 if mu >= T else 0.0
    chebyshev = (mu - T) ** 2 / ((mu - T) ** 2 + spec.var)
    if spec.kind is AmbiguityKind.MEAN_VAR_SUPPORT:
        good = mu + spec.var / mu
        if T >= good:
            return 0.0
        if spec.L <= good:
            # only the law on {0, L} is left
            return mu / spec.L
        if T <= mu - spec.var / (spec.L - mu):
            return chebyshev
        return tail_infimum(mu, spec.var, spec.L, good - T)
    p_lo, p_hi = feasible_p_interval(mu, sigma, spec.L)
    if T > mu:
        # the high point grows with p, so the left end decides whether it clears T
        lowest_high = mu + math.sqrt(p_lo / (1 - p_lo)) * sigma
        return 1.0 - p_hi if lowest_high >= T else 0.0
    highest_low = mu - math.sqrt((1 - p_hi) / p_hi) * sigma
    if highest_low < T:
        return 1.0 - p_hi
    # the low point reaches T inside the interval
    return chebyshev


def static_threshold_payoff_bound(spec: AmbiguitySpec, T: float, n: int) -> float:
    """Lower bound ``1 - (1 - q)**n`` on the probability that a static threshold ``T``
    accepts some offer, with ``q`` from :func:`minimal_tail_mass`."""
    if n < 1:
        raise InvalidParameter(f"Number of offers must be at least 1, got n={n}.")
    q = minimal_tail_mass(spec, T)
    return 1.0 - (1.0 - q) ** n
