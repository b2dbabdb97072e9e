"""Domain classes for robust stopping."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union, cast

import numpy as np

from stopping.consts import (
    ATOM_MERGE_TOL,
    INFINITY,
    MAD_REGIME_NAMES,
    PROB_CLAMP_TOL,
    PROB_SUM_TOL,
    SUPPORT_TOL,
    VARIANCE_REGIME_NAMES,
    AmbiguityKind,
    Basis,
    Method,
)
from stopping.errors import InvalidDistribution, InvalidParameter

Atom = Tuple[float, float]
ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class AmbiguitySpec:
    """Which moments and support bound of an offer distribution are known.

    ``sigma2`` is present for the variance kinds, ``mad`` for the MAD kinds
    and ``support_upper`` for the kinds carrying a support bound.  A mean-MAD
    set without support bound is treated as having ``L = +inf``.
    """

    kind: AmbiguityKind
    mu: float
    sigma2: Optional[float] = None
    mad: Optional[float] = None
    support_upper: Optional[float] = None

    @property
    def L(self) -> float:
        """Support upper bound, ``inf`` when the set has none."""
        return self.support_upper if self.support_upper is not None else INFINITY

    @property
    def var(self) -> float:
        if self.sigma2 is None:
            raise InvalidParameter(f"{self.kind} carries no variance.")
        return self.sigma2

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)

    @property
    def d(self) -> float:
        if self.mad is None:
            raise InvalidParameter(f"{self.kind} carries no mean absolute deviation.")
        return self.mad

    def as_dict(self) -> Dict[str, Any]:
        """Return the JSON object form ``{"kind", "mu", "sigma2"?, "mad"?, "L"?}``."""
        data: Dict[str, Any] = {"kind": self.kind.value, "mu": self.mu}
        if self.sigma2 is not None:
            data["sigma2"] = self.sigma2
        if self.mad is not None:
            data["mad"] = self.mad
        if self.support_upper is not None:
            data["L"] = self.support_upper
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AmbiguitySpec":
        """Build a spec from its JSON object form (no validation)."""
        def optional(key: str) -> Optional[float]:
            value = data.get(key)
            return None if value is None else float(value)

        try:
            return cls(
                kind=AmbiguityKind.get(str(data["kind"])),
                mu=float(data["mu"]),
                sigma2=optional("sigma2"),
                mad=optional("mad"),
                support_upper=optional("L"),
            )
        except KeyError as ex:
            raise InvalidParameter(f"Spec is missing the field {ex}.") from ex
        except (TypeError, ValueError) as ex:
            raise InvalidParameter(f"Spec field is not a number: {ex}.") from ex


@dataclass(frozen=True)
class DiscreteDistribution:
    """A finite distribution: strictly increasing points with probabilities.

    Use :meth:`from_atoms` to build one from raw construction output; it
    clamps round-off negatives, drops empty atoms and merges near-duplicate
    points before checking the invariants.
    """

    atoms: Tuple[Atom, ...]

    @classmethod
    def from_atoms(
        cls, atoms: Iterable[Sequence[float]], support_upper: Optional[float] = None
    ) -> "DiscreteDistribution":
        """Normalize and validate raw ``(point, probability)`` pairs.

        Parameters
        ----------
        atoms : Iterable[Sequence[float]]
            Pairs of support point and probability, in any order.
        support_upper : Optional[float]
            Support bound the points must respect, if any.

        Raises
        ------
        InvalidDistribution
            If a probability is negative beyond round-off, the total mass is
            not one or a point lies outside ``[0, support_upper]``.
        """
        raw: List[Atom] = []
        for point, prob in atoms:
            point, prob = float(point), float(prob)
            if prob < -PROB_CLAMP_TOL:
                raise InvalidDistribution(f"Negative probability {prob!r} at {point!r}.")
            raw.append((point, max(prob, 0.0)))

        total = math.fsum(prob for _, prob in raw)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise InvalidDistribution(f"Probabilities sum to {total!r}, not 1.")

        kept = sorted((pt, prob / total) for pt, prob in raw if prob > 0.0)
        if not kept:
            raise InvalidDistribution("Distribution has no atoms.")

        scale = support_upper if support_upper is not None and math.isfinite(support_upper) else 1.0
        merge_tol = ATOM_MERGE_TOL * max(1.0, scale)
        merged: List[Atom] = []
        for point, prob in kept:
            if merged and point - merged[-1][0] <= merge_tol:
                last_point, last_prob = merged[-1]
                mass = last_prob + prob
                merged[-1] = ((last_point * last_prob + point * prob) / mass, mass)
            else:
                merged.append((point, prob))

        if merged[0][0] < -SUPPORT_TOL:
            raise InvalidDistribution(f"Negative support point {merged[0][0]!r}.")
        if support_upper is not None and merged[-1][0] > support_upper + SUPPORT_TOL:
            raise InvalidDistribution(
                f"Support point {merged[-1][0]!r} exceeds the bound {support_upper!r}."
            )
        return cls(atoms=tuple((max(pt, 0.0), prob) for pt, prob in merged))

    @classmethod
    def point_mass(cls, point: float) -> "DiscreteDistribution":
        return cls(atoms=((float(point), 1.0),))

    @property
    def points(self) -> np.ndarray:
        return np.array([pt for pt, _ in self.atoms], dtype=float)

    @property
    def probs(self) -> np.ndarray:
        return np.array([prob for _, prob in self.atoms], dtype=float)

    @property
    def max_point(self) -> float:
        return self.atoms[-1][0]

    def mass_at(self, point: float, tol: float = 1e-9) -> float:
        """Probability of the atom at ``point`` (0 when there is none)."""
        return math.fsum(prob for pt, prob in self.atoms if abs(pt - point) <= tol)

    def expect_min(self, xi: float) -> float:
        """Return ``E[min(xi, X)]``."""
        return math.fsum(prob * min(xi, pt) for pt, prob in self.atoms)

    def as_dict(self) -> Dict[str, Any]:
        return {"atoms": [[pt, prob] for pt, prob in self.atoms]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiscreteDistribution":
        try:
            atoms = [(float(pt), float(prob)) for pt, prob in data["atoms"]]
        except (KeyError, TypeError, ValueError) as ex:
            raise InvalidDistribution(f"Malformed distribution document: {ex}.") from ex
        return cls.from_atoms(atoms)


@dataclass(frozen=True)
class ThresholdSchedule:
    """Robust thresholds ``T(0..n)``; offer ``i`` is accepted iff ``v_i >= T(i)``."""

    n: int
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidParameter(f"Number of offers must be at least 1, got {self.n}.")
        if len(self.values) != self.n + 1:
            raise InvalidParameter(
                f"Schedule for n={self.n} needs {self.n + 1} values, got {len(self.values)}."
            )

    @property
    def payoff(self) -> float:
        """The robust expected payoff ``T(0)``."""
        return self.values[0]

    @property
    def acceptance_thresholds(self) -> np.ndarray:
        """Thresholds applied to offers ``1..n``."""
        return np.array(self.values[1:], dtype=float)


class PInterval(NamedTuple):
    """Feasible range of the low-point probability of a two-point member."""

    lo: float
    hi: float

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi


@dataclass(frozen=True)
class TurningPointReport:
    """Per-step comparison of the left-endpoint and right-endpoint recursions.

    ``left_values[i]`` and ``right_values[i]`` are the candidate values of
    ``T(i)`` obtained from the same ``T(i+1)``.
    """

    n: int
    n0: Optional[int]
    switch_index: Optional[int]
    left_values: Tuple[float, ...]
    right_values: Tuple[float, ...]

    def is_switch(self, i: int) -> bool:
        return self.switch_index is not None and i == self.switch_index


@dataclass(frozen=True)
class Majorant:
    """Dual solution ``lambda0 + lambda1*x + lambda2*phi(x)`` of a moment bound.

    ``phi`` is ``x**2`` for the polynomial basis and ``|x - center|`` for the
    MAD basis.
    """

    basis: Basis
    lambdas: Tuple[float, float, float]
    center: float = 0.0

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        l0, l1, l2 = self.lambdas
        if self.basis is Basis.POLYNOMIAL2:
            return cast(ArrayLike, l0 + l1 * x + l2 * np.square(x))
        return cast(ArrayLike, l0 + l1 * x + l2 * np.abs(np.subtract(x, self.center)))

    def objective(self, rhs: Tuple[float, float, float]) -> float:
        """Dual objective against the moment right hand side ``(1, mu, q2)``."""
        return math.fsum(lam * q for lam, q in zip(self.lambdas, rhs))

    def perturbed(self, index: int, delta: float) -> "Majorant":
        lambdas = list(self.lambdas)
        lambdas[index] += delta
        return Majorant(basis=self.basis, lambdas=(lambdas[0], lambdas[1], lambdas[2]), center=self.center)


@dataclass(frozen=True)
class MomentBoundCertificate:
    """Tight value of ``max E[min(xi, X)]`` with a primal-dual proof.

    ``rhs`` holds the moment right hand side ``(1, mu, q2)`` where ``q2`` is
    ``mu**2 + sigma2`` (polynomial basis) or ``d`` (MAD basis).
    ``breakpoint_source`` records, for the MAD bound left of the mean, which
    of the two candidate lower breakpoints agreed with the maximum.
    """

    value: float
    regime: int
    primal: DiscreteDistribution
    dual: Majorant
    xi: float
    rhs: Tuple[float, float, float]
    breakpoint_source: Optional[str] = None

    @property
    def regime_name(self) -> str:
        names = VARIANCE_REGIME_NAMES if self.dual.basis is Basis.POLYNOMIAL2 else MAD_REGIME_NAMES
        return names[self.regime]

    def primal_objective(self) -> float:
        return self.primal.expect_min(self.xi)

    def dual_objective(self) -> float:
        return self.dual.objective(self.rhs)


@dataclass(frozen=True)
class GridSearchResult:
    """Best candidate of a brute-force search.

    ``best_arg`` is the parameter ``p`` for the two-point search and the
    support points for the enumeration search.
    """

    best_arg: Union[float, Tuple[float, ...]]
    best_value: float
    grid_step: float
    bracket: Tuple[float, float]
    best_distribution: Optional[DiscreteDistribution] = None


@dataclass(frozen=True)
class SimulationReport:
    """Monte Carlo estimate of a rule's payoff against a nature strategy.

    ``selection_histogram[0]`` counts episodes where no offer was accepted,
    ``selection_histogram[i]`` those that stopped at offer ``i``.
    """

    episodes: int
    mean_payoff: float
    std_error: float
    seed: int
    selection_histogram: Tuple[int, ...]
    mean_offline_max: float = 0.0

    @property
    def no_acceptance(self) -> int:
        return self.selection_histogram[0]

    @property
    def acceptance_rate(self) -> float:
        return 1.0 - self.no_acceptance / self.episodes


@dataclass
class VerificationReport:
    """Discrepancies found while checking closed forms against oracles."""

    tolerance: float
    checks: Dict[str, float] = field(default_factory=dict)

    def record(self, name: str, discrepancy: float) -> None:
        """Keep the worst discrepancy seen for ``name``."""
        self.checks[name] = max(self.checks.get(name, 0.0), float(discrepancy))

    @property
    def failures(self) -> Dict[str, float]:
        return {name: value for name, value in self.checks.items() if value > self.tolerance}

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class ThresholdResult:
    """A schedule with what was computed alongside it.

    ``turning_points`` accompanies two-point schedules with ``L > 2*mu``;
    ``generic`` and ``max_difference`` are set when both methods ran.
    """

    spec: AmbiguitySpec
    method: Method
    schedule: ThresholdSchedule
    turning_points: Optional[TurningPointReport] = None
    generic: Optional[ThresholdSchedule] = None
    max_difference: Optional[float] = None


@dataclass(frozen=True)
class FigureOneRow:
    """Both endpoint recursions at step ``i`` and the threshold they give."""

    i: int
    f_star: float
    g_star: float
    threshold: float
    is_switch: bool


@dataclass(frozen=True)
class FigureFiveRow:
    """Worst-case weights on ``{0, xi, L}`` at ``xi = T(i+1)``."""

    i: int
    xi: float
    mass_zero: float
    mass_xi: float
    mass_upper: float


@dataclass(frozen=True)
class FigureData:
    number: int
    rows: Tuple[Union[FigureOneRow, FigureFiveRow], ...]
