import math
import random

import numpy as np
import pytest

from stopping.ambiguity import membership_discrepancy
from stopping.consts import AmbiguityKind, Basis
from stopping.domain import AmbiguitySpec, Majorant
from stopping.errors import EmptyAmbiguitySet, InvalidParameter, PreconditionViolated, XiOutOfRange
from stopping.momentbound import (
    check_majorant,
    cox_breakpoints,
    cox_upper_bound,
    cox_worst_case,
    mad_breakpoints,
    mad_upper_bound,
    mad_worst_case,
    solve_on_support,
    tail_extremal,
    tail_infimum,
    tail_lower_bound,
)
from stopping.oracle import verify_certificate


# cox_upper_bound

def test_cox_upper_bound_values():
    assert cox_upper_bound(1.0, 0.5, 3.0, 0.0) == 0.0
    assert cox_upper_bound(1.0, 0.5, 3.0, 1.5) == pytest.approx(1.0, abs=1e-12)
    assert cox_upper_bound(1.0, 0.5, 3.0, 1.0) == pytest.approx(5 / 6, abs=1e-12)
    assert cox_upper_bound(1.0, 0.5, 3.0, 3.0) == 1.0
    assert cox_upper_bound(1.0, 0.5, 3.0, 0.5) == 0.5


def test_cox_upper_bound_errors():
    with pytest.raises(XiOutOfRange):
        cox_upper_bound(1.0, 0.5, 3.0, 3.5)
    with pytest.raises(XiOutOfRange):
        cox_upper_bound(1.0, 0.5, 3.0, -0.1)
    with pytest.raises(EmptyAmbiguitySet):
        cox_upper_bound(1.0, 1.5, 2.0, 1.0)


def test_cox_continuity_and_monotonicity():
    mu, sigma2, L = 1.0, 0.5, 3.0
    low, high = cox_breakpoints(mu, sigma2, L)
    for point in (low, high):
        left = cox_upper_bound(mu, sigma2, L, point)
        right = cox_upper_bound(mu, sigma2, L, point + 1e-13)
        assert abs(left - right) <= 1e-12
    xs = np.linspace(0.0, L, 2001)
    values = np.array([cox_upper_bound(mu, sigma2, L, x) for x in xs])
    steps = np.diff(values)
    assert np.all(steps >= -1e-12)
    assert np.all(steps <= np.diff(xs) + 1e-12)


# cox_worst_case

def test_cox_worst_case_middle():
    cert = cox_worst_case(1.0, 0.5, 3.0, 1.0)
    assert cert.regime == 2
    assert cert.regime_name == "middle"
    assert cert.primal.points == pytest.approx([0.0, 1.0, 3.0])
    assert cert.primal.probs == pytest.approx([1 / 6, 3 / 4, 1 / 12], abs=1e-12)
    assert cert.primal_objective() == pytest.approx(5 / 6, abs=1e-12)
    assert cert.dual.lambdas == pytest.approx((0.0, 4 / 3, -1 / 3))
    assert cert.dual_objective() == pytest.approx(5 / 6, abs=1e-12)


def test_cox_worst_case_other_regimes():
    upper = cox_worst_case(1.0, 0.5, 3.0, 3.0)
    assert upper.regime == 3
    assert upper.value == 1.0
    assert upper.primal_objective() == pytest.approx(1.0, abs=1e-12)
    assert upper.dual.lambdas == (0.0, 1.0, 0.0)

    lower = cox_worst_case(1.0, 0.5, 3.0, 0.0)
    assert lower.regime == 1
    assert lower.value == 0.0
    assert lower.primal.probs == pytest.approx([1 / 6, 3 / 4, 1 / 12], abs=1e-12)

    # at the upper breakpoint the mass on L vanishes
    edge = cox_worst_case(1.0, 0.5, 3.0, 1.5)
    assert edge.primal.points == pytest.approx([0.0, 1.5])
    assert edge.primal.probs == pytest.approx([1 / 3, 2 / 3], abs=1e-12)


def test_cox_worst_case_degenerate():
    cert = cox_worst_case(2.0, 0.0, 4.0, 1.0)
    assert cert.regime == 0
    assert cert.regime_name == "degenerate"
    assert cert.value == 1.0
    assert cert.primal.atoms == ((2.0, 1.0),)


def test_cox_certificates_random():
    rng = random.Random(5)
    for _ in range(300):
        mu = rng.uniform(0.5, 3.0)
        L = mu + rng.uniform(0.5, 5.0)
        sigma2 = mu * (L - mu) * rng.uniform(0.05, 0.95)
        xi = rng.uniform(0.0, L)
        spec = AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=mu, sigma2=sigma2, support_upper=L)
        cert = cox_worst_case(mu, sigma2, L, xi)
        report = verify_certificate(cert, spec)
        assert report.passed, report.checks


# mad bound

def test_mad_breakpoints():
    xi1, xi1_alt, xi2 = mad_breakpoints(1.0, 0.5, 4.0)
    assert xi1 == pytest.approx(1 - 1.5 / 5.5)
    assert xi1_alt == pytest.approx(1 - 2 / 6)
    assert xi2 == pytest.approx(4 / 3)
    assert xi1_alt <= xi1
    assert mad_breakpoints(1.0, 0.5, math.inf) == pytest.approx((1.0, 1.0, 4 / 3))


def test_mad_upper_bound_values():
    assert mad_upper_bound(1.0, 0.5, 4.0, 4 / 3) == pytest.approx(1.0, abs=1e-12)
    assert mad_upper_bound(1.0, 0.5, 4.0, 1.2) == pytest.approx(0.9, abs=1e-12)
    assert mad_upper_bound(1.0, 0.5, 4.0, 0.0) == 0.0
    assert mad_upper_bound(1.0, 0.5, 4.0, 2.0) == 1.0
    assert mad_upper_bound(1.0, 0.5, 4.0, 0.5) == pytest.approx(0.5)
    assert mad_upper_bound(1.0, 0.5, 4.0, 0.8) == pytest.approx(1 - 0.5 * 3.2 / 6)


def test_mad_worst_case_regimes():
    cert = mad_worst_case(1.0, 0.5, 4.0, 1.2)
    assert cert.regime == 3
    assert cert.regime_name == "right-middle"
    assert cert.primal.points == pytest.approx([0.0, 4 / 3])
    assert cert.primal.probs == pytest.approx([0.25, 0.75])
    assert cert.primal_objective() == pytest.approx(0.9, abs=1e-12)

    upper = mad_worst_case(1.0, 0.5, 4.0, 2.0)
    assert upper.regime == 4
    assert upper.primal.points == pytest.approx([0.0, 1.0, 2.0])
    assert upper.primal.probs == pytest.approx([0.25, 0.5, 0.25], abs=1e-12)
    assert upper.primal_objective() == pytest.approx(1.0, abs=1e-12)

    middle = mad_worst_case(1.0, 0.5, 4.0, 0.8)
    assert middle.regime == 2
    assert middle.primal.points == pytest.approx([0.0, 0.8, 4.0])
    assert middle.breakpoint_source == "both"


def test_mad_breakpoint_adjudication():
    # between the two candidate breakpoints only the constant xi is attainable
    cert = mad_worst_case(1.0, 0.5, 4.0, 0.7)
    assert cert.regime == 1
    assert cert.value == pytest.approx(0.7)
    assert cert.breakpoint_source == "statement"


def test_mad_without_support_bound():
    cert = mad_worst_case(1.0, 0.5, math.inf, 2.0)
    assert cert.regime == 4
    assert cert.value == 1.0
    assert mad_upper_bound(1.0, 0.5, math.inf, 1.2) == pytest.approx(0.9)
    assert mad_upper_bound(1.0, 0.5, math.inf, 0.0) == 0.0
    with pytest.raises(PreconditionViolated):
        mad_upper_bound(1.0, 0.5, math.inf, 0.5)


def test_mad_continuity():
    mu, d, L = 1.0, 0.5, 4.0
    _, _, xi2 = mad_breakpoints(mu, d, L)
    for point in (mu, xi2):
        assert abs(mad_upper_bound(mu, d, L, point) - mad_upper_bound(mu, d, L, point + 1e-12)) <= 1e-11
    xs = np.linspace(0.0, L, 2001)
    values = np.array([mad_upper_bound(mu, d, L, x) for x in xs])
    assert np.all(np.diff(values) >= -1e-12)


def test_mad_certificates_random():
    rng = random.Random(9)
    for _ in range(300):
        mu = rng.uniform(0.5, 3.0)
        L = mu + rng.uniform(0.5, 5.0)
        d = 2 * mu * (L - mu) / L * rng.uniform(0.05, 0.95)
        xi = rng.uniform(0.0, L)
        spec = AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD_SUPPORT, mu=mu, mad=d, support_upper=L)
        cert = mad_worst_case(mu, d, L, xi)
        report = verify_certificate(cert, spec)
        assert report.passed, report.checks
        assert membership_discrepancy(cert.primal, spec) <= 1e-9


# check_majorant

def test_check_majorant():
    for xi in [0.0, 0.5, 2.0]:
        assert check_majorant(Majorant(Basis.POLYNOMIAL2, (xi, 0.0, 0.0)), xi, 3.0) <= 0.0

    dual = cox_worst_case(1.0, 0.5, 3.0, 1.0).dual
    assert check_majorant(dual, 1.0, 3.0, 10_000) <= 1e-9
    assert check_majorant(dual.perturbed(1, -0.1), 1.0, 3.0, 10_000) > 0.05

    with pytest.raises(InvalidParameter):
        check_majorant(dual, 1.0, 3.0, 1)


def test_solve_on_support():
    solved = solve_on_support((0.0, 1.0, 3.0), (1.0, 1.0, 1.5), Basis.POLYNOMIAL2)
    assert solved is not None
    points, probs = solved
    assert points.tolist() == [0.0, 1.0, 3.0]
    assert probs == pytest.approx([1 / 6, 3 / 4, 1 / 12])
    # mean outside the support
    assert solve_on_support((2.0, 3.0, 4.0), (1.0, 1.0, 1.5), Basis.POLYNOMIAL2) is None


# tail bounds

def test_tail_lower_bound():
    assert tail_lower_bound(1.0, 0.5, 3.0, 0.15) == pytest.approx(1 / 30)
    assert tail_lower_bound(1.0, 0.5, 3.0, 1e-9) == pytest.approx(1e-9 / 4.5)
    with pytest.raises(InvalidParameter):
        tail_lower_bound(1.0, 2.0, 3.0, 0.1)
    with pytest.raises(InvalidParameter):
        tail_lower_bound(1.0, 0.5, 3.0, 0.0)


def test_tail_infimum():
    assert tail_infimum(1.0, 0.5, 3.0, 0.15) == pytest.approx(1 / 33)
    assert tail_infimum(1.0, 0.5, 3.0, 0.15) <= tail_lower_bound(1.0, 0.5, 3.0, 0.15)
    extremal = tail_extremal(1.0, 0.5, 3.0, 0.15)
    assert extremal is not None
    assert extremal.mass_at(3.0) == pytest.approx(1 / 33)
