import math

import numpy as np
import pytest

from stopping.ambiguity import feasible_p_interval
from stopping.consts import AmbiguityKind
from stopping.domain import AmbiguitySpec
from stopping.errors import InvalidParameter
from stopping.momentbound import (
    BOTH,
    STATEMENT,
    cox_upper_bound,
    mad_breakpoints,
    mad_upper_bound,
    mad_worst_case,
    tail_infimum,
)
from stopping.oracle import (
    candidate_points,
    certificate_for,
    enumerate_extremal,
    enumerate_tail_minimum,
    grid_min_two_point,
    two_point_grid_oracle,
    verify_spec,
    xi_sweep,
)
from stopping.thresholds import two_point_bound, two_point_step_objective


def test_grid_min_two_point():
    interval = feasible_p_interval(1.0, math.sqrt(1.3), 5.0)
    found = grid_min_two_point(2.0, 1.0, math.sqrt(1.3), interval, 101)
    assert found.bracket == (interval.lo, interval.hi)
    assert found.grid_step == pytest.approx((interval.hi - interval.lo) / 100)
    # the objective is concave in p, so the minimum sits at an end of the interval
    assert found.best_arg in (interval.lo, interval.hi)
    ends = [two_point_step_objective(2.0, 1.0, math.sqrt(1.3), p) for p in interval]
    assert found.best_value == pytest.approx(min(ends))


def test_grid_min_two_point_errors():
    with pytest.raises(InvalidParameter):
        grid_min_two_point(1.0, 1.0, 1.0, (0.2, 0.8), 2)
    with pytest.raises(InvalidParameter):
        grid_min_two_point(1.0, 1.0, 1.0, (0.8, 0.2), 10)


def test_two_point_grid_oracle(two_point_spec):
    oracle = two_point_grid_oracle(two_point_spec, 61)
    for xi in [0.0, 0.5, 1.0, 2.0, 2.3, 4.0]:
        assert oracle(xi) == pytest.approx(two_point_bound(1.0, 1.3, 5.0, xi), abs=1e-12)
    with pytest.raises(InvalidParameter):
        two_point_grid_oracle(
            AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=1.0, sigma2=0.5, support_upper=3.0), 10
        )


def test_candidate_points(mvs_spec):
    xs = candidate_points(mvs_spec, 7, extra=(1.2,))
    for point in [0.0, 0.5, 0.75, 1.0, 1.2, 1.5, 3.0]:
        assert min(abs(xs - point)) < 1e-12
    assert list(xs) == sorted(xs)


@pytest.mark.parametrize("xi", [0.0, 0.5, 0.75, 1.0, 1.2, 1.5, 2.0, 3.0])
def test_enumeration_matches_variance_bound(mvs_spec, xi):
    found = enumerate_extremal(mvs_spec, xi, grid_points=31)
    assert found.best_value == pytest.approx(cox_upper_bound(1.0, 0.5, 3.0, xi), abs=1e-9)
    assert found.best_distribution is not None


@pytest.mark.parametrize("xi", [0.0, 0.5, 0.7, 0.8, 1.0, 1.2, 4 / 3, 2.0, 4.0])
def test_enumeration_matches_mad_bound(mad_spec, xi):
    found = enumerate_extremal(mad_spec, xi, grid_points=31)
    assert found.best_value == pytest.approx(mad_upper_bound(1.0, 0.5, 4.0, xi), abs=1e-9)


def _random_pairs(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        mu = rng.uniform(0.5, 2.0)
        L = mu * rng.uniform(1.2, 6.0)
        yield mu, L, rng.uniform(0.05, 0.95), rng.uniform(0.0, L)


@pytest.mark.slow
def test_enumeration_matches_variance_bound_on_random_sets():
    for mu, L, share, xi in _random_pairs(200, seed=5):
        sigma2 = share * mu * (L - mu)
        spec = AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=mu, sigma2=sigma2, support_upper=L)
        found = enumerate_extremal(spec, xi, grid_points=60)
        bound = cox_upper_bound(mu, sigma2, L, xi)
        assert found.best_value == pytest.approx(bound, abs=1e-9 * L), (spec, xi)


@pytest.mark.slow
def test_enumeration_matches_mad_bound_on_random_sets():
    for mu, L, share, xi in _random_pairs(200, seed=6):
        d = share * 2 * mu * (L - mu) / L
        spec = AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD_SUPPORT, mu=mu, mad=d, support_upper=L)
        found = enumerate_extremal(spec, xi, grid_points=60)
        bound = mad_upper_bound(mu, d, L, xi)
        assert found.best_value == pytest.approx(bound, abs=1e-9 * L), (spec, xi)
        if xi >= mu:
            continue
        # left of the mean the lower breakpoint xi1 separates the two regimes
        cert = mad_worst_case(mu, d, L, xi)
        xi1, _, _ = mad_breakpoints(mu, d, L)
        if abs(xi - xi1) > 1e-9:
            assert cert.breakpoint_source in (STATEMENT, BOTH), (spec, xi)
            assert (cert.regime == 1) == (xi <= xi1), (spec, xi)


def test_enumeration_two_point(two_point_spec):
    found = enumerate_extremal(two_point_spec, 2.0, grid_points=41)
    assert len(found.best_arg) <= 2
    assert found.best_value <= two_point_bound(1.0, 1.3, 5.0, 2.0) + 1e-9


def test_enumeration_needs_finite_support():
    spec = AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD, mu=1.0, mad=0.5)
    with pytest.raises(InvalidParameter):
        enumerate_extremal(spec, 1.0)


def test_enumerate_tail_minimum(mvs_spec):
    found = enumerate_tail_minimum(mvs_spec, 1.35, grid_points=31)
    assert found.best_value >= tail_infimum(1.0, 0.5, 3.0, 0.15) - 1e-9
    assert found.best_value == pytest.approx(1 / 33, abs=1e-6)


def test_certificate_for(mvs_spec, mad_spec):
    assert certificate_for(mvs_spec, 1.0).value == pytest.approx(5 / 6)
    assert certificate_for(mad_spec, 1.2).value == pytest.approx(0.9)
    with pytest.raises(InvalidParameter):
        certificate_for(AmbiguitySpec(kind=AmbiguityKind.MEAN_ONLY, mu=1.0), 1.0)


def test_xi_sweep(mvs_spec):
    assert xi_sweep(mvs_spec, 4) == [0.0, 1.0, 2.0, 3.0]
    unbounded = xi_sweep(AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD, mu=1.0, mad=0.5), 5)
    assert unbounded[0] == 0.0
    assert unbounded[1] == 1.0
    assert unbounded[-1] == pytest.approx(8 / 3)
    with pytest.raises(InvalidParameter):
        xi_sweep(mvs_spec, 0)


@pytest.mark.parametrize(
    "spec",
    [
        AmbiguitySpec(kind=AmbiguityKind.MEAN_ONLY, mu=1.0),
        AmbiguitySpec(kind=AmbiguityKind.MEAN_VARIANCE, mu=1.0, sigma2=2.0),
        AmbiguitySpec(kind=AmbiguityKind.TWO_POINT, mu=1.0, sigma2=1.3, support_upper=5.0),
        AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=1.0, sigma2=0.5, support_upper=3.0),
        AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD_SUPPORT, mu=1.0, mad=0.5, support_upper=4.0),
        AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD, mu=1.0, mad=0.5),
    ],
    ids=lambda s: str(s.kind),
)
def test_verify_spec_passes(spec):
    report = verify_spec(spec, xi_count=9, grid_points=25, n=10)
    assert report.passed, report.failures
    assert "schedule_agreement" in report.checks


def test_verify_spec_threads_agree(mvs_spec):
    single = verify_spec(mvs_spec, xi_count=7, grid_points=21, n=5, threads=1)
    pooled = verify_spec(mvs_spec, xi_count=7, grid_points=21, n=5, threads=3)
    assert single.checks == pooled.checks
