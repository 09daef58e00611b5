import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from probmorph.dirichlet import (DirichletParam, aggregate, aggregation_check, conjugacy_check,
                                 dir_continuity_probe, dir_density, dir_posterior, dir_sample,
                                 dp_moment_check, dp_posterior, dp_project, dp_project_many,
                                 dp_pushforward, naturality_check, stick_breaking_sample)
from probmorph.errors import ZeroMassError
from probmorph.measure import LabelMap, Measure, PartitionMap
from probmorph.rngstats import ks_test, moment_summary, moments_match
from probmorph.spaces import SampleSpace

from oracles import beta_moments, stick_weights


@pytest.fixture
def two_unif(unit):
    return DirichletParam(Measure.uniform(unit, 2.0))


def test_density_values():
    assert dir_density([1.0, 1.0], [0.3, 0.7]) == pytest.approx(1.0)
    assert dir_density([2.0, 1.0], [0.3, 0.7]) == pytest.approx(0.6)
    assert dir_density([1.0, 1.0, 1.0], [0.5, 0.5, 0.0]) == pytest.approx(2.0)
    assert dir_density([1.0, 0.0], [0.5, 0.5]) == 0.0
    assert dir_density([1.0, 0.0], [1.0, 0.0]) == 1.0


def test_density_matches_scipy():
    a = np.array([1.5, 2.0, 3.5])
    x = np.array([0.2, 0.3, 0.5])
    assert dir_density(a, x) == pytest.approx(stats.dirichlet(a).pdf(x))


def test_sample_on_the_support_face():
    x = dir_sample([5.0, 0.0], 100, seed=1)
    assert np.all(x == [1.0, 0.0])
    with pytest.raises(ZeroMassError):
        dir_sample([0.0, 0.0], 5)


def test_sample_marginal_is_beta():
    x = dir_sample([1.0, 2.0, 3.0], 10_000, seed=4)
    assert ks_test(x[:, 0], "beta", a=1.0, b=5.0).passed_1pct
    np.testing.assert_allclose(x.sum(axis=1), 1.0)


def test_aggregate_sums_cells():
    assert aggregate([0.1, 0.2, 0.7], [0, 0, 1]).tolist() == pytest.approx([0.3, 0.7])


def test_posterior_adds_atoms():
    a = DirichletParam.finite([1.0, 2.0, 3.0], labels="abc")
    assert dir_posterior(a, "b").vector.tolist() == [1.0, 3.0, 3.0]
    assert dp_posterior(a, ["a", "a"]).vector.tolist() == [3.0, 2.0, 3.0]


def test_fixed_stick_weights(two_unif):
    d = stick_breaking_sample(two_unif, 1, seed=0, fixed_stick=0.5)[0]
    np.testing.assert_allclose(d.weights, stick_weights(0.5, d.truncation), rtol=1e-14)
    assert d.remainder < 1e-10 <= d.remainder * 2


def test_partial_sums_identity(two_unif):
    for d in stick_breaking_sample(two_unif, 20, seed=5):
        assert d.weights.sum() + d.remainder == pytest.approx(1.0, abs=1e-14)
        assert d.remainder < 1e-10
        assert np.all((d.locs >= 0) & (d.locs <= 1))


def test_truncation_cap(two_unif):
    d = stick_breaking_sample(two_unif, 1, seed=0, truncation=5)[0]
    assert d.truncation == 5 and d.remainder > 1e-10


def test_draws_are_individually_replayable(two_unif):
    many = stick_breaking_sample(two_unif, 5, seed=9)
    again = stick_breaking_sample(two_unif, 5, seed=9)
    for a, b in zip(many, again):
        assert np.array_equal(a.weights, b.weights) and np.array_equal(a.locs, b.locs)
    assert many[3].lineage == "9:3"


def test_projection_splits_remainder(unit, two_unif):
    halves = PartitionMap.intervals(unit, [0.5])
    d = stick_breaking_sample(two_unif, 1, seed=0, truncation=3)[0]
    p = dp_project(d, halves)
    assert p.sum() == pytest.approx(1.0, abs=1e-14)
    inside = d.weights[d.locs[:, 0] < 0.5].sum()
    assert p[0] == pytest.approx(inside + 0.5 * d.remainder)


def test_pushforward_of_a_draw(unit, two_unif):
    halves = PartitionMap.intervals(unit, [0.5])
    d = stick_breaking_sample(two_unif, 1, seed=2)[0]
    pd = dp_pushforward(d, halves)
    np.testing.assert_allclose(pd.alpha.vector, [1.0, 1.0])
    np.testing.assert_allclose(dp_project(pd, LabelMap(pd.space, pd.space, [0, 1])),
                               dp_project(d, halves), atol=1e-14)


def test_finite_space_sticks():
    a = DirichletParam.finite([1.0, 2.0, 3.0])
    draws = stick_breaking_sample(a, 3000, seed=3)
    cells = dp_project_many(draws, LabelMap(a.space, a.space, [0, 1, 2]))
    s = moment_summary(cells[:, 2])
    assert all(moments_match(s, *beta_moments(3.0, 3.0)))


def test_dp_moments_small(unit, two_unif):
    rep = dp_moment_check(two_unif, PartitionMap.intervals(unit, [0.5]), n=3000, seed=1)
    assert rep.passed and rep.info["remainder_ok"]


def test_aggregation_small():
    # each check combines 3·SE moment tests with 1% KS tests, so a correct
    # sampler still fails about 2% of seeds; require 8 of 10
    a = DirichletParam.finite([1.0, 2.0, 3.0])
    collapse = LabelMap(a.space, SampleSpace.finite([0, 1]), [0, 0, 1])
    passed = sum(aggregation_check(a, collapse, 3000, s).passed for s in range(10))
    assert passed >= 8


def test_naturality_small(unit, two_unif):
    halves = PartitionMap.intervals(unit, [0.5])
    assert naturality_check(two_unif, halves, 2000, 3).passed


def test_conjugacy_small(unit, two_unif):
    halves = PartitionMap.intervals(unit, [0.5])
    rep = conjugacy_check(two_unif, [0.3, 0.8, 0.9], halves, 2000, 4)
    assert rep.passed
    assert rep.info["projected_posterior_alpha"] == [2.0, 3.0]


def test_continuity_probe():
    rep = dir_continuity_probe([[2.0, 1.0], [1.5, 1.0], [1.01, 1.0]], [1.0, 1.0], 5000, 6)
    assert rep.passed and rep.info["monotone"]


def test_a_wrong_identity_is_caught(unit, two_unif):
    # the conjugacy check must fail if the data are ignored on one side
    halves = PartitionMap.intervals(unit, [0.5])
    rep = conjugacy_check(two_unif, [0.1] * 6, halves, 3000, 7)
    assert rep.passed
    from probmorph import dirichlet as dmod
    left = dp_project_many(stick_breaking_sample(two_unif, 3000, 8), halves)
    right = dir_sample([1.0 + 6, 1.0], 3000, 9)
    assert not dmod._compare_cells(left, right, None)[0]["passed"]


@given(st.lists(st.floats(0.1, 5.0), min_size=2, max_size=5), st.integers(0, 1000))
def test_samples_lie_on_the_simplex(alpha, seed):
    x = dir_sample(alpha, 50, seed)
    assert np.all(x >= 0)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-12)


@given(st.floats(0.05, 0.95), st.floats(0.5, 20.0))
def test_stick_scan_partial_sums(theta, total):
    unit = SampleSpace.interval(0.0, 1.0)
    d = stick_breaking_sample(DirichletParam(Measure.uniform(unit, total)), 1, fixed_stick=theta)[0]
    assert d.weights.sum() + d.remainder == pytest.approx(1.0, abs=1e-13)
    assert d.remainder < 1e-10
