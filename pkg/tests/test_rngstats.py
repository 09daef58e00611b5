import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from probmorph.rngstats import (SeedLineage, as_lineage, draw_beta, draw_gamma, ks_test,
                                ks_two_sample, moment_summary, moments_agree, moments_match)


def test_lineage_streams_are_reproducible():
    a = as_lineage(7).child(3).generator().random(5)
    b = SeedLineage(7, (3,)).generator().random(5)
    assert np.array_equal(a, b)


def test_sibling_streams_differ():
    lin = as_lineage(0)
    assert not np.array_equal(lin.child(0).generator().random(4), lin.child(1).generator().random(4))


def test_lineage_string_form():
    assert str(as_lineage(5).child(2).child(9)) == "5:2/9"
    assert as_lineage(None) == SeedLineage(0)


def test_negative_paths_rejected():
    with pytest.raises(ValueError):
        SeedLineage(0, (-1,))


def test_gamma_small_shape_is_valid():
    x = draw_gamma(0.05, 1, size=20_000)
    assert np.all(x >= 0)
    s = moment_summary(x)
    assert moments_match(s, 0.05, 0.05, k=4)[0]


def test_moment_summary_matches_numpy():
    x = np.random.default_rng(1).normal(size=1000)
    s = moment_summary(x)
    assert s.mean == pytest.approx(x.mean())
    assert s.variance == pytest.approx(x.var(ddof=1))
    assert s.se_mean == pytest.approx(np.sqrt(x.var(ddof=1) / 1000))


def test_moments_agree_detects_shift():
    gen = np.random.default_rng(2)
    a = moment_summary(gen.normal(0, 1, 5000))
    b = moment_summary(gen.normal(0.3, 1, 5000))
    assert moments_agree(a, b) == (False, True)


def test_ks_accepts_the_right_law_and_rejects_the_wrong_one():
    x = draw_beta(3.0, 3.0, 11, size=10_000)
    assert ks_test(x, "beta", a=3.0, b=3.0).passed_1pct
    assert not ks_test(x, "beta", a=2.0, b=3.0).passed_1pct


def test_ks_statistic_matches_scipy():
    x = np.random.default_rng(4).uniform(size=500)
    assert ks_test(x, "uniform").statistic == pytest.approx(stats.kstest(x, "uniform").statistic)
    y = np.random.default_rng(5).uniform(size=300)
    assert ks_two_sample(x, y).statistic == pytest.approx(stats.ks_2samp(x, y).statistic)


def test_ks_needs_enough_samples():
    with pytest.raises(ValueError):
        ks_test(np.zeros(5), "uniform")


@given(st.integers(0, 2**63), st.lists(st.integers(0, 50), max_size=4))
def test_any_lineage_is_deterministic(root, path):
    lin = SeedLineage(root, tuple(path))
    assert np.array_equal(lin.generator().integers(0, 1 << 30, 3), lin.generator().integers(0, 1 << 30, 3))
