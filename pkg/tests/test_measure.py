import numpy as np
import pytest
from hypothesis import given, strategies as st

from probmorph.densities import Beta, TruncNormal, Uniform, density_from_spec
from probmorph.errors import OutsideSpaceError, SpaceMismatchError, ZeroMassError
from probmorph.measure import (AffineMap, LabelMap, Measure, PartitionMap, add_measures,
                               ball_probability, integrate, measure_from_spec, normalize,
                               pushforward_measure, total_variation)
from probmorph.spaces import Region, SampleSpace, SimpleFunction

from strategies import finite_spaces, prob_measures, prob_vectors


# spaces ------------------------------------------------------------------

def test_finite_labels_must_be_distinct():
    with pytest.raises(ValueError):
        SampleSpace.finite(["a", "a"])


def test_euclidean_box_must_be_nonempty():
    with pytest.raises(ValueError):
        SampleSpace.euclidean((0.0,), (0.0,))


def test_point_validation(unit):
    assert unit.point(0.3).tolist() == [0.3]
    with pytest.raises(OutsideSpaceError):
        unit.point(1.5)
    with pytest.raises(OutsideSpaceError):
        SampleSpace.finite("ab").point("c")


def test_list_labels_are_frozen_to_tuples():
    sp = SampleSpace.finite([[0, 1], [1, 0]])
    assert sp.point([0, 1]) == (0, 1)
    assert sp.index((1, 0)) == 1


def test_diameters(unit):
    assert unit.diameter == 1.0
    assert SampleSpace.euclidean((0, 0), (3, 4)).diameter == 5.0
    assert SampleSpace.finite("abc").diameter == 1.0


# measures ----------------------------------------------------------------

def test_negative_weights_need_signed():
    sp = SampleSpace.finite("ab")
    with pytest.raises(ValueError):
        Measure(sp, vector=[0.5, -0.1])
    assert Measure(sp, vector=[0.5, -0.1], signed=True).total_mass == pytest.approx(0.4)


def test_atoms_merge_within_tolerance(unit):
    m = Measure(unit, locs=[[0.25], [0.25 + 1e-13], [0.5]], weights=[0.2, 0.3, 0.5])
    assert m.locations.shape[0] == 2
    assert m.point_mass(0.25) == pytest.approx(0.5)


def test_hybrid_mass_and_ball(unit):
    m = measure_from_spec(unit, {"atoms": [[0.0, 0.5]], "densities": [{"family": "uniform", "weight": 0.5}]})
    assert m.total_mass == 1.0
    assert m.is_probability()
    assert ball_probability(m, 0.0, 0.1) == pytest.approx(0.5 + 0.05)
    assert ball_probability(m, 0.3, 0.1) == pytest.approx(0.1)
    assert m.mass(Region.interval(unit, 0.0, 0.5)) == pytest.approx(0.75)


def test_discrete_metric_balls():
    sp = SampleSpace.finite("abc")
    m = Measure(sp, vector=[0.2, 0.3, 0.5])
    assert ball_probability(m, "b", 0.5) == 0.3
    assert ball_probability(m, "b", 1.0) == 0.3
    assert ball_probability(m, "b", 1.5) == pytest.approx(1.0)


def test_label_pushforward_sums_preimages():
    X = SampleSpace.finite("abc")
    Y = SampleSpace.finite("uv")
    mu = Measure(X, vector=[0.2, 0.3, 0.5])
    out = pushforward_measure(LabelMap(X, Y, {"a": "u", "b": "u", "c": "v"}), mu)
    assert out.vector.tolist() == [0.5, 0.5]


def test_partition_pushforward_of_uniform(unit):
    halves = PartitionMap.intervals(unit, [0.5])
    out = pushforward_measure(halves, Measure.uniform(unit))
    np.testing.assert_allclose(out.vector, [0.5, 0.5], atol=1e-15)
    assert halves(0.5) == 1 and halves(0.49) == 0 and halves(1.0) == 1


def test_affine_pushforward_is_exact():
    X = SampleSpace.interval(0.0, 1.0)
    Y = SampleSpace.interval(0.0, 2.0)
    out = pushforward_measure(AffineMap(X, Y, [2.0], [0.0]), Measure.uniform(X))
    assert not out.approximate
    assert out.mass(Region.interval(Y, 0.0, 1.0)) == pytest.approx(0.5)


def test_total_variation_of_densities(unit):
    a = Measure.uniform(unit)
    b = Measure.from_density(unit, Uniform([0.0], [0.5]))
    assert total_variation(a, b) == pytest.approx(1.0, abs=1e-9)
    assert total_variation(a, a) == 0.0


def test_normalize_and_zero_mass():
    sp = SampleSpace.finite("ab")
    assert normalize(Measure(sp, vector=[1.0, 3.0])).vector.tolist() == [0.25, 0.75]
    with pytest.raises(ZeroMassError):
        normalize(Measure.zero(sp))


def test_integrate_simple_function(unit):
    f = SimpleFunction.indicator(Region.interval(unit, 0.0, 0.5), 2.0) + \
        SimpleFunction.indicator(Region.interval(unit, 0.5, 1.0, closed=True), -1.0)
    mu = Measure(unit, locs=[[0.25]], weights=[0.5], densities=[(Uniform([0.0], [1.0]), 0.5)])
    # 0.5·2 + 0.5·(0.5·2 - 0.5·1)
    assert integrate(f, mu) == pytest.approx(1.25)


def test_space_mismatch_raises(unit):
    with pytest.raises(SpaceMismatchError):
        add_measures(Measure.uniform(unit), Measure.uniform(SampleSpace.interval(0.0, 2.0)))


def test_spec_round_trip(unit):
    spec = {"atoms": [[0.25, 0.4]], "densities": [{"family": "beta", "a": 2.0, "b": 3.0, "weight": 0.6}]}
    m = measure_from_spec(unit, spec)
    again = measure_from_spec(unit, m.to_spec())
    assert total_variation(m, again) == pytest.approx(0.0, abs=1e-12)


def test_density_families_integrate_to_one():
    for d in (Uniform([0.0], [2.0]), TruncNormal([0.5], 0.3, [0.0], [1.0]), Beta(2.0, 5.0),
              density_from_spec({"family": "piecewise-constant", "edges": [0, 0.5, 1], "values": [1, 3]},
                                [0.0], [1.0])):
        lo, hi = d.lower, d.upper
        assert d.box_mass(np.asarray(lo), np.asarray(hi)) == pytest.approx(1.0, abs=1e-12)


def test_sampling_matches_mass(unit):
    m = measure_from_spec(unit, {"atoms": [[0.0, 0.5]], "densities": [{"family": "uniform", "weight": 0.5}]})
    x = m.sample(np.random.default_rng(3), 20_000)
    frac = np.mean(x[:, 0] == 0.0)
    assert abs(frac - 0.5) < 4 * np.sqrt(0.25 / 20_000)


# properties --------------------------------------------------------------

@given(st.data())
def test_pushforward_preserves_mass_and_is_linear(data):
    X = data.draw(finite_spaces())
    Y = data.draw(finite_spaces())
    table = data.draw(st.lists(st.integers(0, Y.size - 1), min_size=X.size, max_size=X.size))
    kappa = LabelMap(X, Y, table)
    a = data.draw(prob_measures(X))
    b = data.draw(prob_measures(X))
    c = data.draw(st.floats(0.0, 5.0))
    pa, pb = pushforward_measure(kappa, a), pushforward_measure(kappa, b)
    assert pa.total_mass == pytest.approx(1.0)
    lhs = pushforward_measure(kappa, add_measures(a, b.scaled(c)))
    np.testing.assert_allclose(lhs.vector, pa.vector + c * pb.vector, atol=1e-12)


@given(prob_vectors(4), prob_vectors(4))
def test_total_variation_is_a_metric(u, v):
    sp = SampleSpace.finite(range(4))
    a, b = Measure(sp, vector=u), Measure(sp, vector=v)
    d = total_variation(a, b)
    assert 0.0 <= d <= 2.0 + 1e-12
    assert d == pytest.approx(total_variation(b, a))


@given(st.floats(0.0, 1.0), st.floats(1e-6, 0.5))
def test_ball_mass_of_uniform_is_clipped_interval(x, r):
    unit = SampleSpace.interval(0.0, 1.0)
    want = min(x + r, 1.0) - max(x - r, 0.0)
    assert ball_probability(Measure.uniform(unit), x, r) == pytest.approx(want, abs=1e-12)
