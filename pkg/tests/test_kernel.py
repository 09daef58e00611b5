import numpy as np
import pytest
from hypothesis import given, strategies as st

from probmorph.densities import Uniform
from probmorph.errors import SpaceMismatchError
from probmorph.kernel import (Kernel, MeasureCloud, MeasureSpace, compose, delta, ev_p, graph,
                              laws_check, parametric, pullback, pushforward_p, pushforward_s)
from probmorph.measure import LabelMap, Measure, total_variation
from probmorph.spaces import Region, SampleSpace, SimpleFunction

from oracles import matmul_loops
from strategies import finite_spaces, kernels, prob_measures


def test_from_matrix_validates_rows():
    X, Y = SampleSpace.finite("ab"), SampleSpace.finite("uv")
    with pytest.raises(ValueError):
        Kernel.from_matrix(X, Y, [[0.5, 0.6], [1.0, 0.0]])
    with pytest.raises(SpaceMismatchError):
        Kernel.from_matrix(X, Y, [[1.0], [1.0]])


def test_delta_kernel():
    unit = SampleSpace.interval(0.0, 1.0)
    d = delta(unit)
    m = d.at(0.3)
    assert m.point_mass(0.3) == 1.0
    mu = Measure.uniform(unit)
    assert pushforward_p(d, mu) is mu


def test_pushforward_finite():
    X, Y = SampleSpace.finite("ab"), SampleSpace.finite("uv")
    T = Kernel.from_matrix(X, Y, [[0.9, 0.1], [0.2, 0.8]])
    out = pushforward_p(T, Measure(X, vector=[0.5, 0.5]))
    np.testing.assert_allclose(out.vector, [0.55, 0.45])


def test_pushforward_rejects_non_probability():
    X = SampleSpace.finite("ab")
    with pytest.raises(ValueError):
        pushforward_p(delta(X), Measure(X, vector=[0.5, 0.2]))
    out = pushforward_s(delta(X), Measure(X, vector=[0.5, -0.2], signed=True))
    assert out.vector.tolist() == [0.5, -0.2]


def test_pushforward_of_density_is_flagged_approximate():
    unit = SampleSpace.interval(0.0, 1.0)
    coin = SampleSpace.finite([0, 1])
    T = parametric("bernoulli", unit, coin)
    out = pushforward_p(T, Measure.uniform(unit), particles=20_000, seed=1)
    assert out.approximate
    assert out.vector[1] == pytest.approx(0.5, abs=0.02)


def test_pullback_and_sup_norm():
    X, Y = SampleSpace.finite("ab"), SampleSpace.finite("uv")
    T = Kernel.from_matrix(X, Y, [[0.9, 0.1], [0.2, 0.8]])
    f = SimpleFunction.of_labels(Y, {"u": 1.0, "v": -1.0})
    g = pullback(T, f)
    assert g("a") == pytest.approx(0.8)
    assert g("b") == pytest.approx(-0.6)


def test_pullback_duality_with_pushforward():
    unit = SampleSpace.interval(0.0, 1.0)
    X = SampleSpace.finite("ab")
    T = Kernel.from_rows(X, unit, [Measure.uniform(unit), Measure.from_density(unit, Uniform([0.0], [0.5]))])
    f = SimpleFunction.indicator(Region.interval(unit, 0.0, 0.25))
    mu = Measure(X, vector=[0.3, 0.7])
    g = pullback(T, f)
    lhs = sum(w * g(lab) for lab, w in zip(X.labels, mu.vector))
    rhs = pushforward_p(T, mu).mass(Region.interval(unit, 0.0, 0.25))
    assert lhs == pytest.approx(rhs)


def test_compose_matches_loops():
    gen = np.random.default_rng(0)
    A = gen.dirichlet(np.ones(3), size=4)
    B = gen.dirichlet(np.ones(5), size=3)
    X, Y, Z = (SampleSpace.finite(range(k)) for k in (4, 3, 5))
    C = compose(Kernel.from_matrix(Y, Z, B), Kernel.from_matrix(X, Y, A))
    np.testing.assert_allclose(C.matrix, matmul_loops(A.tolist(), B.tolist()), atol=1e-15)


def test_compose_checks_spaces():
    X, Y = SampleSpace.finite("ab"), SampleSpace.finite("uv")
    with pytest.raises(SpaceMismatchError):
        compose(delta(X), delta(Y))


def test_lazy_composite_evaluates_pointwise():
    unit = SampleSpace.interval(0.0, 1.0)
    coin = SampleSpace.finite([0, 1])
    T1 = parametric("normal-location", unit, unit, sd=0.1)
    T2 = Kernel.from_map(LabelMap(coin, coin, [1, 0]))
    T3 = parametric("bernoulli", unit, coin)
    C = compose(T2, T3)
    assert C.at(0.3).vector.tolist() == pytest.approx([0.3, 0.7])
    assert compose(T3, T1).kind == "composite"


def test_ev_on_clouds():
    X = SampleSpace.finite("ab")
    cloud = MeasureCloud([Measure(X, vector=[1, 0]), Measure(X, vector=[0.5, 0.5])], [0.25, 0.75])
    np.testing.assert_allclose(ev_p(cloud).vector, [0.625, 0.375])
    nested = MeasureCloud([cloud, cloud], [0.5, 0.5])
    assert isinstance(ev_p(nested), MeasureCloud)


def test_identity_family_on_measures():
    unit = SampleSpace.interval(0.0, 1.0)
    elems = [Measure(unit, locs=[[0.2], [0.6]], weights=[0.5, 0.5]), Measure.dirac(unit, 0.6)]
    cloud = MeasureCloud(elems, [0.5, 0.5])
    T = parametric("identity", MeasureSpace(unit), unit)
    np.testing.assert_allclose(T.ball_masses(cloud, 0.6, 0.01), [0.5, 1.0])
    assert pushforward_p(T, cloud).point_mass(0.6) == pytest.approx(0.75)


def test_graph_marginals():
    X, Y = SampleSpace.finite("ab"), SampleSpace.finite("uv")
    T = Kernel.from_matrix(X, Y, [[0.9, 0.1], [0.2, 0.8]])
    J = graph(T, Measure(X, vector=[0.5, 0.5]))
    np.testing.assert_allclose(J.table.sum(), 1.0)
    np.testing.assert_allclose(J.marginal_x().vector, [0.55, 0.45])
    np.testing.assert_allclose(J.marginal_theta(), [0.5, 0.5])


def test_laws_check_passes_and_detects_faults():
    rep = laws_check(seed=1, sizes=6, trials=50)
    assert rep.passed(1e-12), rep.residuals

    def bad(T2, T1):
        M = compose(T2, T1).matrix
        return Kernel.from_matrix(T1.domain, T2.codomain, 0.5 * M + 0.5 / M.shape[1])

    assert not laws_check(seed=1, sizes=6, trials=20, compose_fn=bad).passed(1e-12)


@given(st.data())
def test_functoriality_and_associativity(data):
    X, Y, Z, W = (data.draw(finite_spaces()) for _ in range(4))
    T1 = data.draw(kernels(X, Y))
    T2 = data.draw(kernels(Y, Z))
    T3 = data.draw(kernels(Z, W))
    mu = data.draw(prob_measures(X))
    lhs = pushforward_p(compose(T2, T1), mu)
    rhs = pushforward_p(T2, pushforward_p(T1, mu))
    assert total_variation(lhs, rhs) <= 1e-12
    a = compose(T3, compose(T2, T1)).matrix
    b = compose(compose(T3, T2), T1).matrix
    assert np.max(np.abs(a - b)) <= 1e-12


@given(st.data())
def test_unit_laws(data):
    X, Y = data.draw(finite_spaces()), data.draw(finite_spaces())
    T = data.draw(kernels(X, Y))
    assert np.max(np.abs(compose(delta(Y), T).matrix - T.matrix)) == 0.0
    assert np.max(np.abs(compose(T, delta(X)).matrix - T.matrix)) == 0.0


@given(st.data())
def test_pushforward_stays_a_probability(data):
    X, Y = data.draw(finite_spaces()), data.draw(finite_spaces())
    out = pushforward_p(data.draw(kernels(X, Y)), data.draw(prob_measures(X)))
    assert out.is_probability(1e-12)
    assert np.all(out.vector >= 0)
