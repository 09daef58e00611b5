import numpy as np
import pytest
from hypothesis import given, strategies as st

from probmorph import models
from probmorph.bayes import (BayesianModel, Particles, RadiusSchedule, ball_posterior,
                             classical_bayes_posterior, consistency_check, exact_finite_posterior,
                             lopital_posterior, marginal, posterior_equivalence_check,
                             posterior_kernel, singular_set_probe)
from probmorph.errors import MethodMismatchError
from probmorph.kernel import Kernel, delta, pushforward_p
from probmorph.measure import Measure
from probmorph.spaces import SampleSpace

from oracles import beta_moments, finite_bayes, mixed_model_atom_ratio
from strategies import prob_vectors

# frozen oracle outputs (tests/oracles.py)
BERN_X1 = (2 / 9, 7 / 9)
BERN_X11 = (4 / 53, 49 / 53)
DICE_663 = (35 / 116, 81 / 116)


def test_oracle_constants_are_current():
    assert tuple(map(float, finite_bayes([0.5, 0.5], [[0.8, 0.2], [0.3, 0.7]], [1]))) == BERN_X1
    assert tuple(map(float, finite_bayes([0.5, 0.5], [[0.8, 0.2], [0.3, 0.7]], [1, 1]))) == BERN_X11


def test_exact_bernoulli_pair():
    m = models.bernoulli_pair()
    np.testing.assert_allclose(exact_finite_posterior(m, [1]).weights, BERN_X1, rtol=1e-15)
    np.testing.assert_allclose(exact_finite_posterior(m, [1, 1]).weights, BERN_X11, rtol=1e-15)


def test_ball_equals_exact_bitwise_on_finite_models():
    for m, data in ((models.bernoulli_pair(), [1]), (models.bernoulli_pair(), [0, 1, 1]),
                    (models.dice(), [6, 6, 3])):
        a = exact_finite_posterior(m, data).weights
        b = ball_posterior(m, data).weights
        assert np.array_equal(a, b)
    np.testing.assert_allclose(exact_finite_posterior(models.dice(), [6, 6, 3]).weights, DICE_663)


def test_exact_rejects_continuous_models():
    with pytest.raises(MethodMismatchError):
        exact_finite_posterior(models.mixed_atom_uniform(), [0.0])


def test_mixed_model_at_the_atom():
    m = models.mixed_atom_uniform()
    rep = ball_posterior(m, [0.0])
    assert rep.converged and not rep.singular
    assert rep.weights[0] >= 1 - 1e-3
    for row in rep.trace:
        assert row["ratios"][0] == pytest.approx(mixed_model_atom_ratio(row["r"]), abs=1e-10)
    assert rep.denominator_monotone


def test_mixed_model_off_the_atom():
    rep = ball_posterior(models.mixed_atom_uniform(), [0.5])
    assert rep.weights[1] >= 1 - 1e-12
    assert rep.converged


def test_mixed_model_rejects_density_methods():
    m = models.mixed_atom_uniform()
    with pytest.raises(MethodMismatchError):
        lopital_posterior(m, [0.0])
    with pytest.raises(MethodMismatchError):
        classical_bayes_posterior(m, [0.5])


def test_singular_datum_falls_back_to_prior():
    m = models.half_uniform()
    rep = ball_posterior(m, [0.75])
    assert rep.singular and not rep.converged
    assert rep.weights.tolist() == m.weights.tolist()
    assert not ball_posterior(m, [0.25]).singular


def test_singular_probe_on_half_uniform():
    m = models.half_uniform()
    probe = singular_set_probe(m, [[0.75], [0.25]])
    assert probe.flagged == [True, False]
    assert probe.marginal_mass == 0.0


def test_uniform_scale_lopital():
    m = models.uniform_scale()
    rep = lopital_posterior(m, [0.5])
    np.testing.assert_allclose(rep.weights, [2 / 3, 1 / 3])
    assert rep.dui_verified
    np.testing.assert_allclose(ball_posterior(m, [0.5]).weights, [2 / 3, 1 / 3], atol=1e-12)


def test_gaussian_ball_and_classical_agree():
    m = models.gaussian_conjugate(n=20_000, seed=3)
    c = classical_bayes_posterior(m, [1.0]).summary()
    rep = ball_posterior(m, [1.0])
    b = rep.summary(extrapolated=True)
    assert rep.converged
    assert abs(c["mean"] - b["mean"]) <= 5 * c["se_mean"]
    assert abs(c["variance"] - b["variance"]) <= 5 * c["se_variance"]
    assert abs(c["mean"] - 0.5) <= 5 * c["se_mean"]


def test_beta_bernoulli_moments():
    m = models.beta_bernoulli(n=20_000, seed=1)
    data = [1, 1, 0, 1]
    s = ball_posterior(m, data).summary()
    mean, var = beta_moments(1 + 3, 1 + 1)
    assert abs(s["mean"] - mean) <= 5 * s["se_mean"]
    assert abs(s["variance"] - var) <= 5 * s["se_variance"]


def test_dp_prior_model_posterior():
    m = models.dp_prior_model(n=100, seed=2)
    rep = ball_posterior(m, [0.5])
    assert rep.converged and not rep.singular
    # every draw has an atom at 0.5 so the weights are the normalised atom masses
    masses = np.array([d.point_mass(0.5) for d in m.points])
    np.testing.assert_allclose(rep.weights, masses / masses.sum(), atol=1e-9)
    assert ball_posterior(m, [0.123456]).singular or ball_posterior(m, [0.123456]).converged


def test_consistency_is_zero_on_shipped_models():
    cases = [(models.bernoulli_pair(), [1]), (models.dice(), [6]), (models.mixed_atom_uniform(), [0.0]),
             (models.mixed_atom_uniform(), [0.5]), (models.uniform_scale(), [0.5]),
             (models.half_uniform(), [0.25])]
    for m, data in cases:
        assert consistency_check(m, data) <= 1e-6


def test_schedule_parse_and_limits():
    unit = SampleSpace.interval(0.0, 1.0)
    s = RadiusSchedule.parse("0.25,,10", unit)
    assert (s.r0, s.ratio, s.max_steps) == (0.25, 0.5, 10)
    assert RadiusSchedule.default(unit).r0 == 0.125
    with pytest.raises(ValueError):
        RadiusSchedule(0.1, ratio=1.5)
    with pytest.raises(ValueError):
        RadiusSchedule(0.9).check_space(unit)


def test_posterior_kernel_inverts_the_likelihood():
    m = models.bernoulli_pair()
    Q = posterior_kernel(m)
    assert posterior_equivalence_check(m, Q)
    flat = Kernel.constant(m.sample_space, m.prior)
    assert not posterior_equivalence_check(m, flat)
    # p_* Q_* μ_X = μ_X
    mx = marginal(m)
    back = pushforward_p(m.likelihood, pushforward_p(Q, mx))
    np.testing.assert_allclose(back.vector, mx.vector, atol=1e-10)


def test_delta_likelihood_gives_delta_posterior():
    X = SampleSpace.finite("abc")
    m = BayesianModel(delta(X), Measure(X, vector=[0.2, 0.3, 0.5]))
    Q = posterior_kernel(m)
    assert Q.matrix.tolist() == np.eye(3).tolist()
    assert posterior_equivalence_check(m, Q)


def test_particles_validate_weights():
    with pytest.raises(ValueError):
        Particles(np.zeros((3, 1)), [0.5, 0.5])
    with pytest.raises(ValueError):
        Particles(np.zeros((2, 1)), [1.5, -0.5])


@st.composite
def finite_models(draw):
    k = draw(st.integers(1, 4))
    n = draw(st.integers(2, 5))
    T = SampleSpace.finite(range(k))
    X = SampleSpace.finite(range(n))
    rows = np.vstack([draw(prob_vectors(n)) for _ in range(k)])
    prior = draw(prob_vectors(k))
    data = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=4))
    return BayesianModel(Kernel.from_matrix(T, X, rows), Measure(T, vector=prior)), data


@given(finite_models())
def test_product_rule(case):
    m, data = case
    full = exact_finite_posterior(m, data).weights
    seq = m
    for x in data:
        w = exact_finite_posterior(seq, [x]).weights
        seq = BayesianModel(m.likelihood, Measure(m.theta_space, vector=w / w.sum()))
    np.testing.assert_allclose(seq.weights, full, atol=1e-12)


@given(finite_models())
def test_ball_reduction_is_bitwise(case):
    m, data = case
    rep = ball_posterior(m, data)
    assert np.array_equal(rep.weights, exact_finite_posterior(m, data).weights)
    assert abs(rep.weights.sum() - 1.0) <= 1e-10


@given(finite_models())
def test_bayes_inversion_round_trip(case):
    m, _ = case
    Q = posterior_kernel(m)
    assert posterior_equivalence_check(m, Q)
