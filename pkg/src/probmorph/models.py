"""Ready-made Bayesian models used by the examples, the CLI and the test suite."""
from __future__ import annotations

import numpy as np

from .bayes import BayesianModel, Particles
from .densities import Beta, TruncNormal, Uniform
from .kernel import Kernel, MeasureCloud, MeasureSpace, parametric
from .measure import Measure
from .spaces import SampleSpace

__all__ = ["SHIPPED", "build", "bernoulli_pair", "mixed_atom_uniform", "gaussian_conjugate",
           "beta_bernoulli", "uniform_scale", "half_uniform", "dice", "dp_prior_model"]


def bernoulli_pair() -> BayesianModel:
    """Two coins, Bern(0.2) and Bern(0.7), with a uniform prior."""
    theta = SampleSpace.finite(["theta1", "theta2"])
    X = SampleSpace.finite([0, 1])
    lik = Kernel.from_matrix(theta, X, [[0.8, 0.2], [0.3, 0.7]])
    return BayesianModel(lik, Measure(theta, vector=[0.5, 0.5]), name="bernoulli-pair")


def dice() -> BayesianModel:
    """A fair die against one loaded towards six."""
    theta = SampleSpace.finite(["fair", "loaded"])
    X = SampleSpace.finite([1, 2, 3, 4, 5, 6])
    lik = Kernel.from_matrix(theta, X, [[1 / 6] * 6, [0.1, 0.1, 0.1, 0.1, 0.1, 0.5]])
    return BayesianModel(lik, Measure(theta, vector=[0.7, 0.3]), name="dice")


def mixed_atom_uniform() -> BayesianModel:
    """δ_0 against Uniform[0,1]: a family with no common dominating measure."""
    theta = SampleSpace.finite(["atom", "uniform"])
    X = SampleSpace.interval(0.0, 1.0)
    rows = [Measure.dirac(X, 0.0), Measure.uniform(X)]
    return BayesianModel(Kernel.from_rows(theta, X, rows), Measure(theta, vector=[0.5, 0.5]),
                         name="mixed-atom-uniform")


def gaussian_conjugate(n: int = 100_000, seed=0) -> BayesianModel:
    """Prior N(0,1) as ``n`` particles, likelihood N(θ,1); both truncated to [-20, 20]."""
    space = SampleSpace.interval(-20.0, 20.0)
    prior = Particles.from_density(TruncNormal([0.0], 1.0, [-20.0], [20.0]), n, seed)
    lik = parametric("normal-location", space, space, sd=1.0)
    return BayesianModel(lik, prior, name="gaussian-conjugate")


def beta_bernoulli(n: int = 20_000, seed=0, a: float = 1.0, b: float = 1.0) -> BayesianModel:
    """Beta(a, b) prior particles with a Bernoulli likelihood."""
    unit = SampleSpace.interval(0.0, 1.0)
    prior = Particles.from_density(Beta(a, b), n, seed)
    lik = parametric("bernoulli", unit, SampleSpace.finite([0, 1]))
    return BayesianModel(lik, prior, name="beta-bernoulli")


def uniform_scale() -> BayesianModel:
    """Uniform[0, θ] with θ ∈ {1, 2} equally likely, on X = [0, 2]."""
    theta = SampleSpace.finite([1.0, 2.0])
    X = SampleSpace.interval(0.0, 2.0)
    rows = [Measure.from_density(X, Uniform([0.0], [t])) for t in theta.labels]
    return BayesianModel(Kernel.from_rows(theta, X, rows), Measure(theta, vector=[0.5, 0.5]),
                         name="uniform-scale")


def half_uniform() -> BayesianModel:
    """A single parameter whose likelihood is Uniform[0, 0.5] on X = [0, 1]."""
    theta = SampleSpace.finite(["only"])
    X = SampleSpace.interval(0.0, 1.0)
    rows = [Measure.from_density(X, Uniform([0.0], [0.5]))]
    return BayesianModel(Kernel.from_rows(theta, X, rows), Measure(theta, vector=[1.0]),
                         name="half-uniform")


def dp_prior_model(n: int = 200, seed=0, alpha: Measure | None = None,
                   space: SampleSpace | None = None) -> BayesianModel:
    """Parameters are random measures drawn by stick-breaking; the likelihood is θ ↦ θ.

    The default base measure ``Uniform[0,1] + δ_{0.5}`` makes the atom at 0.5
    shared by every draw, so data there have a well-defined posterior.
    """
    from .dirichlet import DirichletParam, stick_breaking_sample

    X = space if space is not None else (alpha.space if alpha is not None else SampleSpace.interval(0.0, 1.0))
    if alpha is None:
        alpha = Measure(X, locs=[[0.5]], weights=[1.0], densities=[(Uniform([0.0], [1.0]), 1.0)])
    draws = stick_breaking_sample(DirichletParam(alpha), n, seed)
    cloud = MeasureCloud([d.as_measure() for d in draws], np.full(n, 1.0 / n))
    lik = parametric("identity", MeasureSpace(X), X)
    return BayesianModel(lik, Particles(cloud, np.full(n, 1.0 / n)), name="dp-prior")


SHIPPED = {
    "bernoulli-pair": bernoulli_pair,
    "dice": dice,
    "mixed-atom-uniform": mixed_atom_uniform,
    "gaussian-conjugate": gaussian_conjugate,
    "beta-bernoulli": beta_bernoulli,
    "uniform-scale": uniform_scale,
    "half-uniform": half_uniform,
    "dp-prior": dp_prior_model,
}


def build(name: str, **kwargs) -> BayesianModel:
    try:
        return SHIPPED[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown shipped model {name!r}; choose from {sorted(SHIPPED)}") from None
