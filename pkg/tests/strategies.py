"""Hypothesis strategies for random finite spaces, measures and kernels."""
import numpy as np
from hypothesis import strategies as st

from probmorph.kernel import Kernel
from probmorph.measure import Measure
from probmorph.spaces import SampleSpace


def prob_vectors(n: int):
    return st.lists(st.floats(0.01, 10.0), min_size=n, max_size=n).map(
        lambda v: np.asarray(v) / np.sum(v))


@st.composite
def finite_spaces(draw, max_size=6):
    return SampleSpace.finite(range(draw(st.integers(1, max_size))))


@st.composite
def prob_measures(draw, space):
    return Measure(space, vector=draw(prob_vectors(space.size)))


@st.composite
def stochastic_matrices(draw, n, m):
    return np.vstack([draw(prob_vectors(m)) for _ in range(n)])


@st.composite
def kernels(draw, domain, codomain):
    return Kernel.from_matrix(domain, codomain, draw(stochastic_matrices(domain.size, codomain.size)))
