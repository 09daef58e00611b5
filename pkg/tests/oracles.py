"""Reference computations that share no code with the package.

Tests compare library output against these, and the frozen constants in the
test files were produced by running them once (see ``python3 tests/oracles.py``).
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy import integrate, stats


def finite_bayes(prior, rows, data) -> list[Fraction]:
    """Exact rational posterior on finite spaces: prior(θ) Π p_θ(x) / Σ."""
    prior = [Fraction(p).limit_denominator(10**9) for p in prior]
    rows = [[Fraction(v).limit_denominator(10**9) for v in r] for r in rows]
    un = []
    for p, row in zip(prior, rows):
        w = p
        for x in data:
            w *= row[x]
        un.append(w)
    s = sum(un)
    return [u / s for u in un]


def matmul_loops(A, B):
    """Matrix product with explicit loops (kernel composition on finite spaces)."""
    n, k = len(A), len(B)
    m = len(B[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            out[i][j] = sum(A[i][t] * B[t][j] for t in range(k))
    return out


def tv(a, b) -> float:
    return float(sum(abs(x - y) for x, y in zip(a, b)))


def conditional_given_statistic(family, images):
    """``P(x | T(x) = y)`` per member by enumeration, as ``{y: {x: value}}`` lists."""
    out = []
    for member in family:
        cond = {}
        for y in sorted(set(images)):
            fiber = [i for i, t in enumerate(images) if t == y]
            tot = sum(member[i] for i in fiber)
            cond[y] = {i: member[i] / tot for i in fiber} if tot > 0 else None
        out.append(cond)
    return out


def bernoulli_product(theta, n=2):
    labels = list(itertools.product((0, 1), repeat=n))
    return labels, [float(np.prod([theta if b else 1 - theta for b in lab])) for lab in labels]


def truncated_gaussian_posterior(x: float, lo=-20.0, hi=20.0):
    """Posterior mean/variance for prior N(0,1) and likelihood N(θ,1), both truncated to [lo, hi]."""
    def lik(t):
        z = stats.norm.cdf(hi - t) - stats.norm.cdf(lo - t)
        return stats.norm.pdf(x - t) / z

    def post(t, k):
        return t**k * stats.norm.pdf(t) * lik(t)

    z0 = integrate.quad(post, lo, hi, args=(0,), points=[x / 2], epsabs=1e-14)[0]
    m1 = integrate.quad(post, lo, hi, args=(1,), points=[x / 2], epsabs=1e-14)[0] / z0
    m2 = integrate.quad(post, lo, hi, args=(2,), points=[x / 2], epsabs=1e-14)[0] / z0
    return m1, m2 - m1 * m1


def beta_moments(a: float, b: float):
    s = a + b
    return a / s, a * b / (s * s * (s + 1))


def mixed_model_atom_ratio(r: float) -> float:
    """Posterior atom weight at x = 0 for 0.5·δ_0 vs 0.5·Uniform[0,1] with ball [0, r)."""
    return 0.5 / (0.5 + 0.5 * min(r, 1.0))


def stick_weights(theta: float, k: int):
    """Constant sticks ``θ`` give weights ``θ (1-θ)^i``."""
    return [theta * (1 - theta) ** i for i in range(k)]


if __name__ == "__main__":
    print("bernoulli pair x=1:", finite_bayes([0.5, 0.5], [[0.8, 0.2], [0.3, 0.7]], [1]))
    print("bernoulli pair x=1,1:", finite_bayes([0.5, 0.5], [[0.8, 0.2], [0.3, 0.7]], [1, 1]))
    print("dice 6,6,3:", finite_bayes([0.7, 0.3], [[1 / 6] * 6, [0.1] * 5 + [0.5]], [5, 5, 2]))
    print("gaussian x=1:", truncated_gaussian_posterior(1.0))
    print("beta(3,3):", beta_moments(3, 3), "beta(1,1):", beta_moments(1, 1))
    labels, f03 = bernoulli_product(0.3)
    _, f06 = bernoulli_product(0.6)
    print("sum conditional:", conditional_given_statistic([f03, f06], [sum(l) for l in labels]))
