"""Seeded random streams and the small statistical toolkit used by the checks.

Streams are derived from a :class:`SeedLineage` (a root seed plus a path of
derivation indices) through numpy's ``SeedSequence``/``Philox`` pair, which is
counter based and splittable: a child lineage never shares state with its
parent or its siblings, so draws can be farmed out in any order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

__all__ = [
    "SeedLineage",
    "MomentSummary",
    "KSResult",
    "as_lineage",
    "draw_uniform",
    "draw_beta",
    "draw_gamma",
    "draw_normal",
    "beta_variates",
    "ks_test",
    "ks_two_sample",
    "moment_summary",
    "moments_agree",
    "moments_match",
    "named_cdf",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedLineage:
    """A root seed and a derivation path; identical lineages give identical streams."""

    root: int
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "root", int(self.root) & _MASK64)
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))
        if any(i < 0 for i in self.path):
            raise ValueError("derivation indices must be non-negative")

    def child(self, index: int) -> "SeedLineage":
        return SeedLineage(self.root, self.path + (int(index),))

    def children(self, n: int) -> list["SeedLineage"]:
        return [self.child(i) for i in range(n)]

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.root, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))

    def __str__(self):
        return f"{self.root}:" + "/".join(str(i) for i in self.path)


def as_lineage(seed) -> SeedLineage:
    """Coerce an int, a lineage or ``None`` (seed 0) to a :class:`SeedLineage`."""
    if isinstance(seed, SeedLineage):
        return seed
    if seed is None:
        return SeedLineage(0)
    return SeedLineage(int(seed))


def _gen(source) -> np.random.Generator:
    if isinstance(source, np.random.Generator):
        return source
    return as_lineage(source).generator()


def draw_uniform(lineage, size=None, low=0.0, high=1.0):
    if not high > low:
        raise ValueError("need high > low")
    return _gen(lineage).uniform(low, high, size)


def draw_gamma(shape, lineage, size=None):
    """Gamma(shape, 1) variates.

    numpy's sampler is the Marsaglia-Tsang squeeze/rejection method, boosted
    by ``U**(1/shape)`` for shape < 1, so it is valid for every shape > 0.
    """
    if not shape > 0:
        raise ValueError(f"gamma shape must be positive, got {shape}")
    return _gen(lineage).standard_gamma(shape, size)


def beta_variates(gen: np.random.Generator, a: float, b: float, size=None):
    """Beta(a, b) as the Gamma ratio X / (X + Y) drawn from one generator."""
    if not (a > 0 and b > 0):
        raise ValueError(f"beta parameters must be positive, got ({a}, {b})")
    x = gen.standard_gamma(a, size)
    y = gen.standard_gamma(b, size)
    return x / (x + y)


def draw_beta(a, b, lineage, size=None):
    return beta_variates(_gen(lineage), a, b, size)


def draw_normal(mean, sd, lineage, size=None):
    if not sd > 0:
        raise ValueError(f"sd must be positive, got {sd}")
    return _gen(lineage).normal(mean, sd, size)


@dataclass(frozen=True)
class MomentSummary:
    n: int
    mean: float
    variance: float
    se_mean: float
    se_variance: float

    def as_dict(self):
        return {
            "n": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "se_mean": self.se_mean,
            "se_variance": self.se_variance,
        }


def moment_summary(samples) -> MomentSummary:
    """Mean, unbiased variance and their standard errors.

    The variance SE uses the fourth central moment,
    ``sqrt((m4 - s^4 (n - 3) / (n - 1)) / n)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("moment_summary needs at least two samples")
    mean = float(x.mean())
    dev = x - mean
    var = float(dev @ dev / (n - 1))
    m4 = float(np.mean(dev**4))
    var_of_var = max(m4 - var * var * (n - 3) / (n - 1), 0.0) / n
    return MomentSummary(n, mean, var, math.sqrt(var / n), math.sqrt(var_of_var))


def moments_match(a: MomentSummary, mean: float, variance: float, k: float = 3.0) -> tuple[bool, bool]:
    """Agreement of a sample summary with known moments within ``k`` SEs."""
    return abs(a.mean - mean) <= k * a.se_mean, abs(a.variance - variance) <= k * a.se_variance


def moments_agree(a: MomentSummary, b: MomentSummary, k: float = 3.0) -> tuple[bool, bool]:
    """Two-sample mean and variance agreement within ``k`` combined SEs."""
    mean_ok = abs(a.mean - b.mean) <= k * math.hypot(a.se_mean, b.se_mean)
    var_ok = abs(a.variance - b.variance) <= k * math.hypot(a.se_variance, b.se_variance)
    return mean_ok, var_ok


@dataclass(frozen=True)
class KSResult:
    statistic: float
    n: int
    critical_1pct: float
    critical_5pct: float

    @property
    def passed_1pct(self) -> bool:
        return self.statistic <= self.critical_1pct

    @property
    def passed_5pct(self) -> bool:
        return self.statistic <= self.critical_5pct

    def passed(self, level: float = 0.01) -> bool:
        if level == 0.01:
            return self.passed_1pct
        if level == 0.05:
            return self.passed_5pct
        raise ValueError("only the 1% and 5% levels are tabulated")

    def as_dict(self):
        return {
            "statistic": self.statistic,
            "n": self.n,
            "critical_1pct": self.critical_1pct,
            "critical_5pct": self.critical_5pct,
            "passed_1pct": self.passed_1pct,
            "passed_5pct": self.passed_5pct,
        }


# Asymptotic Kolmogorov quantiles K^{-1}(1 - level).
_KS_C = {0.01: 1.6276, 0.05: 1.3581}

_NAMED_CDFS: dict[str, Callable[..., Callable]] = {
    "uniform": lambda low=0.0, high=1.0: stats.uniform(low, high - low).cdf,
    "beta": lambda a, b: stats.beta(a, b).cdf,
    "normal": lambda mean=0.0, sd=1.0: stats.norm(mean, sd).cdf,
    "gamma": lambda shape, scale=1.0: stats.gamma(shape, scale=scale).cdf,
    "exponential": lambda scale=1.0: stats.expon(scale=scale).cdf,
}


def _critical(c: float, n_eff: float) -> float:
    # Stephens' finite-sample correction of the asymptotic value.
    rn = math.sqrt(n_eff)
    return c / (rn + 0.12 + 0.11 / rn)


def ks_test(samples, cdf, **params) -> KSResult:
    """One-sample Kolmogorov-Smirnov test against a named distribution.

    ``cdf`` is one of ``uniform``, ``beta``, ``normal``, ``gamma``,
    ``exponential`` (parameters passed as keywords) or a callable.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 30:
        raise ValueError("ks_test needs at least 30 samples")
    if callable(cdf):
        F = cdf
    else:
        try:
            F = _NAMED_CDFS[cdf](**params)
        except KeyError:
            raise ValueError(f"unsupported cdf {cdf!r}") from None
    u = np.asarray(F(x), dtype=float)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - u)), float(np.max(u - (i - 1) / n)))
    return KSResult(d, n, _critical(_KS_C[0.01], n), _critical(_KS_C[0.05], n))


def ks_two_sample(a, b) -> KSResult:
    """Two-sample Kolmogorov-Smirnov statistic with asymptotic critical values."""
    x = np.sort(np.asarray(a, dtype=float).ravel())
    y = np.sort(np.asarray(b, dtype=float).ravel())
    n, m = x.size, y.size
    if min(n, m) < 30:
        raise ValueError("ks_two_sample needs at least 30 samples per side")
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / n
    fy = np.searchsorted(y, grid, side="right") / m
    d = float(np.max(np.abs(fx - fy)))
    n_eff = n * m / (n + m)
    return KSResult(d, n + m, _critical(_KS_C[0.01], n_eff), _critical(_KS_C[0.05], n_eff))


def named_cdf(name: str, **params) -> Callable:
    return _NAMED_CDFS[name](**params)
