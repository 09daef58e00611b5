"""Named probability density families on euclidean sample spaces.

All shipped families are products of one-dimensional factors, so box masses
are products of axis masses and ball masses reduce to nested one-dimensional
integrals over slices.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special, stats

from ._backend import ndtr_diff
from .errors import OutsideSpaceError

__all__ = [
    "Density",
    "Uniform",
    "TruncNormal",
    "Beta",
    "PiecewiseConstant",
    "FAMILIES",
    "density_from_spec",
]

_QUAD_EPSREL = 1e-10


class Density:
    """A probability density on a box; subclasses supply the axis factors."""

    family = "abstract"

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if np.any(self.upper <= self.lower):
            raise ValueError(f"{self.family}: empty support")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    # axis factors -----------------------------------------------------
    def axis_mass(self, axis: int, a: float, b: float) -> float:
        raise NotImplementedError

    def axis_pdf(self, axis: int, t):
        raise NotImplementedError

    def axis_sample(self, axis: int, gen: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def axis_breakpoints(self, axis: int) -> list[float]:
        return [self.lower[axis], self.upper[axis]]

    # derived ------------------------------------------------------------
    def params(self) -> dict:
        raise NotImplementedError

    def key(self):
        def fz(v):
            if isinstance(v, (list, tuple, np.ndarray)):
                return tuple(fz(x) for x in np.asarray(v).tolist())
            return float(v)
        return (self.family,) + tuple((k, fz(v)) for k, v in sorted(self.params().items()))

    def __eq__(self, other):
        return isinstance(other, Density) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"

    def pdf(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        out = np.ones(pts.shape[0])
        for a in range(self.dim):
            out *= self.axis_pdf(a, pts[:, a])
        return out

    def box_mass(self, lower, upper) -> float:
        lower = np.atleast_1d(lower)
        upper = np.atleast_1d(upper)
        m = 1.0
        for a in range(self.dim):
            lo = max(lower[a], self.lower[a])
            hi = min(upper[a], self.upper[a])
            if hi <= lo:
                return 0.0
            m *= self.axis_mass(a, lo, hi)
        return m

    def ball_mass(self, x, r) -> float:
        """Mass of the euclidean ball of radius ``r`` about ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._ball(x, float(r), 0)

    def _ball(self, x, r, axis) -> float:
        lo = max(x[axis] - r, self.lower[axis])
        hi = min(x[axis] + r, self.upper[axis])
        if hi <= lo:
            return 0.0
        if axis == self.dim - 1:
            return self.axis_mass(axis, lo, hi)

        def slice_mass(t):
            h = r * r - (t - x[axis]) ** 2
            return 0.0 if h <= 0 else float(self.axis_pdf(axis, t)) * self._ball(x, math.sqrt(h), axis + 1)

        pts = [p for p in self.axis_breakpoints(axis) if lo < p < hi]
        val, _ = integrate.quad(slice_mass, lo, hi, points=pts or None, epsrel=_QUAD_EPSREL,
                                epsabs=0.0, limit=200)
        return val

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return np.column_stack([self.axis_sample(a, gen, n) for a in range(self.dim)])

    def affine(self, scale, shift) -> "Density":
        """Law of ``scale * X + shift`` (axis-wise) when X has this density."""
        raise NotImplementedError

    def check_inside(self, lower, upper):
        if np.any(self.lower < np.asarray(lower) - 1e-12) or np.any(self.upper > np.asarray(upper) + 1e-12):
            raise OutsideSpaceError(f"{self.family} support leaves the sample space")


def _affine_bounds(lower, upper, scale, shift):
    a = scale * lower + shift
    b = scale * upper + shift
    return np.minimum(a, b), np.maximum(a, b)


class Uniform(Density):
    family = "uniform"

    def axis_mass(self, axis, a, b):
        return (b - a) / (self.upper[axis] - self.lower[axis])

    def axis_pdf(self, axis, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.lower[axis]) & (t <= self.upper[axis])
        return np.where(inside, 1.0 / (self.upper[axis] - self.lower[axis]), 0.0)

    def axis_sample(self, axis, gen, n):
        return gen.uniform(self.lower[axis], self.upper[axis], n)

    def params(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def affine(self, scale, shift):
        lo, hi = _affine_bounds(self.lower, self.upper, scale, shift)
        return Uniform(lo, hi)


class TruncNormal(Density):
    """Independent normal axes truncated to the box ``[lower, upper]``."""

    family = "normal"

    def __init__(self, mean, sd, lower, upper):
        super().__init__(lower, upper)
        self.mean = np.broadcast_to(np.asarray(mean, dtype=float), self.lower.shape).copy()
        self.sd = np.broadcast_to(np.asarray(sd, dtype=float), self.lower.shape).copy()
        if np.any(self.sd <= 0):
            raise ValueError("normal sd must be positive")
        za = (self.lower - self.mean) / self.sd
        zb = (self.upper - self.mean) / self.sd
        self._z = np.array([float(ndtr_diff(a, b)) for a, b in zip(za, zb)])
        if np.any(self._z <= 0):
            raise ValueError("normal truncation box carries no mass")

    def axis_mass(self, axis, a, b):
        m, s = self.mean[axis], self.sd[axis]
        return float(ndtr_diff((a - m) / s, (b - m) / s)) / self._z[axis]

    def axis_pdf(self, axis, t):
        t = np.asarray(t, dtype=float)
        m, s = self.mean[axis], self.sd[axis]
        inside = (t >= self.lower[axis]) & (t <= self.upper[axis])
        return np.where(inside, stats.norm.pdf(t, m, s) / self._z[axis], 0.0)

    def axis_sample(self, axis, gen, n):
        m, s = self.mean[axis], self.sd[axis]
        a, b = (self.lower[axis] - m) / s, (self.upper[axis] - m) / s
        if self._z[axis] > 0.5:
            # rejection from the untruncated normal; acceptance > 1/2
            out = np.empty(0)
            while out.size < n:
                z = gen.standard_normal(2 * (n - out.size) + 8)
                out = np.concatenate([out, z[(z >= a) & (z <= b)]])
            return m + s * out[:n]
        u = gen.uniform(special.ndtr(a), special.ndtr(b), n)
        return m + s * special.ndtri(u)

    def axis_breakpoints(self, axis):
        pts = [self.lower[axis], self.upper[axis]]
        if self.lower[axis] < self.mean[axis] < self.upper[axis]:
            pts.append(self.mean[axis])
        return pts

    def params(self):
        return {"mean": self.mean.tolist(), "sd": self.sd.tolist(),
                "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def affine(self, scale, shift):
        lo, hi = _affine_bounds(self.lower, self.upper, scale, shift)
        return TruncNormal(scale * self.mean + shift, np.abs(scale) * self.sd, lo, hi)


class Beta(Density):
    """One-dimensional beta law on ``[loc, loc + scale]`` (default ``[0, 1]``)."""

    family = "beta"

    def __init__(self, a, b, loc=0.0, scale=1.0):
        if not (a > 0 and b > 0 and scale > 0):
            raise ValueError("beta parameters and scale must be positive")
        super().__init__([loc], [loc + scale])
        self.a, self.b, self.loc, self.scale = float(a), float(b), float(loc), float(scale)
        self._dist = stats.beta(self.a, self.b, loc=self.loc, scale=self.scale)

    def axis_mass(self, axis, a, b):
        d = self._dist
        med = self.loc + 0.5 * self.scale
        if a > med:
            return float(d.sf(a) - d.sf(b))
        return float(d.cdf(b) - d.cdf(a))

    def axis_pdf(self, axis, t):
        return self._dist.pdf(np.asarray(t, dtype=float))

    def axis_sample(self, axis, gen, n):
        x = gen.standard_gamma(self.a, n)
        y = gen.standard_gamma(self.b, n)
        return self.loc + self.scale * x / (x + y)

    def params(self):
        return {"a": self.a, "b": self.b, "loc": self.loc, "scale": self.scale}

    def affine(self, scale, shift):
        s, t = float(np.ravel(scale)[0]), float(np.ravel(shift)[0])
        if s > 0:
            return Beta(self.a, self.b, s * self.loc + t, s * self.scale)
        return Beta(self.b, self.a, s * (self.loc + self.scale) + t, -s * self.scale)


class PiecewiseConstant(Density):
    """One-dimensional histogram density; ``values`` are renormalised to mass one."""

    family = "piecewise-constant"

    def __init__(self, edges, values):
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.ndim != 1 or values.shape != (edges.size - 1,) or np.any(np.diff(edges) <= 0):
            raise ValueError("piecewise-constant needs increasing edges and one value per cell")
        if np.any(values < 0) or not np.any(values > 0):
            raise ValueError("piecewise-constant values must be non-negative, not all zero")
        super().__init__([edges[0]], [edges[-1]])
        self.edges = edges
        widths = np.diff(edges)
        self.heights = values / float(values @ widths)
        self._cum = np.concatenate([[0.0], np.cumsum(self.heights * widths)])

    def _cdf(self, t):
        t = np.clip(t, self.edges[0], self.edges[-1])
        i = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, self.heights.size - 1)
        return self._cum[i] + self.heights[i] * (t - self.edges[i])

    def axis_mass(self, axis, a, b):
        return float(self._cdf(b) - self._cdf(a))

    def axis_pdf(self, axis, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, self.heights.size - 1)
        inside = (t >= self.edges[0]) & (t <= self.edges[-1])
        return np.where(inside, self.heights[i], 0.0)

    def axis_sample(self, axis, gen, n):
        u = gen.uniform(0.0, 1.0, n)
        i = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, self.heights.size - 1)
        return self.edges[i] + (u - self._cum[i]) / self.heights[i]

    def axis_breakpoints(self, axis):
        return self.edges.tolist()

    def params(self):
        return {"edges": self.edges.tolist(), "values": self.heights.tolist()}

    def affine(self, scale, shift):
        s, t = float(np.ravel(scale)[0]), float(np.ravel(shift)[0])
        edges = s * self.edges + t
        heights = self.heights
        if s < 0:
            edges, heights = edges[::-1], heights[::-1]
        return PiecewiseConstant(edges, heights)


FAMILIES = {
    "uniform": Uniform,
    "normal": TruncNormal,
    "beta": Beta,
    "piecewise-constant": PiecewiseConstant,
}


def density_from_spec(spec: dict, lower, upper) -> Density:
    """Build a density from its config form; missing bounds default to the space box."""
    spec = dict(spec)
    family = spec.pop("family")
    spec.pop("weight", None)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if family == "uniform":
        d = Uniform(spec.get("lower", lower), spec.get("upper", upper))
    elif family == "normal":
        d = TruncNormal(spec.get("mean", 0.0), spec.get("sd", 1.0),
                        spec.get("lower", lower), spec.get("upper", upper))
    elif family == "beta":
        d = Beta(spec["a"], spec["b"], spec.get("loc", 0.0), spec.get("scale", 1.0))
    elif family == "piecewise-constant":
        d = PiecewiseConstant(spec["edges"], spec["values"])
    else:
        raise ValueError(f"unknown density family {family!r}")
    if d.dim != lower.shape[0]:
        raise ValueError(f"{family} density has dimension {d.dim}, space has {lower.shape[0]}")
    d.check_inside(lower, upper)
    return d
