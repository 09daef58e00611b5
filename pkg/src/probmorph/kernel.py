"""Probabilistic morphisms (Markov kernels) and the probability-monad structure.

A :class:`Kernel` ``T: X ⇝ Y`` sends each point of ``X`` to a probability
measure on ``Y``. Finite-domain kernels are tables of rows (a row-stochastic
matrix when ``Y`` is finite too); parametric kernels come from a registry of
named families. Elements of ``P(P(X))`` are finite weighted clouds of
measures (:class:`MeasureCloud`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .densities import TruncNormal, Uniform
from .errors import SpaceMismatchError
from .measure import (
    PROB_TOL,
    LabelMap,
    Measure,
    add_measures,
    ball_probability,
    identity_map,
    integrate,
    pushforward_measure,
    total_variation,
)
from .rngstats import as_lineage
from .spaces import SampleSpace, SimpleFunction

__all__ = [
    "MeasureSpace",
    "MeasureCloud",
    "Kernel",
    "delta",
    "pushforward_p",
    "pushforward_s",
    "pullback",
    "compose",
    "ev_p",
    "graph",
    "JointMeasure",
    "laws_check",
    "LawsReport",
    "register_family",
    "parametric",
    "random_stochastic_matrix",
]

DEFAULT_MC_PARTICLES = 10_000


@dataclass(frozen=True)
class MeasureSpace:
    """The space ``P(base)``, used as the domain of measure-valued parameters."""

    base: SampleSpace

    is_finite = False


class MeasureCloud:
    """A finite weighted collection of measures (or of clouds, for ``P^3``)."""

    def __init__(self, elements: Sequence, weights=None):
        self.elements = list(elements)
        if not self.elements:
            raise ValueError("a measure cloud needs at least one element")
        n = len(self.elements)
        self.weights = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        if self.weights.shape != (n,):
            raise ValueError("one weight per element required")
        bases = {self._base_of(e) for e in self.elements}
        if len(bases) != 1:
            raise SpaceMismatchError("cloud elements live on different base spaces")
        self.base = bases.pop()
        self._csr = None

    @staticmethod
    def _base_of(e):
        return e.space if isinstance(e, Measure) else ("cloud", e.base)

    @property
    def level(self) -> int:
        """2 for a cloud of measures (``P^2``), 3 for a cloud of clouds."""
        e = self.elements[0]
        return 2 if isinstance(e, Measure) else e.level + 1

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def atom_csr(self):
        """``(offsets, locations, weights)`` of atom-only euclidean elements."""
        if self._csr is None:
            sizes, locs, ws = [0], [], []
            for m in self.elements:
                if not isinstance(m, Measure) or m.space.is_finite or m.has_densities:
                    raise TypeError("CSR layout needs atom-only euclidean measures")
                sizes.append(m.locations.shape[0])
                locs.append(m.locations)
                ws.append(m.atom_weights)
            self._csr = (np.cumsum(sizes), np.concatenate(locs), np.concatenate(ws))
        return self._csr


# ---------------------------------------------------------------------------
# kernels


_FAMILIES: dict[str, Callable[..., "Kernel"]] = {}


def register_family(name: str):
    def deco(builder):
        _FAMILIES[name] = builder
        return builder
    return deco


class Kernel:
    """A Markov kernel ``domain ⇝ codomain``.

    ``kind`` is ``"table"`` (finite domain, one row per label), ``"parametric"``
    (a rule point -> measure, optionally with vectorised hooks) or
    ``"composite"`` (a lazy pair evaluated through :func:`pushforward_p`).
    """

    def __init__(self, domain, codomain: SampleSpace, *, kind, rows=None, matrix=None, rule=None,
                 parts=None, family=None, params=None, hooks=None, map=None):
        self.domain = domain
        self.codomain = codomain
        self.kind = kind
        self.family = family
        self.params = dict(params or {})
        self.map = map
        self._rows = rows
        self._matrix = matrix
        self._rule = rule
        self.parts = parts
        self._hooks = dict(hooks or {})

    # construction -------------------------------------------------------
    @classmethod
    def from_matrix(cls, domain: SampleSpace, codomain: SampleSpace, matrix, tol=PROB_TOL):
        m = np.array(matrix, dtype=float)
        if not (domain.is_finite and codomain.is_finite):
            raise TypeError("matrix kernels need finite domain and codomain")
        if m.shape != (domain.size, codomain.size):
            raise SpaceMismatchError(f"matrix shape {m.shape} != ({domain.size}, {codomain.size})")
        if np.any(m < 0) or np.any(np.abs(m.sum(axis=1) - 1.0) > tol):
            raise ValueError("kernel rows must be probability vectors")
        m.setflags(write=False)
        return cls(domain, codomain, kind="table", matrix=m)

    @classmethod
    def from_rows(cls, domain: SampleSpace, codomain: SampleSpace, rows, tol=PROB_TOL):
        if not domain.is_finite:
            raise TypeError("row tables need a finite domain")
        if isinstance(rows, dict):
            rows = [rows[lab] for lab in domain.labels]
        rows = list(rows)
        if len(rows) != domain.size:
            raise ValueError("exactly one row per domain label required")
        for r in rows:
            codomain.check_same(r.space, "kernel rows and codomain")
            if not r.is_probability(tol):
                raise ValueError(f"kernel row is not a probability measure (mass {r.total_mass})")
        if codomain.is_finite:
            return cls.from_matrix(domain, codomain, np.vstack([r.vector for r in rows]), tol)
        return cls(domain, codomain, kind="table", rows=rows)

    @classmethod
    def from_map(cls, kappa) -> "Kernel":
        """The deterministic kernel ``δ ∘ κ`` of a measurable map."""
        dom, cod = kappa.domain, kappa.codomain
        if dom.is_finite and cod.is_finite:
            m = np.zeros((dom.size, cod.size))
            m[np.arange(dom.size), kappa.index_map()] = 1.0
            k = cls.from_matrix(dom, cod, m)
            k.map = kappa
            return k
        if dom.is_finite:
            rows = [Measure.dirac(cod, kappa(lab)) for lab in dom.labels]
            k = cls.from_rows(dom, cod, rows)
            k.map = kappa
            return k
        return cls(dom, cod, kind="parametric", rule=lambda x: Measure.dirac(cod, kappa(x)),
                   family="map", map=kappa, hooks={"ball": _dirac_ball(kappa)})

    @classmethod
    def constant(cls, domain, nu: Measure) -> "Kernel":
        if domain.is_finite:
            return cls.from_rows(domain, nu.space, [nu] * domain.size)
        return cls(domain, nu.space, kind="parametric", rule=lambda x: nu, family="constant",
                   params={"measure": nu})

    # evaluation ---------------------------------------------------------
    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            raise TypeError("this kernel has no stochastic-matrix form")
        return self._matrix

    @property
    def has_matrix(self) -> bool:
        return self._matrix is not None

    @property
    def rows(self) -> list[Measure]:
        if self.kind != "table":
            raise TypeError("only table kernels have rows")
        if self._rows is None:
            self._rows = [Measure(self.codomain, vector=r) for r in self._matrix]
        return self._rows

    def at(self, x) -> Measure:
        """The measure ``T̄(x)``."""
        if self.kind == "table":
            return self.rows[self.domain.index(x)]
        if self.kind == "composite":
            t2, t1 = self.parts
            return pushforward_p(t2, t1.at(x))
        if isinstance(self.domain, SampleSpace):
            x = self.domain.point(x)
        return self._rule(x)

    __call__ = at

    @property
    def is_deterministic(self) -> bool:
        if self.map is not None:
            return True
        if self.has_matrix:
            return bool(np.all(np.sum(self._matrix == 1.0, axis=1) == 1))
        return False

    # vectorised evaluations used by the posterior code ------------------
    def ball_masses(self, points, x, r) -> np.ndarray:
        """``p_θ(D_r(x))`` for each parameter point."""
        hook = self._hooks.get("ball")
        if hook is not None:
            return hook(points, x, r)
        return np.array([ball_probability(self.at(t), x, r) for t in _iter_points(points)])

    def log_ball_masses(self, points, x, r) -> np.ndarray:
        """``log p_θ(D_r(x))`` for each parameter point."""
        hook = self._hooks.get("log_ball")
        if hook is not None:
            return hook(points, [x], r)
        with np.errstate(divide="ignore"):
            return np.log(self.ball_masses(points, x, r))

    def log_ball_weights(self, points, data, r) -> np.ndarray:
        """``Σ_i log p_θ(D_r(x_i))`` for each parameter point (``-inf`` where zero)."""
        hook = self._hooks.get("log_ball")
        if hook is not None:
            return hook(points, data, r)
        out = None
        for x in data:
            m = self.ball_masses(points, x, r)
            with np.errstate(divide="ignore"):
                lm = np.log(m)
            out = lm if out is None else out + lm
        return out

    def densities(self, points, x) -> np.ndarray:
        """Density of ``p_θ`` at ``x`` (counting measure on finite codomains)."""
        hook = self._hooks.get("density")
        if hook is not None:
            return hook(points, x)
        if self.codomain.is_finite:
            return np.array([self.at(t).point_mass(x) for t in _iter_points(points)])
        return np.array([self.at(t).density_at(x) for t in _iter_points(points)])

    def point_masses(self, points, x) -> np.ndarray:
        hook = self._hooks.get("point_mass")
        if hook is not None:
            return hook(points, x)
        return np.array([self.at(t).point_mass(x) for t in _iter_points(points)])

    def __repr__(self):
        return f"Kernel(kind={self.kind!r}, family={self.family!r})"


def _iter_points(points):
    if isinstance(points, np.ndarray) and points.ndim == 1:
        return iter(points[:, None])
    return iter(points)


def _dirac_ball(kappa):
    def ball(points, x, r):
        img = kappa.apply(np.asarray(points, dtype=float).reshape(-1, kappa.domain.dim))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return (np.sum((img - x) ** 2, axis=1) < r * r).astype(float)
    return ball


def delta(space) -> Kernel:
    """The Dirac unit ``x ↦ δ_x``."""
    k = Kernel.from_map(identity_map(space))
    k.family = "dirac"
    return k


def parametric(family: str, domain, codomain, **params) -> Kernel:
    try:
        builder = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown kernel family {family!r}") from None
    return builder(domain, codomain, **params)


@register_family("normal-location")
def _normal_location(domain, codomain, sd=1.0):
    """θ ↦ N(θ, sd²) truncated to the codomain box."""
    if codomain.is_finite or domain.is_finite or domain.dim != codomain.dim:
        raise ValueError("normal-location needs euclidean spaces of equal dimension")
    sd = float(sd)
    lo, hi = codomain.lower_array, codomain.upper_array

    def rule(theta):
        return Measure.from_density(codomain, TruncNormal(theta, sd, lo, hi))

    hooks = {}
    if codomain.dim == 1:
        def log_ball(points, data, r):
            th = np.asarray(points, dtype=float).reshape(-1)
            xs = np.array([float(np.ravel(x)[0]) for x in data])
            return _backend.normal_ball_logweights(th, xs, float(r), sd, lo[0], hi[0])

        def ball(points, x, r):
            return np.exp(log_ball(points, [x], r))

        def density(points, x):
            th = np.asarray(points, dtype=float).reshape(-1)
            x0 = float(np.ravel(x)[0])
            z = _backend.ndtr_diff((lo[0] - th) / sd, (hi[0] - th) / sd)
            inside = lo[0] <= x0 <= hi[0]
            return inside * np.exp(-0.5 * ((x0 - th) / sd) ** 2) / (sd * math.sqrt(2 * math.pi) * z)

        hooks = {"log_ball": log_ball, "ball": ball, "density": density,
                 "point_mass": lambda points, x: np.zeros(np.asarray(points).reshape(-1).size)}
    return Kernel(domain, codomain, kind="parametric", rule=rule, family="normal-location",
                  params={"sd": sd}, hooks=hooks)


@register_family("uniform-scale")
def _uniform_scale(domain, codomain):
    """θ ↦ Uniform[lower, θ] on a one-dimensional codomain."""
    if codomain.is_finite or codomain.dim != 1:
        raise ValueError("uniform-scale needs a one-dimensional codomain")
    a = codomain.lower[0]

    def rule(theta):
        return Measure.from_density(codomain, Uniform([a], [float(np.ravel(theta)[0])]))

    def ball(points, x, r):
        th = np.asarray(points, dtype=float).reshape(-1)
        x0 = float(np.ravel(x)[0])
        lo = np.maximum(x0 - r, a)
        hi = np.minimum(x0 + r, th)
        return np.clip(hi - lo, 0.0, None) / (th - a)

    def density(points, x):
        th = np.asarray(points, dtype=float).reshape(-1)
        x0 = float(np.ravel(x)[0])
        return np.where((x0 >= a) & (x0 <= th), 1.0 / (th - a), 0.0)

    return Kernel(domain, codomain, kind="parametric", rule=rule, family="uniform-scale",
                  hooks={"ball": ball, "density": density,
                         "point_mass": lambda points, x: np.zeros(np.asarray(points).reshape(-1).size)})


@register_family("bernoulli")
def _bernoulli(domain, codomain):
    """θ ↦ (1 - θ) δ_{labels[0]} + θ δ_{labels[1]} on a two-label codomain."""
    if not codomain.is_finite or codomain.size != 2:
        raise ValueError("bernoulli needs a two-label codomain")

    def rule(theta):
        t = float(np.ravel(theta)[0])
        return Measure(codomain, vector=[1.0 - t, t])

    def point_mass(points, x):
        th = np.asarray(points, dtype=float).reshape(-1)
        return th if codomain.index(x) == 1 else 1.0 - th

    def ball(points, x, r):
        return point_mass(points, x) if r <= 1.0 else np.ones(np.asarray(points).reshape(-1).size)

    return Kernel(domain, codomain, kind="parametric", rule=rule, family="bernoulli",
                  hooks={"ball": ball, "density": point_mass, "point_mass": point_mass})


@register_family("identity")
def _identity_measures(domain, codomain):
    """θ ↦ θ for parameters that are themselves measures on the codomain."""
    if not isinstance(domain, MeasureSpace) or domain.base != codomain:
        raise ValueError("identity needs domain P(codomain)")

    def rule(theta):
        return theta

    def ball(points, x, r):
        if isinstance(points, MeasureCloud) and not codomain.is_finite:
            try:
                off, locs, ws = points.atom_csr()
            except TypeError:
                pass
            else:
                return _backend.cloud_ball_masses(off, locs, ws, codomain.point(x), float(r))
        return np.array([ball_probability(m, x, r) for m in points])

    return Kernel(domain, codomain, kind="parametric", rule=rule, family="identity",
                  hooks={"ball": ball})


# ---------------------------------------------------------------------------
# induced maps


def _push(T: Kernel, mu: Measure, particles: int, seed) -> Measure:
    if isinstance(T.domain, SampleSpace):
        T.domain.check_same(mu.space, "kernel domain and measure")
    if T.family == "dirac":
        return mu
    if T.kind == "composite":
        t2, t1 = T.parts
        return _push(t2, _push(t1, mu, particles, seed), particles, seed)
    if T.map is not None:
        return pushforward_measure(T.map, mu)
    if T.has_matrix:
        return Measure(T.codomain, vector=mu.vector @ T.matrix, signed=mu.signed)
    acc = Measure.zero(T.codomain)
    if mu.space.is_finite:
        for lab, w in zip(mu.space.labels, mu.vector):
            if w != 0:
                acc = add_measures(acc, T.at(lab).scaled(w))
        return acc
    for loc, w in zip(mu.locations, mu.atom_weights):
        acc = add_measures(acc, T.at(loc).scaled(w))
    for j, (dens, v) in enumerate(mu.densities):
        # Monte Carlo over the density part; the result is flagged approximate
        gen = as_lineage(seed).child(j).generator()
        parts = [T.at(p) for p in dens.sample(gen, particles)]
        if T.codomain.is_finite:
            vec = v * np.mean([m.vector for m in parts], axis=0)
            acc = add_measures(acc, Measure(T.codomain, vector=vec, signed=mu.signed, approximate=True))
        else:
            for m in parts:
                acc = add_measures(acc, _flag_approx(m.scaled(v / particles)))
    return acc


def _flag_approx(m: Measure) -> Measure:
    return Measure(m.space, locs=m.locations, weights=m.atom_weights, densities=m.densities,
                   signed=m.signed, approximate=True)


def pushforward_p(T: Kernel, mu, particles: int = DEFAULT_MC_PARTICLES, seed=0):
    """``P_*(T)(μ)(B) = ∫ T̄(x)(B) dμ(x)``.

    Exact for finite domains and atomic measures; density parts of ``μ`` are
    integrated by a seeded Monte Carlo mixture of ``particles`` draws. For a
    kernel on measure-valued parameters, ``μ`` may be a :class:`MeasureCloud`.
    """
    if isinstance(mu, MeasureCloud):
        if T.family != "identity":
            return ev_p(MeasureCloud([T.at(m) for m in mu], mu.weights))
        return ev_p(mu)
    if not mu.is_probability():
        raise ValueError("pushforward_p needs a probability measure; use pushforward_s")
    return _push(T, mu, particles, seed)


def pushforward_s(T: Kernel, mu: Measure, particles: int = DEFAULT_MC_PARTICLES, seed=0) -> Measure:
    """Linear extension of :func:`pushforward_p` to finite signed measures."""
    return _push(T, mu, particles, seed)


class Pullback:
    """``T*(f)(x) = ∫ f dT̄(x)``, queryable pointwise; tabulated on finite domains."""

    def __init__(self, T: Kernel, f: SimpleFunction):
        T.codomain.check_same(f.space, "kernel codomain and function")
        self.kernel, self.f = T, f
        self._bound = f.sup_norm()
        self.table = None
        if isinstance(T.domain, SampleSpace) and T.domain.is_finite:
            if T.has_matrix:
                self.table = T.matrix @ f.table()
            else:
                self.table = np.array([integrate(f, row) for row in T.rows])
            self._check(self.table)

    def _check(self, values):
        if np.any(np.abs(values) > self._bound * (1 + 1e-12) + 1e-12):
            raise ValueError("pullback exceeds sup|f|: a kernel row is not a probability measure")

    def __call__(self, x) -> float:
        if self.table is not None:
            return float(self.table[self.kernel.domain.index(x)])
        v = integrate(self.f, self.kernel.at(x))
        self._check(np.array([v]))
        return v


def pullback(T: Kernel, f: SimpleFunction) -> Pullback:
    return Pullback(T, f)


def compose(T2: Kernel, T1: Kernel) -> Kernel:
    """``T2 ∘ T1``, with ``(T2∘T1)‾ = P_*(T2) ∘ T̄1``.

    Finite tables multiply eagerly; anything parametric becomes a lazy pair.
    """
    if T1.codomain != (T2.domain.base if isinstance(T2.domain, MeasureSpace) else T2.domain):
        raise SpaceMismatchError("codomain of the first kernel must be the domain of the second")
    if T1.has_matrix and T2.has_matrix:
        m = T1.matrix @ T2.matrix
        m.setflags(write=False)
        return Kernel(T1.domain, T2.codomain, kind="table", matrix=m)
    if T1.kind == "table" and T2.kind == "table":
        rows = [_push(T2, row, DEFAULT_MC_PARTICLES, 0) for row in T1.rows]
        if T2.codomain.is_finite:
            m = np.vstack([r.vector for r in rows])
            m.setflags(write=False)
            return Kernel(T1.domain, T2.codomain, kind="table", matrix=m)
        return Kernel(T1.domain, T2.codomain, kind="table", rows=rows)
    return Kernel(T1.domain, T2.codomain, kind="composite", parts=(T2, T1))


def ev_p(nu: MeasureCloud):
    """Giry multiplication: the average ``Σ w_i μ_i`` of a cloud.

    On a cloud of clouds this flattens one level and returns a cloud.
    """
    if nu.level > 2:
        elems, ws = [], []
        for inner, w in zip(nu.elements, nu.weights):
            elems.extend(inner.elements)
            ws.append(w * inner.weights)
        return MeasureCloud(elems, np.concatenate(ws))
    base = nu.base
    if base.is_finite:
        vec = nu.weights @ np.vstack([m.vector for m in nu.elements])
        return Measure(base, vector=vec, signed=bool(np.any(vec < 0)))
    acc = Measure.zero(base)
    for m, w in zip(nu.elements, nu.weights):
        acc = add_measures(acc, m.scaled(w))
    return acc


def dirac_cloud(mu) -> MeasureCloud:
    """``δ_μ`` as a one-point cloud."""
    return MeasureCloud([mu], [1.0])


def push_cloud(T: Kernel, mu: Measure) -> MeasureCloud:
    """``P_*(T̄)(μ)`` for finite ``μ``: the cloud ``{(T̄(x), μ(x))}``."""
    return MeasureCloud([T.at(lab) for lab in mu.space.labels], mu.vector)


class JointMeasure:
    """The joint law ``μ(B × A) = ∫_B p_θ(A) dμ_Θ`` of a graph ``(Id, p)``."""

    def __init__(self, kernel: Kernel, points, weights):
        self.kernel = kernel
        self.points = points
        self.weights = np.asarray(weights, dtype=float)
        self._rows = None

    @property
    def table(self) -> np.ndarray:
        """``μ({θ} × {x})`` as a matrix (finite parameter side and finite codomain)."""
        if self.kernel.has_matrix:
            return self.weights[:, None] * self.kernel.matrix
        return self.weights[:, None] * np.vstack([self.kernel.at(t).vector for t in _iter_points(self.points)])

    def prob(self, theta_mask, region) -> float:
        mask = np.asarray(theta_mask, dtype=bool)
        total = 0.0
        for t, w, sel in zip(_iter_points(self.points), self.weights, mask):
            if sel and w != 0:
                total += w * self.kernel.at(t).mass(region)
        return total

    def marginal_theta(self) -> np.ndarray:
        return self.weights.copy()

    def marginal_x(self) -> Measure:
        if self.kernel.has_matrix:
            return Measure(self.kernel.codomain, vector=self.weights @ self.kernel.matrix)
        acc = Measure.zero(self.kernel.codomain)
        for t, w in zip(_iter_points(self.points), self.weights):
            if w != 0:
                acc = add_measures(acc, self.kernel.at(t).scaled(w))
        return acc


def graph(p: Kernel, prior) -> JointMeasure:
    """Joint measure ``(Γ_p)_* prior`` on ``domain × codomain``.

    ``prior`` is a finite-space :class:`Measure` or a ``(points, weights)`` pair.
    """
    if isinstance(prior, Measure):
        p.domain.check_same(prior.space, "kernel domain and prior")
        if not prior.is_probability():
            raise ValueError("prior must be a probability measure")
        return JointMeasure(p, list(prior.space.labels), prior.vector)
    points, weights = prior
    return JointMeasure(p, points, weights)


# ---------------------------------------------------------------------------
# law suite


def random_stochastic_matrix(gen: np.random.Generator, n: int, m: int) -> np.ndarray:
    x = gen.standard_exponential((n, m))
    return x / x.sum(axis=1, keepdims=True)


def _random_prob(gen, space):
    v = gen.standard_exponential(space.size)
    return Measure(space, vector=v / v.sum())


@dataclass
class LawsReport:
    trials: int
    sizes: int
    seed: int
    residuals: dict = field(default_factory=dict)

    def passed(self, tol: float = 1e-12) -> bool:
        return all(v <= tol for v in self.residuals.values())

    def as_dict(self):
        return {"trials": self.trials, "sizes": self.sizes, "seed": self.seed,
                "residuals": dict(self.residuals)}


def _row_tv(A: Kernel, B: Kernel) -> float:
    return float(np.max(np.abs(A.matrix - B.matrix).sum(axis=1)))


def laws_check(seed=0, sizes: int = 6, trials: int = 100, compose_fn=None) -> LawsReport:
    """Evaluate the category and monad laws on random finite kernels.

    Returns the maximum total-variation residual of each law. ``compose_fn``
    replaces :func:`compose` (used to check that the harness notices faults).
    """
    comp = compose_fn or compose
    root = as_lineage(seed)
    res = {k: 0.0 for k in ("functoriality", "associativity", "monad_associativity",
                            "kleisli_extension", "unit_left", "unit_right", "ev_delta",
                            "ev_push_delta", "ev_naturality")}

    def bump(k, v):
        res[k] = max(res[k], float(v))

    for t in range(trials):
        gen = root.child(t).generator()
        n = gen.integers(1, sizes + 1, size=4)
        X, Y, Z, W = (SampleSpace.finite(range(k)) for k in n)
        T1 = Kernel.from_matrix(X, Y, random_stochastic_matrix(gen, n[0], n[1]))
        T2 = Kernel.from_matrix(Y, Z, random_stochastic_matrix(gen, n[1], n[2]))
        T3 = Kernel.from_matrix(Z, W, random_stochastic_matrix(gen, n[2], n[3]))
        mu = _random_prob(gen, X)

        lhs = pushforward_p(comp(T2, T1), mu)
        rhs = pushforward_p(T2, pushforward_p(T1, mu))
        bump("functoriality", total_variation(lhs, rhs))

        bump("associativity", _row_tv(comp(T3, comp(T2, T1)), comp(comp(T3, T2), T1)))

        bump("unit_left", _row_tv(comp(delta(Y), T1), T1))
        bump("unit_right", _row_tv(comp(T1, delta(X)), T1))

        bump("kleisli_extension", total_variation(pushforward_p(T1, mu), ev_p(push_cloud(T1, mu))))

        bump("ev_delta", total_variation(ev_p(dirac_cloud(mu)), mu))
        bump("ev_push_delta", total_variation(ev_p(push_cloud(delta(X), mu)), mu))

        # a random element of P^3(X): clouds of clouds of measures
        outer = []
        for _ in range(int(gen.integers(1, 4))):
            inner = [_random_prob(gen, X) for _ in range(int(gen.integers(1, 4)))]
            outer.append(MeasureCloud(inner, _random_prob(gen, SampleSpace.finite(range(len(inner)))).vector))
        wts = _random_prob(gen, SampleSpace.finite(range(len(outer)))).vector
        nu3 = MeasureCloud(outer, wts)
        a = ev_p(MeasureCloud([ev_p(c) for c in nu3.elements], nu3.weights))
        b = ev_p(ev_p(nu3))
        bump("monad_associativity", total_variation(a, b))

        # P_*(κ) ∘ ev_P = ev_P ∘ P^2_*(κ) for a random map κ: X -> Y
        kappa = LabelMap(X, Y, [int(v) for v in gen.integers(0, n[1], size=n[0])])
        nu2 = outer[0]
        a = pushforward_measure(kappa, ev_p(nu2))
        b = ev_p(MeasureCloud([pushforward_measure(kappa, m) for m in nu2], nu2.weights))
        bump("ev_naturality", total_variation(a, b))

    return LawsReport(trials, sizes, int(root.root), res)
