"""Bayesian models and posterior computation.

The central routine is :func:`ball_posterior`, which evaluates ratios of
prior-integrated ball probabilities

    ∫_B Π_i p_θ(D_r(x_i)) dμ_Θ  /  ∫_Θ Π_i p_θ(D_r(x_i)) dμ_Θ

along a shrinking radius schedule. It needs no dominating measure, so it
covers likelihoods mixing atoms and densities. Classical density-ratio
Bayes and the exact finite update are provided alongside as oracles.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .densities import Density
from .errors import MethodMismatchError
from .kernel import Kernel, MeasureCloud, MeasureSpace, graph, pushforward_p
from .measure import Measure, add_measures
from .rngstats import as_lineage
from .spaces import Region, SampleSpace, _jsonable

__all__ = [
    "Particles",
    "BayesianModel",
    "RadiusSchedule",
    "PosteriorReport",
    "joint_distribution",
    "marginal",
    "exact_finite_posterior",
    "classical_bayes_posterior",
    "ball_posterior",
    "lopital_posterior",
    "singular_set_probe",
    "SingularProbe",
    "consistency_check",
    "posterior_kernel",
    "posterior_equivalence_check",
    "LOG_TINY",
]

LOG_TINY = math.log(1e-300)


@dataclass
class Particles:
    """Weighted parameter points: an array ``(n, d)`` or a :class:`MeasureCloud`."""

    points: object
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if isinstance(self.points, np.ndarray):
            pts = self.points if self.points.ndim == 2 else self.points[:, None]
            self.points = pts
        if w.shape != (len(self),):
            raise ValueError("one weight per particle required")
        if np.any(w < 0):
            raise ValueError("particle weights must be nonnegative")
        self.weights = w

    def __len__(self):
        return len(self.points) if not isinstance(self.points, np.ndarray) else self.points.shape[0]

    @classmethod
    def from_density(cls, density: Density, n: int, seed=0) -> "Particles":
        """``n`` equally weighted i.i.d. draws from ``density``."""
        gen = as_lineage(seed).generator()
        return cls(density.sample(gen, n), np.full(n, 1.0 / n))

    def reweighted(self, w) -> "Particles":
        return Particles(self.points, w)

    def summary(self) -> dict | None:
        """Weighted mean/variance with standard errors, for one-dimensional particles."""
        if not isinstance(self.points, np.ndarray) or self.points.shape[1] != 1:
            return None
        w = self.weights / self.weights.sum()
        t = self.points[:, 0]
        mean = float(w @ t)
        var = float(w @ (t - mean) ** 2)
        ess = 1.0 / float(w @ w)
        m4 = float(w @ (t - mean) ** 4)
        return {"mean": mean, "variance": var, "ess": ess,
                "se_mean": math.sqrt(var / ess), "se_variance": math.sqrt(max(m4 - var * var, 0.0) / ess)}


class BayesianModel:
    """The quadruple (parameter space, prior, likelihood kernel, sample space).

    ``prior`` is a probability :class:`Measure` on a finite parameter space or
    a :class:`Particles` cloud; the likelihood maps parameters to measures on
    the sample space.
    """

    def __init__(self, likelihood: Kernel, prior, name: str = ""):
        self.likelihood = likelihood
        self.name = name
        if isinstance(prior, Measure):
            if not prior.space.is_finite:
                raise TypeError("continuous priors must be given as Particles")
            likelihood.domain.check_same(prior.space, "likelihood domain and prior")
            if not prior.is_probability():
                raise ValueError("prior must be a probability measure")
            self.points = list(prior.space.labels)
            self.weights = np.asarray(prior.vector, dtype=float)
        elif isinstance(prior, Particles):
            tot = prior.weights.sum()
            if abs(tot - 1.0) > 1e-10:
                raise ValueError(f"particle prior weights sum to {tot}, not 1")
            if isinstance(prior.points, np.ndarray) and isinstance(likelihood.domain, SampleSpace):
                likelihood.domain.points(prior.points)
            if isinstance(prior.points, MeasureCloud) and not isinstance(likelihood.domain, MeasureSpace):
                raise TypeError("measure-valued particles need a likelihood on P(X)")
            self.points = prior.points
            self.weights = prior.weights
        else:
            raise TypeError("prior must be a Measure or Particles")
        self.prior = prior
        self.theta_space = likelihood.domain
        self.sample_space = likelihood.codomain

    @property
    def finite_theta(self) -> bool:
        return isinstance(self.prior, Measure)

    def __len__(self):
        return len(self.weights)

    def point(self, x):
        return self.sample_space.point(x)

    def posterior_object(self, w):
        """Wrap a weight vector as a measure on Θ (finite) or reweighted particles."""
        if self.finite_theta:
            return Measure(self.theta_space, vector=w)
        return self.prior.reweighted(w)

    def query_masks(self, queries) -> list[tuple[str, np.ndarray]]:
        """Normalise query sets to ``(name, mask)`` pairs over the parameter points."""
        if queries is None:
            if self.finite_theta:
                return [(str(_jsonable(lab)), np.arange(len(self)) == i)
                        for i, lab in enumerate(self.points)]
            return []
        out = []
        items = queries.items() if isinstance(queries, dict) else enumerate(queries)
        for name, q in items:
            if isinstance(q, np.ndarray) and q.dtype == bool:
                mask = q
            elif isinstance(q, Region):
                mask = q.contains(self.points) if not self.finite_theta else np.isin(
                    np.arange(len(self)), q.labels)
            elif self.finite_theta:
                labs = q if isinstance(q, (list, tuple, set)) else [q]
                idx = [self.theta_space.index(v) for v in labs]
                mask = np.isin(np.arange(len(self)), idx)
            elif isinstance(q, (list, tuple)) and len(q) == 2 and isinstance(self.points, np.ndarray):
                t = self.points[:, 0]
                mask = (t >= q[0]) & (t < q[1])
            else:
                mask = np.isin(np.arange(len(self)), np.asarray(q, dtype=int))
            out.append((str(name), np.asarray(mask, dtype=bool)))
        return out


@dataclass(frozen=True)
class RadiusSchedule:
    """Geometric radii ``r0 · ratio^k`` with a convergence window and tolerance."""

    r0: float
    ratio: float = 0.5
    max_steps: int = 40
    window: int = 3
    tol: float = 1e-6

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if self.max_steps < 1 or self.window < 1:
            raise ValueError("max_steps and window must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")

    @classmethod
    def default(cls, space: SampleSpace) -> "RadiusSchedule":
        diam = space.diameter
        return cls(r0=(diam if diam > 0 else 1.0) / 8.0)

    @classmethod
    def parse(cls, text: str, space: SampleSpace | None = None) -> "RadiusSchedule":
        """``"r0,ratio,steps"``; empty fields fall back to the defaults."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) > 3:
            raise ValueError("schedule takes at most r0,ratio,steps")
        base = cls.default(space) if space is not None else cls(r0=1.0)
        vals = {"r0": base.r0, "ratio": base.ratio, "max_steps": base.max_steps}
        for key, p, conv in zip(("r0", "ratio", "max_steps"), parts, (float, float, int)):
            if p:
                vals[key] = conv(p)
        return cls(vals["r0"], vals["ratio"], vals["max_steps"], base.window, base.tol)

    def check_space(self, space: SampleSpace):
        half = 0.5 * space.diameter if space.diameter > 0 else 0.5
        if self.r0 > half + 1e-15:
            raise ValueError(f"r0={self.r0} exceeds half the space diameter ({half})")

    def radii(self) -> np.ndarray:
        return self.r0 * self.ratio ** np.arange(self.max_steps)

    def as_dict(self):
        return {"r0": self.r0, "ratio": self.ratio, "max_steps": self.max_steps,
                "window": self.window, "tol": self.tol}


@dataclass
class PosteriorReport:
    method: str
    posterior: object
    weights: np.ndarray
    converged: bool
    singular: bool
    singular_data: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    query_names: list = field(default_factory=list)
    extrapolated: np.ndarray | None = None
    extrapolation_order: int | None = None
    denominator_monotone: bool | None = None
    dui_verified: bool | None = None
    final_radius: float | None = None
    labels: list | None = None

    @property
    def ess(self) -> float:
        w = self.weights
        return float(1.0 / (w @ w)) if w.sum() > 0 else 0.0

    def summary(self, extrapolated: bool = False) -> dict | None:
        w = self.extrapolated if (extrapolated and self.extrapolated is not None) else self.weights
        post = self.posterior
        if isinstance(post, Particles):
            return post.reweighted(w).summary()
        return None

    def to_dict(self, full_weights: int = 2000) -> dict:
        out = {
            "method": self.method,
            "converged": self.converged,
            "singular": self.singular,
            "singular_data": list(self.singular_data),
            "effective_sample_size": self.ess,
            "mass": float(self.weights.sum()),
        }
        if self.labels is not None:
            out["labels"] = [_jsonable(v) for v in self.labels]
        if self.weights.size <= full_weights:
            out["posterior"] = self.weights.tolist()
            if self.extrapolated is not None:
                out["extrapolated"] = self.extrapolated.tolist()
        s = self.summary()
        if s is not None:
            out["summary"] = s
            if self.extrapolated is not None:
                out["extrapolated_summary"] = self.summary(extrapolated=True)
        for key in ("extrapolation_order", "denominator_monotone", "dui_verified", "final_radius"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.trace:
            out["trace_steps"] = len(self.trace)
            out["queries"] = list(self.query_names)
        return out

    def trace_csv(self) -> str:
        """The radius trace as CSV: ``r``, one numerator per query, denominator, one ratio per query."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["r"] + [f"numerator[{q}]" for q in self.query_names]
                    + ["denominator", "log_denominator"] + [f"ratio[{q}]" for q in self.query_names]
                    + ["tv_change"])
        for row in self.trace:
            wr.writerow([repr(row["r"])] + [repr(v) for v in row["numerators"]]
                        + [repr(row["denominator"]), repr(row["log_denominator"])]
                        + [repr(v) for v in row["ratios"]] + [repr(row["tv_change"])])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# joint and marginal


def joint_distribution(model: BayesianModel):
    """The joint law on ``Θ × X`` (the graph of the likelihood applied to the prior)."""
    if model.finite_theta:
        return graph(model.likelihood, model.prior)
    return graph(model.likelihood, (model.points, model.weights))


def marginal(model: BayesianModel) -> Measure:
    """``μ_X = p_*(μ_Θ)``; for particle priors the finite mixture over particles."""
    if model.finite_theta:
        return pushforward_p(model.likelihood, model.prior)
    return _mixture(model, model.weights)


def _mixture(model, w) -> Measure:
    points = model.points
    if isinstance(points, np.ndarray):
        points = list(points)
    if model.sample_space.is_finite:
        vec = np.zeros(model.sample_space.size)
        for t, wi in zip(points, w):
            if wi:
                vec += wi * model.likelihood.at(t).vector
        return Measure(model.sample_space, vector=vec)
    acc = Measure.zero(model.sample_space)
    for t, wi in zip(points, w):
        if wi:
            acc = add_measures(acc, model.likelihood.at(t).scaled(wi))
    return acc


# ---------------------------------------------------------------------------
# shared weighting machinery


def _log_terms(model: BayesianModel, data, r=None) -> np.ndarray:
    """Per-datum log masses, shape ``(len(data), n_theta)``.

    With ``r`` the ball masses ``p_θ(D_r(x))``, otherwise point masses.
    """
    lik = model.likelihood
    rows = []
    with np.errstate(divide="ignore"):
        for x in data:
            if r is None:
                rows.append(np.log(lik.point_masses(model.points, x)))
            else:
                rows.append(lik.log_ball_masses(model.points, x, r))
    return np.vstack(rows) if rows else np.zeros((0, len(model)))


def _log_prior(model) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(model.weights)


def _normalise(log_prior, loglik):
    """Posterior weights from log-likelihoods; ``None`` when the denominator vanishes."""
    lw = log_prior + loglik
    m = float(np.max(lw)) if lw.size else -np.inf
    if not m > LOG_TINY:
        return None, lw, m
    w = np.exp(lw - m)
    return w / w.sum(), lw, m


def _datum_singular(log_prior, terms) -> list[bool]:
    return [bool(not np.max(log_prior + row) > LOG_TINY) for row in terms]


def _report_from_weights(model, method, w, singular_data, **extra) -> PosteriorReport:
    singular = w is None
    if singular:
        w = model.weights.copy()
    return PosteriorReport(method=method, posterior=model.posterior_object(w), weights=w,
                           converged=not singular, singular=singular or any(singular_data),
                           singular_data=singular_data,
                           labels=list(model.points) if model.finite_theta else None, **extra)


def _data(model, data):
    data = [model.point(x) for x in data]
    if not data:
        raise ValueError("at least one datum is required")
    return data


# ---------------------------------------------------------------------------
# posteriors


def exact_finite_posterior(model: BayesianModel, data) -> PosteriorReport:
    """Finite Bayes: ``posterior(θ) ∝ prior(θ) Π_i p_θ({x_i})``."""
    if not (model.finite_theta and model.sample_space.is_finite):
        raise MethodMismatchError("the exact update needs finite parameter and sample spaces")
    data = _data(model, data)
    terms = _log_terms(model, data)
    lp = _log_prior(model)
    w, _, _ = _normalise(lp, terms.sum(axis=0))
    return _report_from_weights(model, "exact", w, _datum_singular(lp, terms))


def _density_terms(model, data) -> np.ndarray:
    lik = model.likelihood
    rows = []
    with np.errstate(divide="ignore"):
        for x in data:
            rows.append(np.log(lik.densities(model.points, x)))
    return np.vstack(rows)


def _has_atoms(model, data) -> bool:
    if model.sample_space.is_finite:
        return False
    return any(np.any(model.likelihood.point_masses(model.points, x) > 0) for x in data)


def _check_dominated(model):
    if model.sample_space.is_finite:
        return
    lik = model.likelihood
    if lik.family == "identity" or lik.family in ("map", "dirac"):
        raise MethodMismatchError("atomic likelihoods have no common Lebesgue density")
    if lik.kind == "table" and any(r.locations.shape[0] for r in lik.rows):
        raise MethodMismatchError("likelihood rows with atoms have no common Lebesgue density")


def classical_bayes_posterior(model: BayesianModel, data) -> PosteriorReport:
    """Density reweighting ``prior(θ) Π_i f(x_i | θ)``.

    Densities are against counting measure on finite sample spaces and
    Lebesgue measure on euclidean ones.
    """
    data = _data(model, data)
    _check_dominated(model)
    terms = _density_terms(model, data)
    lp = _log_prior(model)
    w, _, _ = _normalise(lp, terms.sum(axis=0))
    return _report_from_weights(model, "classical", w, _datum_singular(lp, terms))


def _richardson(prev, last, before, ratio):
    """Extrapolate the weight sequence to ``r = 0``; order chosen from observed rates."""
    d1 = last - prev
    d0 = prev - before
    n1, n0 = np.abs(d1).sum(), np.abs(d0).sum()
    if n1 == 0.0 or n0 == 0.0:
        return last.copy(), None
    rate = n1 / n0
    order = 2 if abs(rate - ratio ** 2) < abs(rate - ratio) else 1
    q = ratio ** order
    ext = last + q * d1 / (1.0 - q)
    ext = np.clip(ext, 0.0, None)
    s = ext.sum()
    if not s > 0:
        return None, None
    return ext / s, order


def ball_posterior(model: BayesianModel, data, schedule: RadiusSchedule | None = None,
                   queries=None, extrapolate: bool = True) -> PosteriorReport:
    """Posterior as the limit of ratios of prior-integrated ball probabilities.

    Runs the radius schedule until the posterior changes by less than
    ``schedule.tol`` in total variation over ``schedule.window`` consecutive
    steps. If the denominator vanishes (every log-weight ≤ log 1e-300) the
    data lie in the singular set: the posterior falls back to the prior and
    ``singular`` is set.
    """
    data = _data(model, data)
    schedule = schedule or RadiusSchedule.default(model.sample_space)
    schedule.check_space(model.sample_space)
    masks = model.query_masks(queries)
    lp = _log_prior(model)
    history, trace = [], []
    calm, converged, vanished = 0, False, False
    singular_data = [False] * len(data)
    r = schedule.r0
    for r in schedule.radii():
        r = float(r)
        terms = _log_terms(model, data, r)
        singular_data = _datum_singular(lp, terms)
        w, lw, m = _normalise(lp, terms.sum(axis=0))
        log_den = float(logsumexp(lw)) if np.isfinite(m) else -np.inf
        row = {"r": r, "log_denominator": log_den, "denominator": math.exp(log_den)}
        if w is None:
            vanished = True
            row.update(numerators=[0.0] * len(masks), ratios=[float("nan")] * len(masks),
                       tv_change=float("nan"))
            trace.append(row)
            break
        nums = [float(np.exp(logsumexp(lw[mk]))) if mk.any() else 0.0 for _, mk in masks]
        ratios = [float(w[mk].sum()) for _, mk in masks]
        change = float(np.abs(w - history[-1]).sum()) if history else float("inf")
        row.update(numerators=nums, ratios=ratios, tv_change=change)
        trace.append(row)
        history.append(w)
        calm = calm + 1 if change < schedule.tol else 0
        if calm >= schedule.window:
            converged = True
            break

    dens = [t["log_denominator"] for t in trace]
    monotone = bool(all(b <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(dens, dens[1:])))
    if vanished:
        w = model.weights.copy()
        return PosteriorReport("ball", model.posterior_object(w), w, converged=False, singular=True,
                               singular_data=singular_data, trace=trace,
                               query_names=[n for n, _ in masks], denominator_monotone=monotone,
                               final_radius=r, labels=list(model.points) if model.finite_theta else None)
    w = history[-1]
    ext, order = None, None
    if extrapolate and monotone and len(history) >= 3:
        ext, order = _richardson(history[-2], history[-1], history[-3], schedule.ratio)
    return PosteriorReport("ball", model.posterior_object(w), w, converged=converged,
                           singular=any(singular_data), singular_data=singular_data, trace=trace,
                           query_names=[n for n, _ in masks], extrapolated=ext,
                           extrapolation_order=order, denominator_monotone=monotone,
                           final_radius=r, labels=list(model.points) if model.finite_theta else None)


def _domination_check(model, x, schedule: RadiusSchedule, steps: int = 12) -> bool:
    """Heuristic check that ``d/dr p_θ(D_r(x))`` stays bounded as ``r -> 0``.

    Fits the envelope of finite-difference slopes on the coarse half of the
    schedule and requires the fine half to stay beneath it (with slack).
    """
    radii = schedule.radii()[: max(steps, 4)]
    masses = np.vstack([model.likelihood.ball_masses(model.points, x, float(r)) for r in radii])
    slopes = np.abs(np.diff(masses, axis=0)) / (-np.diff(radii))[:, None]
    half = slopes.shape[0] // 2
    envelope = np.max(slopes[:half], axis=0)
    fine = np.max(slopes[half:], axis=0)
    ok = fine <= 1.5 * envelope + 1e-12
    live = model.weights > 0
    return bool(np.all(ok[live]) and np.isfinite(model.weights @ envelope))


def lopital_posterior(model: BayesianModel, data, schedule: RadiusSchedule | None = None) -> PosteriorReport:
    """Posterior via the derivative of ball masses at ``r = 0``.

    For atomless likelihoods the ratio of derivatives reduces to the density
    ratio; the ball-surface factor cancels. Also runs a numerical check that
    differentiating under the integral is justified.
    """
    data = _data(model, data)
    if model.sample_space.is_finite or _has_atoms(model, data):
        raise MethodMismatchError("likelihood has an atom at a datum; use the ball method")
    _check_dominated(model)
    schedule = schedule or RadiusSchedule.default(model.sample_space)
    rep = classical_bayes_posterior(model, data)
    rep.method = "lopital"
    rep.dui_verified = all(_domination_check(model, x, schedule) for x in data)
    return rep


# ---------------------------------------------------------------------------
# singular set and consistency


@dataclass
class SingularProbe:
    points: list
    flagged: list
    radii: list
    marginal_mass: float

    def as_dict(self):
        return {"probes": len(self.points),
                "flagged": [_jsonable(p.tolist() if isinstance(p, np.ndarray) else p)
                            for p, f in zip(self.points, self.flagged) if f],
                "marginal_mass": self.marginal_mass}


def default_grid(model: BayesianModel, data=(), n: int = 65) -> list:
    X = model.sample_space
    if X.is_finite:
        return list(X.labels)
    if X.dim != 1:
        raise ValueError("default probe grids exist for finite and one-dimensional spaces only")
    pts = list(np.linspace(X.lower[0], X.upper[0], n)[:, None])
    pts += [X.point(x) for x in data]
    return pts


def singular_set_probe(model: BayesianModel, grid=None, schedule: RadiusSchedule | None = None,
                       weights=None) -> SingularProbe:
    """Flag probe points where the ball ratio has no limit (vanishing or non-convergent).

    The mass of the flagged region is estimated as the sum of marginal ball
    masses at the flagged points, at the last radius reached for each.
    ``weights`` replaces the prior (used for updated marginals).
    """
    schedule = schedule or RadiusSchedule.default(model.sample_space)
    grid = default_grid(model) if grid is None else [model.point(p) for p in grid]
    w = model.weights if weights is None else np.asarray(weights)
    flagged, radii, mass = [], [], 0.0
    for p in grid:
        rep = ball_posterior(model, [p], schedule, queries=[], extrapolate=False)
        bad = rep.singular or not rep.converged
        flagged.append(bool(bad))
        radii.append(rep.final_radius)
        if bad:
            mass += float(w @ model.likelihood.ball_masses(model.points, p, rep.final_radius))
    return SingularProbe(grid, flagged, radii, mass)


def consistency_check(model: BayesianModel, data, schedule: RadiusSchedule | None = None,
                      grid=None) -> float:
    """Mass that the posterior-updated marginal puts on the flagged singular region."""
    schedule = schedule or RadiusSchedule.default(model.sample_space)
    rep = ball_posterior(model, data, schedule)
    if not (rep.converged or rep.singular):
        raise RuntimeError("ball posterior did not converge on the data")
    grid = default_grid(model, data) if grid is None else grid
    probe = singular_set_probe(model, grid, schedule)
    total = 0.0
    for p, bad, r in zip(probe.points, probe.flagged, probe.radii):
        if bad:
            total += float(rep.weights @ model.likelihood.ball_masses(model.points, p, r))
    return total


# ---------------------------------------------------------------------------
# Bayes inversion on finite models


def posterior_kernel(model: BayesianModel) -> Kernel:
    """``Q: X -> P(Θ)``, one exact posterior per sample label (prior where singular)."""
    if not (model.finite_theta and model.sample_space.is_finite):
        raise MethodMismatchError("posterior kernels are tabulated on finite models only")
    rows = [exact_finite_posterior(model, [x]).weights for x in model.sample_space.labels]
    return Kernel.from_matrix(model.sample_space, model.theta_space,
                              np.vstack(rows), tol=1e-10)


def posterior_equivalence_check(model: BayesianModel, Q: Kernel, tol: float = 1e-10) -> bool:
    """Whether ``Q`` inverts the likelihood: ``(Γ_Q)_* μ_X`` is the joint and ``Q_* μ_X = μ_Θ``."""
    if not (model.finite_theta and model.sample_space.is_finite):
        raise MethodMismatchError("the equivalence check needs finite spaces")
    if Q.domain != model.sample_space or Q.codomain != model.theta_space:
        raise ValueError("Q must map the sample space to the parameter space")
    P = model.likelihood.matrix
    prior = model.weights
    joint = prior[:, None] * P
    mx = prior @ P
    back = (mx[:, None] * Q.matrix).T
    return bool(np.abs(joint - back).sum() <= tol and np.abs(mx @ Q.matrix - prior).sum() <= tol)
