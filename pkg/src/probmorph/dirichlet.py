"""Dirichlet distributions on finite spaces and Dirichlet measures by stick-breaking.

On a finite space Dir(α) lives on the face of the simplex spanned by the
labels with α > 0 and is sampled by normalising independent Gamma variates.
On a general space a draw from the Dirichlet measure is the random atomic
measure ``Σ p_i δ_{q_i}`` with ``p_n = θ_n Π_{i<n} (1 - θ_i)``,
``θ_i ~ Beta(1, α(X))`` and ``q_i ~ α / α(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from . import _backend
from .errors import ZeroMassError
from .measure import (
    LabelMap,
    Measure,
    PartitionMap,
    add_measures,
    normalize,
    pushforward_measure,
)
from .rngstats import (
    as_lineage,
    beta_variates,
    ks_test,
    ks_two_sample,
    moment_summary,
    moments_agree,
    moments_match,
)
from .spaces import SampleSpace

__all__ = [
    "DirichletParam",
    "DPSample",
    "CheckReport",
    "dir_density",
    "dir_sample",
    "aggregate",
    "dir_posterior",
    "stick_breaking_sample",
    "dp_project",
    "dp_project_many",
    "dp_pushforward",
    "dp_posterior",
    "dp_moment_check",
    "aggregation_check",
    "naturality_check",
    "conjugacy_check",
    "dir_continuity_probe",
    "dirichlet_suite",
]

DEFAULT_EPS = 1e-10
MAX_STICKS = 100_000
_BLOCK = 32


class DirichletParam:
    """A nonzero finite measure α, the parameter of Dir(α) or of the Dirichlet measure."""

    def __init__(self, base: Measure):
        if base.signed and base._has_negative():
            raise ValueError("a Dirichlet parameter must be a nonnegative measure")
        if not base.total_mass > 0:
            raise ZeroMassError("a Dirichlet parameter needs positive total mass")
        self.base = base
        self.concentration = float(base.total_mass)

    @classmethod
    def finite(cls, values, labels=None) -> "DirichletParam":
        values = np.asarray(values, dtype=float)
        space = SampleSpace.finite(labels if labels is not None else range(values.size))
        return cls(Measure(space, vector=values))

    @property
    def space(self) -> SampleSpace:
        return self.base.space

    @property
    def vector(self) -> np.ndarray:
        return self.base.vector

    @property
    def support(self) -> np.ndarray:
        """Indices of labels with positive parameter (finite spaces)."""
        return np.flatnonzero(self.vector > 0)

    def normalized(self) -> Measure:
        return normalize(self.base)

    def __repr__(self):
        return f"DirichletParam({self.base!r})"


def _vec(alpha) -> np.ndarray:
    if isinstance(alpha, DirichletParam):
        return np.asarray(alpha.vector, dtype=float)
    return np.asarray(alpha, dtype=float)


def dir_density(alpha, x) -> float:
    """Density of Dir(α) at ``x`` on the face spanned by the support of α.

    Points putting mass off the support have density 0. When the support is
    a single label the face is a point and the value is its mass, 1.
    """
    a = _vec(alpha)
    x = np.asarray(x, dtype=float)
    if x.shape != a.shape:
        raise ValueError("x and alpha differ in length")
    if np.any(x < 0) or abs(x.sum() - 1.0) > 1e-12:
        raise ValueError("x is not a point of the simplex")
    on = a > 0
    if np.any(x[~on] > 0):
        return 0.0
    a, x = a[on], x[on]
    if a.size == 1:
        return 1.0
    logc = gammaln(a.sum()) - gammaln(a).sum()
    return float(np.exp(logc + xlogy(a - 1.0, x).sum()))


def dir_sample(alpha, n: int, seed=0) -> np.ndarray:
    """``n`` draws from Dir(α) as rows; zero coordinates off the support."""
    a = _vec(alpha)
    if n < 1:
        raise ValueError("n must be positive")
    on = np.flatnonzero(a > 0)
    if on.size == 0:
        raise ZeroMassError("alpha has empty support")
    gen = as_lineage(seed).generator()
    g = gen.standard_gamma(a[on], size=(n, on.size))
    out = np.zeros((n, a.size))
    out[:, on] = g / g.sum(axis=1, keepdims=True)
    return out


def _cells(partition, k=None) -> tuple[np.ndarray, int]:
    if isinstance(partition, LabelMap):
        return partition.index_map(), partition.codomain.size
    idx = np.asarray(partition, dtype=int)
    return idx, int(idx.max()) + 1 if k is None else k


def aggregate(sample, partition, n_cells: int | None = None) -> np.ndarray:
    """Sum simplex coordinates over the cells of a label partition."""
    idx, l = _cells(partition, n_cells)
    x = np.asarray(sample, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    out = np.zeros((flat.shape[0], l))
    for j in range(l):
        out[:, j] = flat[:, idx == j].sum(axis=1)
    return out.reshape(x.shape[:-1] + (l,))


def dir_posterior(alpha: DirichletParam, x) -> DirichletParam:
    """``α + δ_x`` for a label ``x``, or ``α + Σ δ_x`` for a list of labels."""
    return dp_posterior(alpha, x if isinstance(x, list) else [x])


def dp_posterior(alpha: DirichletParam, data) -> DirichletParam:
    """``α + Σ_i δ_{x_i}``."""
    base = alpha.base
    for v in data:
        base = add_measures(base, Measure.dirac(alpha.space, v))
    return DirichletParam(base)


# ---------------------------------------------------------------------------
# stick-breaking


@dataclass
class DPSample:
    """A truncated stick-breaking draw ``Σ p_i δ_{q_i}`` plus the unassigned remainder.

    ``locs`` holds label indices on finite spaces and an ``(m, d)`` array on
    euclidean ones.
    """

    locs: np.ndarray
    weights: np.ndarray
    remainder: float
    sticks: np.ndarray
    alpha: DirichletParam
    lineage: str = ""

    @property
    def truncation(self) -> int:
        return int(self.weights.size)

    @property
    def space(self) -> SampleSpace:
        return self.alpha.space

    def as_measure(self) -> Measure:
        """The atoms as a measure (mass ``1 - remainder``; the remainder is not spread)."""
        sp = self.space
        if sp.is_finite:
            vec = np.zeros(sp.size)
            np.add.at(vec, self.locs, self.weights)
            return Measure(sp, vector=vec)
        return Measure(sp, locs=self.locs, weights=self.weights)

    def rows(self):
        """``(i, location, weight)`` triples for tabular output."""
        sp = self.space
        for i, (q, p) in enumerate(zip(self.locs, self.weights)):
            yield i, (sp.labels[int(q)] if sp.is_finite else np.atleast_1d(q)), float(p)


def _break_sticks(gen, total, eps, cap, fixed_stick):
    rem, used = 1.0, 0
    ws, ths = [], []
    while rem >= eps and used < cap:
        k = min(_BLOCK, cap - used)
        th = np.full(k, float(fixed_stick)) if fixed_stick is not None else beta_variates(gen, 1.0, total, k)
        w, rem, u = _backend.stick_scan(th, rem, eps, k)
        ws.append(np.asarray(w))
        ths.append(th[:u])
        used += u
    return np.concatenate(ws), float(rem), np.concatenate(ths)


def stick_breaking_sample(alpha: DirichletParam, n: int, seed=0, truncation: int | None = None,
                          eps: float = DEFAULT_EPS, fixed_stick: float | None = None) -> list[DPSample]:
    """``n`` independent stick-breaking draws from the Dirichlet measure of α.

    Draw ``d`` uses the derived stream ``seed/d``, so any subset of draws can
    be regenerated on its own. Breaking stops once the remainder drops below
    ``eps`` or after ``truncation`` sticks (default cap 100000). The
    remainder is recorded and never folded back into the weights.
    ``fixed_stick`` replaces the Beta sticks by a constant (test mode).
    """
    if n < 1:
        raise ValueError("n must be positive")
    if fixed_stick is not None and not 0 < fixed_stick <= 1:
        raise ValueError("fixed_stick must lie in (0, 1]")
    cap = MAX_STICKS if truncation is None else int(truncation)
    if cap < 1:
        raise ValueError("truncation must be positive")
    lineage = as_lineage(seed)
    base = alpha.normalized()
    out = []
    for d in range(n):
        child = lineage.child(d)
        gen = child.generator()
        w, rem, th = _break_sticks(gen, alpha.concentration, eps, cap, fixed_stick)
        locs = base.sample(gen, w.size)
        out.append(DPSample(locs, w, rem, th, alpha, str(child)))
    return out


def dp_project(sample: DPSample, partition, base_cells=None) -> np.ndarray:
    """Cell masses of a draw; the remainder is split like α's cell masses.

    ``base_cells`` (the cell masses of normalised α) may be passed in to
    avoid recomputing them for every draw.
    """
    if isinstance(partition, PartitionMap):
        if sample.space.is_finite:
            pts = [sample.space.labels[int(i)] for i in sample.locs]
            cells = partition.cell_indices(pts)
        else:
            cells = partition.cell_indices(sample.locs)
        l = partition.codomain.size
    elif isinstance(partition, LabelMap):
        if not sample.space.is_finite:
            raise TypeError("label maps apply to draws on finite spaces only")
        cells = partition.index_map()[sample.locs]
        l = partition.codomain.size
    else:
        raise TypeError("partition must be a PartitionMap or LabelMap")
    out = np.bincount(cells, weights=sample.weights, minlength=l)
    if sample.remainder:
        if base_cells is None:
            base_cells = pushforward_measure(partition, sample.alpha.normalized()).vector
        out = out + sample.remainder * base_cells
    return out


def dp_project_many(draws, partition) -> np.ndarray:
    """Project a batch of draws sharing one α; rows are draws."""
    if not draws:
        return np.zeros((0, partition.codomain.size))
    base_cells = pushforward_measure(partition, draws[0].alpha.normalized()).vector
    return np.vstack([dp_project(d, partition, base_cells) for d in draws])


def dp_pushforward(sample: DPSample, kappa) -> DPSample:
    """Move every atom of a draw through a measurable map; α moves along."""
    sp = sample.space
    if sp.is_finite:
        if not isinstance(kappa, (LabelMap, PartitionMap)):
            raise TypeError("finite draws move through label or partition maps")
        pts = [sp.labels[int(i)] for i in sample.locs]
    else:
        pts = sample.locs
    cod = kappa.codomain
    if isinstance(kappa, PartitionMap):
        locs = kappa.cell_indices(pts)
    elif isinstance(kappa, LabelMap):
        imgs = [kappa(p) for p in pts]
        locs = np.array([cod.index(v) for v in imgs], dtype=int) if cod.is_finite else np.array(imgs)
    else:
        locs = kappa.apply(pts)
    alpha = DirichletParam(pushforward_measure(kappa, sample.alpha.base))
    return DPSample(locs, sample.weights, sample.remainder, sample.sticks, alpha, sample.lineage)


# ---------------------------------------------------------------------------
# verification suites


@dataclass
class CheckReport:
    """Per-cell moment and KS comparisons for one distributional identity."""

    name: str
    entries: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e["passed"] for e in self.entries)

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "entries": self.entries, **self.info}


def _compare_cells(a: np.ndarray, b: np.ndarray | None, oracle=None, label="", k=3.0):
    """Compare cell-mass samples; ``oracle`` is a Beta ``(a, b)`` pair or None."""
    entries = []
    for j in range(a.shape[1]):
        e = {"cell": j, "label": label}
        sa = moment_summary(a[:, j])
        e["left"] = sa.as_dict()
        ok = True
        degenerate = sa.variance == 0.0
        if b is not None:
            sb = moment_summary(b[:, j])
            e["right"] = sb.as_dict()
            if degenerate or sb.variance == 0.0:
                ok &= abs(sa.mean - sb.mean) <= 1e-12 and sa.variance == sb.variance
            else:
                m_ok, v_ok = moments_agree(sa, sb, k)
                ks = ks_two_sample(a[:, j], b[:, j])
                e.update(mean_ok=m_ok, var_ok=v_ok, ks_two_sample=ks.as_dict())
                ok &= m_ok and v_ok and ks.passed_1pct
        if oracle is not None:
            pa, pb = oracle[j]
            if pa == 0 or pb == 0:
                want = 1.0 if pb == 0 else 0.0
                ok &= bool(np.all(np.abs(a[:, j] - want) <= 1e-12))
            else:
                s = pa + pb
                mean, var = pa / s, pa * pb / (s * s * (s + 1))
                m_ok, v_ok = moments_match(sa, mean, var, k)
                ks = ks_test(a[:, j], "beta", a=pa, b=pb)
                e["oracle"] = {"beta": [pa, pb], "mean": mean, "variance": var,
                               "mean_ok": m_ok, "var_ok": v_ok, "ks": ks.as_dict()}
                ok &= m_ok and v_ok and ks.passed_1pct
        e["passed"] = bool(ok)
        entries.append(e)
    return entries


def _beta_oracle(cell_alpha: np.ndarray):
    tot = float(cell_alpha.sum())
    return [(float(c), tot - float(c)) for c in cell_alpha]


def dp_moment_check(alpha: DirichletParam, partition: PartitionMap, n: int = 10_000, seed=0,
                    eps: float = DEFAULT_EPS) -> CheckReport:
    """Projected stick-breaking draws against the Beta marginals of the projected α."""
    draws = stick_breaking_sample(alpha, n, seed, eps=eps)
    cells = dp_project_many(draws, partition)
    cell_alpha = pushforward_measure(partition, alpha.base).vector
    rep = CheckReport("dp-moments", _compare_cells(cells, None, _beta_oracle(cell_alpha)))
    max_rem = max(d.remainder for d in draws)
    rep.info = {"max_remainder": max_rem, "remainder_ok": max_rem <= eps, "draws": n,
                "max_sum_error": float(np.max(np.abs(cells.sum(axis=1) - 1.0)))}
    if max_rem > eps:
        rep.entries.append({"cell": None, "label": "remainder", "passed": False})
    return rep


def aggregation_check(alpha, partition, n: int = 10_000, seed=0) -> CheckReport:
    """Aggregated Dir(α) draws against Dir(cell sums of α) and its Beta marginals."""
    a = _vec(alpha)
    idx, l = _cells(partition)
    agg_alpha = aggregate(a, idx, l)
    lin = as_lineage(seed)
    left = aggregate(dir_sample(a, n, lin.child(0)), idx, l)
    right = dir_sample(agg_alpha, n, lin.child(1))
    rep = CheckReport("aggregation", _compare_cells(left, right, _beta_oracle(agg_alpha)))
    rep.info = {"alpha": a.tolist(), "aggregated_alpha": agg_alpha.tolist(), "draws": n}
    return rep


def naturality_check(alpha: DirichletParam, kappa, n: int = 10_000, seed=0,
                     partitions=None) -> CheckReport:
    """Sample-then-push against push-then-sample, projected through partitions of Y.

    Left: draws of the Dirichlet measure of α with every atom moved by κ.
    Right: draws of the Dirichlet measure of ``κ_* α``. Cell masses are
    compared by moments, a two-sample KS test and the Beta oracle.
    """
    cod = kappa.codomain
    if partitions is None:
        if not cod.is_finite:
            raise ValueError("partitions of a euclidean codomain must be given")
        partitions = [LabelMap(cod, cod, list(cod.labels))]
    lin = as_lineage(seed)
    pushed = [dp_pushforward(d, kappa) for d in stick_breaking_sample(alpha, n, lin.child(0))]
    pushed_alpha = DirichletParam(pushforward_measure(kappa, alpha.base))
    direct = stick_breaking_sample(pushed_alpha, n, lin.child(1))
    rep = CheckReport("naturality")
    for pi, part in enumerate(partitions):
        left = dp_project_many(pushed, part)
        right = dp_project_many(direct, part)
        oracle = _beta_oracle(pushforward_measure(part, pushed_alpha.base).vector)
        rep.entries += _compare_cells(left, right, oracle, label=f"partition{pi}")
    rep.info = {"draws": n, "partitions": len(partitions)}
    return rep


def conjugacy_check(alpha: DirichletParam, data, partition, n: int = 10_000, seed=0) -> CheckReport:
    """Project-after-update against update-after-project.

    Left: stick-breaking draws of the posterior ``α + Σ δ_x`` projected to
    cells. Right: Gamma-sampled Dir(projected α + counts of the data cells).
    """
    lin = as_lineage(seed)
    post = dp_posterior(alpha, data)
    left = dp_project_many(stick_breaking_sample(post, n, lin.child(0)), partition)
    proj_alpha = pushforward_measure(partition, alpha.base).vector
    counts = pushforward_measure(partition, Measure.from_atoms(
        alpha.space, [(x, 1.0) for x in data])).vector
    right_alpha = proj_alpha + counts
    right = dir_sample(right_alpha, n, lin.child(1))
    rep = CheckReport("conjugacy", _compare_cells(left, right, _beta_oracle(right_alpha)))
    rep.info = {"draws": n, "projected_posterior_alpha": right_alpha.tolist()}
    return rep


def dir_continuity_probe(path, alpha, n: int = 10_000, seed=0, k: float = 3.0) -> CheckReport:
    """Moment distances between Dir(α_j) along a path and the limit Dir(α).

    Each step reports the sampled first-coordinate moment gaps to the exact
    limit moments, their standard errors and the exact gap. The probe passes
    when the exact gaps are nonincreasing and the final sampled gaps are
    within ``k`` standard errors.
    """
    a = _vec(alpha)
    s = a.sum()
    lim_mean = a[0] / s
    lim_var = a[0] * (s - a[0]) / (s * s * (s + 1))
    lin = as_lineage(seed)
    entries, exact = [], []
    for j, aj in enumerate(path):
        aj = _vec(aj)
        sj = aj.sum()
        x = dir_sample(aj, n, lin.child(j))[:, 0]
        sm = moment_summary(x)
        gap_exact = abs(aj[0] / sj - lim_mean) + abs(aj[0] * (sj - aj[0]) / (sj * sj * (sj + 1)) - lim_var)
        exact.append(gap_exact)
        entries.append({"step": j, "alpha": aj.tolist(), "mean_gap": abs(sm.mean - lim_mean),
                        "var_gap": abs(sm.variance - lim_var), "se_mean": sm.se_mean,
                        "se_variance": sm.se_variance, "exact_gap": gap_exact, "passed": True})
    last = entries[-1]
    ok_final = last["mean_gap"] <= k * last["se_mean"] and last["var_gap"] <= k * last["se_variance"]
    ok_mono = all(b <= a_ + 1e-15 for a_, b in zip(exact, exact[1:]))
    last["passed"] = bool(ok_final and ok_mono)
    return CheckReport("continuity", entries, {"limit_alpha": a.tolist(), "monotone": ok_mono})


def _unit_halves():
    X = SampleSpace.interval(0.0, 1.0)
    return X, PartitionMap.intervals(X, [0.5])


def dirichlet_suite(seed=0, n: int = 10_000) -> list[CheckReport]:
    """The shipped Dirichlet verification fixtures."""
    lin = as_lineage(seed)
    X, halves = _unit_halves()
    two_unif = DirichletParam(Measure.uniform(X, 2.0))
    omega3 = DirichletParam.finite([1.0, 2.0, 3.0])
    omega2 = SampleSpace.finite([0, 1])
    collapse = LabelMap(omega3.space, omega2, [0, 0, 1])
    reports = [
        aggregation_check(omega3, collapse, n, lin.child(0)),
        dp_moment_check(two_unif, halves, n, lin.child(1)),
        naturality_check(omega3, collapse, n, lin.child(2)),
        naturality_check(two_unif, halves, n, lin.child(3)),
        conjugacy_check(two_unif, [0.3], halves, n, lin.child(4)),
        conjugacy_check(omega3, [0], collapse, n, lin.child(5)),
        dir_continuity_probe([[1 + 1 / j, 1.0] for j in (1, 2, 4, 8, 16, 1000)], [1.0, 1.0], n,
                             lin.child(6)),
    ]
    names = ["aggregation", "dp-moments", "naturality-collapse", "naturality-partition",
             "conjugacy-unit", "conjugacy-finite", "continuity"]
    for r, nm in zip(reports, names):
        r.name = nm
    return reports
