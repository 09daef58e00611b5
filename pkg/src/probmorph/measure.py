"""Finite measures on sample spaces and the primitives built on them.

A :class:`Measure` on a finite space is a weight vector over the labels. On a
euclidean box it is a list of atoms plus weighted density components. The same
class carries signed measures (``signed=True``); probability measures are
measures whose total mass is one.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate as _quad

from .densities import Density, density_from_spec
from .errors import IncomparableError, OutsideSpaceError, SpaceMismatchError, ZeroMassError
from .rngstats import as_lineage
from .spaces import Box, Region, SampleSpace, SimpleFunction, _jsonable, freeze_label

__all__ = [
    "Measure",
    "integrate",
    "add_measures",
    "normalize",
    "pushforward_measure",
    "ball_probability",
    "total_variation",
    "LabelMap",
    "AffineMap",
    "CoordinateMap",
    "PartitionMap",
    "measure_from_spec",
    "PROB_TOL",
    "MERGE_TOL",
]

PROB_TOL = 1e-12
MERGE_TOL = 1e-12
DEFAULT_PUSH_SAMPLES = 100_000


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _merge_atoms(locs: np.ndarray, w: np.ndarray):
    """Sort atoms lexicographically and merge neighbours closer than MERGE_TOL."""
    if locs.shape[0] == 0:
        return locs, w
    order = np.lexsort(locs.T[::-1])
    locs, w = locs[order], w[order]
    if locs.shape[0] > 1:
        gap = np.linalg.norm(np.diff(locs, axis=0), axis=1)
        if np.any(gap <= MERGE_TOL):
            start = np.concatenate([[True], gap > MERGE_TOL])
            group = np.cumsum(start) - 1
            w = np.bincount(group, weights=w)
            locs = locs[start]
    keep = w != 0
    return locs[keep], w[keep]


class Measure:
    """A finite (optionally signed) measure on a :class:`SampleSpace`.

    Construct through the classmethods; instances are immutable.
    """

    __slots__ = ("space", "signed", "approximate", "_vec", "_locs", "_w", "_dens", "_mass")

    def __init__(self, space: SampleSpace, *, vector=None, locs=None, weights=None,
                 densities: Iterable[tuple[Density, float]] = (), signed=False, approximate=False):
        self.space = space
        self.signed = bool(signed)
        self.approximate = bool(approximate)
        if space.is_finite:
            vec = np.zeros(space.size) if vector is None else np.array(vector, dtype=float)
            if vec.shape != (space.size,):
                raise SpaceMismatchError("weight vector length differs from the label count")
            if tuple(densities):
                raise ValueError("finite spaces carry no density components")
            if not signed and np.any(vec < 0):
                raise ValueError("negative atom weight in an unsigned measure")
            if not np.all(np.isfinite(vec)):
                raise ValueError("atom weights must be finite")
            self._vec = _readonly(vec)
            self._locs = self._w = None
            self._dens = ()
            self._mass = float(vec.sum())
        else:
            d = space.dim
            locs = np.zeros((0, d)) if locs is None else np.array(locs, dtype=float).reshape(-1, d)
            w = np.zeros(0) if weights is None else np.array(weights, dtype=float).ravel()
            if w.shape[0] != locs.shape[0]:
                raise ValueError("atom locations and weights differ in length")
            if locs.shape[0]:
                space.points(locs)
            if not signed and np.any(w < 0):
                raise ValueError("negative atom weight in an unsigned measure")
            locs, w = _merge_atoms(locs, w)
            merged: dict[Density, float] = {}
            for dens, wt in densities:
                wt = float(wt)
                if not signed and wt < 0:
                    raise ValueError("negative density weight in an unsigned measure")
                if dens.dim != d:
                    raise SpaceMismatchError("density dimension differs from the space")
                dens.check_inside(space.lower, space.upper)
                merged[dens] = merged.get(dens, 0.0) + wt
            self._vec = None
            self._locs = _readonly(locs)
            self._w = _readonly(w)
            self._dens = tuple((k, v) for k, v in merged.items() if v != 0)
            self._mass = float(w.sum() + sum(v for _, v in self._dens))

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, space):
        return cls(space)

    @classmethod
    def from_vector(cls, space, vec, signed=False):
        return cls(space, vector=vec, signed=signed)

    @classmethod
    def from_atoms(cls, space, atoms: Iterable[tuple], signed=False):
        atoms = list(atoms)
        if space.is_finite:
            vec = np.zeros(space.size)
            for lab, w in atoms:
                vec[space.index(lab)] += w
            return cls(space, vector=vec, signed=signed)
        if not atoms:
            return cls(space, signed=signed)
        locs = np.array([np.atleast_1d(np.asarray(l, float)) for l, _ in atoms])
        return cls(space, locs=locs, weights=[w for _, w in atoms], signed=signed)

    @classmethod
    def dirac(cls, space, x, weight=1.0):
        return cls.from_atoms(space, [(space.point(x), weight)])

    @classmethod
    def from_density(cls, space, density: Density, weight=1.0):
        return cls(space, densities=[(density, weight)])

    @classmethod
    def uniform(cls, space, weight=1.0):
        if space.is_finite:
            return cls(space, vector=np.full(space.size, weight / space.size))
        from .densities import Uniform
        return cls(space, densities=[(Uniform(space.lower, space.upper), weight)])

    # views --------------------------------------------------------------
    @property
    def total_mass(self) -> float:
        return self._mass

    @property
    def vector(self) -> np.ndarray:
        if self._vec is None:
            raise TypeError("only finite-space measures have a weight vector")
        return self._vec

    @property
    def locations(self) -> np.ndarray:
        if self._locs is None:
            raise TypeError("finite-space measures expose atoms through .vector")
        return self._locs

    @property
    def atom_weights(self) -> np.ndarray:
        return self._vec if self._vec is not None else self._w

    @property
    def densities(self) -> tuple[tuple[Density, float], ...]:
        return self._dens

    @property
    def atoms(self) -> list[tuple]:
        if self._vec is not None:
            return [(self.space.labels[i], float(w)) for i, w in enumerate(self._vec) if w != 0]
        return [(loc.copy(), float(w)) for loc, w in zip(self._locs, self._w)]

    @property
    def has_densities(self) -> bool:
        return bool(self._dens)

    def is_probability(self, tol: float = PROB_TOL) -> bool:
        if self.signed and self._has_negative():
            return False
        return abs(self._mass - 1.0) <= tol

    def _has_negative(self) -> bool:
        w = self.atom_weights
        return bool(np.any(w < 0) or any(v < 0 for _, v in self._dens))

    def __repr__(self):
        if self._vec is not None:
            return f"Measure({dict(zip(self.space.labels, self._vec.tolist()))})"
        return (f"Measure(atoms={len(self._w)}, densities={[d for d, _ in self._dens]}, "
                f"mass={self._mass:.6g})")

    # algebra ------------------------------------------------------------
    def scaled(self, c: float) -> "Measure":
        signed = self.signed or c < 0
        if self._vec is not None:
            return Measure(self.space, vector=c * self._vec, signed=signed, approximate=self.approximate)
        return Measure(self.space, locs=self._locs, weights=c * self._w,
                       densities=[(d, c * v) for d, v in self._dens], signed=signed,
                       approximate=self.approximate)

    def __add__(self, other: "Measure") -> "Measure":
        return add_measures(self, other)

    def __sub__(self, other: "Measure") -> "Measure":
        return add_measures(self, other.scaled(-1.0))

    def __mul__(self, c: float) -> "Measure":
        return self.scaled(c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scaled(-1.0)

    # evaluation ---------------------------------------------------------
    def mass(self, region: Region) -> float:
        """Measure of a region."""
        self.space.check_same(region.space, "measure and region")
        if self._vec is not None:
            return float(self._vec[list(region.labels)].sum())
        total = float(self._w[region.contains(self._locs)].sum()) if self._w.size else 0.0
        for dens, v in self._dens:
            total += v * region.density_mass(dens)
        return total

    def ball(self, x, r: float) -> float:
        return ball_probability(self, x, r)

    def point_mass(self, x) -> float:
        """Measure of the singleton ``{x}``."""
        if self._vec is not None:
            return float(self._vec[self.space.index(x)])
        p = self.space.point(x)
        if not self._w.size:
            return 0.0
        hit = np.linalg.norm(self._locs - p, axis=1) <= MERGE_TOL
        return float(self._w[hit].sum())

    def density_at(self, x) -> float:
        """Density of the absolutely continuous part at ``x`` (Lebesgue reference)."""
        if self._vec is not None:
            raise TypeError("finite-space measures have no Lebesgue density")
        p = self.space.point(x)
        return float(sum(v * d.pdf(p[None, :])[0] for d, v in self._dens))

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """i.i.d. draws from the normalised measure.

        Finite spaces return label indices; euclidean spaces return ``(n, d)``.
        """
        if self.signed and self._has_negative():
            raise ValueError("cannot sample from a signed measure")
        if self._mass <= 0:
            raise ZeroMassError("cannot sample from a zero measure")
        if self._vec is not None:
            return gen.choice(self.space.size, size=n, p=self._vec / self._mass)
        comp_w = np.concatenate([self._w, [v for _, v in self._dens]])
        comp = gen.choice(comp_w.size, size=n, p=comp_w / comp_w.sum())
        out = np.empty((n, self.space.dim))
        n_atoms = self._w.size
        is_atom = comp < n_atoms
        out[is_atom] = self._locs[comp[is_atom]]
        for j, (dens, _) in enumerate(self._dens):
            sel = comp == n_atoms + j
            k = int(sel.sum())
            if k:
                out[sel] = dens.sample(gen, k)
        return out

    def to_spec(self) -> dict:
        if self._vec is not None:
            return {"weights": self._vec.tolist()}
        locs = self._locs[:, 0].tolist() if self.space.dim == 1 else self._locs.tolist()
        spec = {"atoms": [[l, w] for l, w in zip(locs, self._w.tolist())]}
        if self._dens:
            spec["densities"] = [{"family": d.family, "weight": v, **d.params()} for d, v in self._dens]
        return spec


def measure_from_spec(space: SampleSpace, spec) -> Measure:
    """Parse the declarative measure syntax used in config files.

    ``{"atoms": [[loc, w], ...], "densities": [{"family": ..., "weight": w, ...}]}``;
    finite spaces also accept ``{"weights": [...]}`` or a bare list.
    """
    if isinstance(spec, list):
        spec = {"weights": spec}
    if not isinstance(spec, dict):
        raise ValueError(f"measure spec must be an object, got {type(spec).__name__}")
    unknown = set(spec) - {"atoms", "densities", "weights", "scale"}
    if unknown:
        raise ValueError(f"unknown measure keys {sorted(unknown)}")
    scale = float(spec.get("scale", 1.0))
    if space.is_finite:
        if spec.get("densities"):
            raise ValueError("finite spaces carry no densities")
        vec = np.zeros(space.size)
        if "weights" in spec:
            w = np.asarray(spec["weights"], dtype=float)
            if w.shape != (space.size,):
                raise ValueError("weights length differs from the label count")
            vec += w
        for lab, w in spec.get("atoms", []):
            vec[space.index(freeze_label(lab))] += float(w)
        return Measure(space, vector=scale * vec)
    atoms = [(np.atleast_1d(np.asarray(l, float)), float(w)) for l, w in spec.get("atoms", [])]
    dens = [(density_from_spec(d, space.lower, space.upper), float(d.get("weight", 1.0)))
            for d in spec.get("densities", [])]
    locs = np.array([a for a, _ in atoms]).reshape(-1, space.dim)
    for a, _ in atoms:
        space.point(a)
    return Measure(space, locs=locs, weights=[scale * w for _, w in atoms],
                   densities=[(d, scale * w) for d, w in dens])


# ---------------------------------------------------------------------------
# operations


def integrate(f: SimpleFunction, mu: Measure) -> float:
    """``∫ f dμ`` for a simple function; exact on atoms and analytic on box cells."""
    f.space.check_same(mu.space, "function and measure")
    return float(sum(c * mu.mass(reg) for reg, c in f.terms))


def add_measures(a: Measure, b: Measure) -> Measure:
    a.space.check_same(b.space, "summands")
    signed = a.signed or b.signed
    approx = a.approximate or b.approximate
    if a.space.is_finite:
        return Measure(a.space, vector=a.vector + b.vector, signed=signed, approximate=approx)
    return Measure(a.space,
                   locs=np.concatenate([a._locs, b._locs]),
                   weights=np.concatenate([a._w, b._w]),
                   densities=list(a._dens) + list(b._dens), signed=signed, approximate=approx)


def normalize(mu: Measure) -> Measure:
    """The probability measure ``μ / μ(X)``."""
    m = mu.total_mass
    if not m > 0:
        raise ZeroMassError("cannot normalise a measure of zero total mass")
    if mu.signed and mu._has_negative():
        raise ValueError("cannot normalise a signed measure")
    if m == 1.0:
        return mu
    return mu.scaled(1.0 / m)


def ball_probability(mu: Measure, x, r: float) -> float:
    """Mass of the open ball ``D_r(x)``; finite spaces use the discrete metric."""
    if not r > 0:
        raise ValueError("ball radius must be positive")
    if mu.space.is_finite:
        i = mu.space.index(x)
        return float(mu.vector[i]) if r <= 1.0 else float(mu.vector.sum())
    p = mu.space.point(x)
    total = 0.0
    if mu._w.size:
        d2 = np.sum((mu._locs - p) ** 2, axis=1)
        total += float(mu._w[d2 < r * r].sum())
    for dens, v in mu._dens:
        total += v * dens.ball_mass(p, r)
    return total


def total_variation(a: Measure, b: Measure) -> float:
    """Full variation norm ``||a - b||`` (not halved)."""
    diff = add_measures(a, b.scaled(-1.0))
    if diff.space.is_finite:
        return float(np.abs(diff.vector).sum())
    total = float(np.abs(diff._w).sum())
    comps = diff._dens
    if not comps:
        return total
    if diff.space.dim != 1:
        raise IncomparableError("density components differ and no common grid exists in d > 1")
    lo, hi = diff.space.lower[0], diff.space.upper[0]
    brk = sorted({p for d, _ in comps for p in d.axis_breakpoints(0) if lo < p < hi})

    def absdiff(t):
        return abs(sum(v * float(d.axis_pdf(0, t)) for d, v in comps))

    edges = [lo] + brk + [hi]
    for s, e in zip(edges[:-1], edges[1:]):
        val, _ = _quad.quad(absdiff, s, e, epsabs=1e-13, epsrel=1e-10, limit=400)
        total += val
    return total


# ---------------------------------------------------------------------------
# measurable maps


class LabelMap:
    """A map out of a finite space given by a table ``{label: image}``."""

    def __init__(self, domain: SampleSpace, codomain: SampleSpace, table):
        if not domain.is_finite:
            raise TypeError("LabelMap needs a finite domain")
        if isinstance(table, dict):
            table = {freeze_label(k): v for k, v in table.items()}
            images = [table[lab] for lab in domain.labels]
        else:
            images = list(table)
            if len(images) != domain.size:
                raise ValueError("table length differs from the domain size")
        self.domain, self.codomain = domain, codomain
        self.images = [codomain.point(freeze_label(v)) for v in images]

    def __call__(self, x):
        return self.images[self.domain.index(x)]

    def index_map(self) -> np.ndarray:
        """Codomain index of each domain label (finite codomain only)."""
        return np.array([self.codomain.index(v) for v in self.images], dtype=int)


class AffineMap:
    """``x ↦ A x + b`` between euclidean spaces; ``A`` may be a vector (diagonal)."""

    def __init__(self, domain: SampleSpace, codomain: SampleSpace, matrix, shift):
        self.domain, self.codomain = domain, codomain
        m = np.asarray(matrix, dtype=float)
        self.diagonal = m.ndim <= 1
        self.matrix = np.broadcast_to(m, (domain.dim,)).copy() if self.diagonal else m
        self.shift = np.broadcast_to(np.asarray(shift, dtype=float), (codomain.dim,)).copy()
        if self.diagonal and domain.dim != codomain.dim:
            raise SpaceMismatchError("diagonal affine maps need equal dimensions")

    def apply(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.domain.dim)
        return pts * self.matrix + self.shift if self.diagonal else pts @ self.matrix.T + self.shift

    def __call__(self, x):
        return self.apply(self.domain.point(x))[0]


class CoordinateMap:
    """An arbitrary euclidean map given by a vectorised function ``(n, d) -> (n, e)``."""

    def __init__(self, domain, codomain, fn: Callable, samples: int = DEFAULT_PUSH_SAMPLES, seed=0):
        self.domain, self.codomain, self.fn = domain, codomain, fn
        self.samples, self.seed = int(samples), seed

    def apply(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.domain.dim)
        return np.asarray(self.fn(pts), dtype=float).reshape(pts.shape[0], self.codomain.dim)

    def __call__(self, x):
        return self.apply(self.domain.point(x))[0]


class PartitionMap:
    """Sends each point to the codomain label of the cell containing it."""

    def __init__(self, domain: SampleSpace, codomain: SampleSpace, cells: Sequence[Region]):
        if not codomain.is_finite or len(cells) != codomain.size:
            raise ValueError("need one cell per codomain label")
        for c in cells:
            domain.check_same(c.space, "partition cells and domain")
        self.domain, self.codomain, self.cells = domain, codomain, list(cells)

    @classmethod
    def intervals(cls, domain: SampleSpace, cuts: Sequence[float], labels=None):
        """Partition of an interval at the interior ``cuts``; the last cell is closed."""
        edges = [domain.lower[0], *cuts, domain.upper[0]]
        n = len(edges) - 1
        codomain = SampleSpace.finite(labels if labels is not None else range(n))
        cells = [Region.of_boxes(domain, [Box((edges[i],), (edges[i + 1],), closed=(i == n - 1))])
                 for i in range(n)]
        return cls(domain, codomain, cells)

    def cell_indices(self, pts) -> np.ndarray:
        if self.domain.is_finite:
            pts = list(pts)
            idx = np.full(len(pts), -1)
        else:
            pts = np.asarray(pts, dtype=float).reshape(-1, self.domain.dim)
            idx = np.full(pts.shape[0], -1)
        for j, c in enumerate(self.cells):
            hit = c.contains(pts)
            if np.any(hit & (idx >= 0)):
                raise ValueError("partition cells overlap")
            idx[hit] = j
        if np.any(idx < 0):
            raise OutsideSpaceError("a point falls in no partition cell")
        return idx

    def __call__(self, x):
        p = [x] if self.domain.is_finite else self.domain.point(x)[None, :]
        return self.codomain.labels[int(self.cell_indices(p)[0])]


def pushforward_measure(kappa, mu: Measure, seed=None) -> Measure:
    """Image measure ``κ_* μ``.

    Atoms move exactly. Densities are binned by partition maps, transformed
    exactly by diagonal affine maps, and otherwise replaced by a seeded atom
    cloud (the result is then flagged ``approximate``).
    """
    kappa.domain.check_same(mu.space, "map domain and measure")
    cod = kappa.codomain
    if isinstance(kappa, PartitionMap):
        vec = np.zeros(cod.size)
        if mu.space.is_finite:
            idx = kappa.cell_indices(mu.space.labels)
            np.add.at(vec, idx, mu.vector)
        else:
            if mu._w.size:
                np.add.at(vec, kappa.cell_indices(mu._locs), mu._w)
            for dens, v in mu._dens:
                cell_mass = np.array([c.density_mass(dens) for c in kappa.cells])
                if abs(cell_mass.sum() - 1.0) > 1e-10:
                    raise OutsideSpaceError("partition cells do not cover the density support")
                vec += v * cell_mass
        return Measure(cod, vector=vec, signed=mu.signed, approximate=mu.approximate)
    if isinstance(kappa, LabelMap):
        if cod.is_finite:
            vec = np.zeros(cod.size)
            np.add.at(vec, kappa.index_map(), mu.vector)
            return Measure(cod, vector=vec, signed=mu.signed, approximate=mu.approximate)
        locs = np.array(kappa.images).reshape(-1, cod.dim)
        return Measure(cod, locs=locs, weights=mu.vector, signed=mu.signed, approximate=mu.approximate)
    if isinstance(kappa, (AffineMap, CoordinateMap)):
        locs = kappa.apply(mu._locs) if mu._w.size else np.zeros((0, cod.dim))
        weights = [mu._w]
        locs_all = [locs]
        dens_out = []
        approx = mu.approximate
        for j, (dens, v) in enumerate(mu._dens):
            if isinstance(kappa, AffineMap) and kappa.diagonal:
                dens_out.append((dens.affine(kappa.matrix, kappa.shift), v))
                continue
            base = seed if seed is not None else getattr(kappa, "seed", 0)
            gen = as_lineage(base).child(j).generator()
            n = getattr(kappa, "samples", DEFAULT_PUSH_SAMPLES)
            locs_all.append(kappa.apply(dens.sample(gen, n)))
            weights.append(np.full(n, v / n))
            approx = True
        locs = np.concatenate(locs_all)
        if locs.shape[0]:
            cod.points(locs)
        return Measure(cod, locs=locs, weights=np.concatenate(weights), densities=dens_out,
                       signed=mu.signed, approximate=approx)
    raise TypeError(f"unsupported map descriptor {type(kappa).__name__}")


def identity_map(space: SampleSpace):
    if space.is_finite:
        return LabelMap(space, space, list(space.labels))
    return AffineMap(space, space, np.ones(space.dim), np.zeros(space.dim))


def jsonable(v):
    return _jsonable(v)
