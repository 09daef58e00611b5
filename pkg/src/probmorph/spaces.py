"""Sample spaces, measurable regions and simple functions."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import OutsideSpaceError, SpaceMismatchError

__all__ = ["SampleSpace", "Box", "Region", "SimpleFunction", "freeze_label"]


def freeze_label(label):
    """Make a label hashable (JSON lists become tuples)."""
    if isinstance(label, list):
        return tuple(freeze_label(v) for v in label)
    return label


@dataclass(frozen=True)
class SampleSpace:
    """A finite label set with the discrete metric, or an axis-aligned box in R^d.

    Euclidean points are handled as float arrays of shape ``(d,)``; scalars are
    accepted when ``d == 1``.
    """

    kind: str
    labels: tuple = ()
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.kind == "finite":
            labels = tuple(freeze_label(v) for v in self.labels)
            if not labels:
                raise ValueError("a finite space needs at least one label")
            index = {lab: i for i, lab in enumerate(labels)}
            if len(index) != len(labels):
                raise ValueError("finite labels must be pairwise distinct")
            object.__setattr__(self, "labels", labels)
            object.__setattr__(self, "_index", index)
        elif self.kind == "euclidean":
            lo = tuple(float(v) for v in np.atleast_1d(self.lower))
            hi = tuple(float(v) for v in np.atleast_1d(self.upper))
            if len(lo) == 0 or len(lo) != len(hi):
                raise ValueError("euclidean bounds need matching, non-empty lower/upper")
            if any(not (h > l) for l, h in zip(lo, hi)):
                raise ValueError("euclidean bounds must define a non-empty box")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        else:
            raise ValueError(f"unknown sample space kind {self.kind!r}")

    @classmethod
    def finite(cls, labels: Iterable) -> "SampleSpace":
        return cls("finite", labels=tuple(labels))

    @classmethod
    def euclidean(cls, lower, upper) -> "SampleSpace":
        return cls("euclidean", lower=lower, upper=upper)

    @classmethod
    def interval(cls, a: float, b: float) -> "SampleSpace":
        return cls("euclidean", lower=(a,), upper=(b,))

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def size(self) -> int:
        if not self.is_finite:
            raise TypeError("euclidean spaces have no size")
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 0 if self.is_finite else len(self.lower)

    @property
    def lower_array(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def upper_array(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def diameter(self) -> float:
        if self.is_finite:
            return 1.0 if len(self.labels) > 1 else 0.0
        return float(np.linalg.norm(self.upper_array - self.lower_array))

    def index(self, label) -> int:
        try:
            return self._index[freeze_label(label)]
        except (KeyError, TypeError):
            raise OutsideSpaceError(f"{label!r} is not a label of this space") from None

    def point(self, x):
        """Validate ``x`` and return its canonical form (label or float array)."""
        if self.is_finite:
            self.index(x)
            return freeze_label(x)
        p = np.atleast_1d(np.asarray(x, dtype=float))
        if p.shape != (self.dim,):
            raise OutsideSpaceError(f"point {x!r} does not have dimension {self.dim}")
        if np.any(p < self.lower_array) or np.any(p > self.upper_array) or np.any(np.isnan(p)):
            raise OutsideSpaceError(f"point {x!r} lies outside {self.lower}..{self.upper}")
        return p

    def points(self, xs) -> np.ndarray:
        """Validate a batch of euclidean points, returning shape ``(n, d)``."""
        p = np.asarray(xs, dtype=float)
        if p.ndim == 1 and self.dim == 1:
            p = p[:, None]
        p = p.reshape(-1, self.dim)
        if np.any(p < self.lower_array) or np.any(p > self.upper_array) or np.any(np.isnan(p)):
            raise OutsideSpaceError("points lie outside the sample space")
        return p

    def contains(self, x) -> bool:
        try:
            self.point(x)
        except OutsideSpaceError:
            return False
        return True

    def distance(self, x, y) -> float:
        if self.is_finite:
            return 0.0 if self.index(x) == self.index(y) else 1.0
        return float(np.linalg.norm(self.point(x) - self.point(y)))

    def whole(self) -> "Region":
        if self.is_finite:
            return Region.of_labels(self, self.labels)
        return Region.of_boxes(self, [Box(self.lower, self.upper, closed=True)])

    def check_same(self, other: "SampleSpace", what: str = "operands"):
        if self != other:
            raise SpaceMismatchError(f"{what} live on different sample spaces")

    def describe(self) -> dict:
        if self.is_finite:
            return {"kind": "finite", "labels": [_jsonable(v) for v in self.labels]}
        return {"kind": "euclidean", "bounds": [[l, h] for l, h in zip(self.lower, self.upper)]}


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower, upper)``; ``closed=True`` includes the upper face."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    closed: bool = False

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or any(h < l for l, h in zip(lo, hi)):
            raise ValueError(f"invalid box {lo}..{hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        lo, hi = np.array(self.lower), np.array(self.upper)
        above = np.all(pts >= lo, axis=1)
        below = np.all(pts <= hi, axis=1) if self.closed else np.all(pts < hi, axis=1)
        return above & below


class Region:
    """A measurable region: a finite label subset or a finite union of boxes."""

    __slots__ = ("space", "labels", "boxes", "_cells")

    def __init__(self, space: SampleSpace, labels=None, boxes=None):
        self.space = space
        if space.is_finite:
            if boxes:
                raise ValueError("boxes make no sense on a finite space")
            idx = sorted({space.index(v) for v in (labels or ())})
            self.labels = tuple(idx)
            self.boxes = ()
        else:
            if labels:
                raise ValueError("label sets make no sense on a euclidean space")
            boxes = tuple(boxes or ())
            lo, hi = space.lower_array, space.upper_array
            for b in boxes:
                if b.dim != space.dim:
                    raise SpaceMismatchError("box dimension differs from the space")
                if np.any(np.array(b.lower) < lo) or np.any(np.array(b.upper) > hi):
                    raise OutsideSpaceError(f"box {b.lower}..{b.upper} leaves the space")
            self.labels = ()
            self.boxes = boxes
        self._cells = None

    @classmethod
    def of_labels(cls, space, labels):
        return cls(space, labels=labels)

    @classmethod
    def of_boxes(cls, space, boxes):
        return cls(space, boxes=boxes)

    @classmethod
    def interval(cls, space, a, b, closed=False):
        return cls(space, boxes=[Box((a,), (b,), closed)])

    def indicator_vector(self) -> np.ndarray:
        v = np.zeros(self.space.size)
        v[list(self.labels)] = 1.0
        return v

    def contains(self, pts) -> np.ndarray:
        if self.space.is_finite:
            idx = np.array([self.space.index(p) for p in pts], dtype=int)
            return np.isin(idx, self.labels)
        pts = np.asarray(pts, dtype=float).reshape(-1, self.space.dim)
        out = np.zeros(pts.shape[0], dtype=bool)
        for b in self.boxes:
            out |= b.contains(pts)
        return out

    def disjoint_cells(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Split the union of boxes into disjoint grid cells (lower, upper)."""
        if self._cells is None:
            if len(self.boxes) <= 1:
                cells = [(np.array(b.lower), np.array(b.upper)) for b in self.boxes]
            else:
                d = self.space.dim
                edges = [np.unique([v for b in self.boxes for v in (b.lower[a], b.upper[a])])
                         for a in range(d)]
                cells = []
                for idx in itertools.product(*[range(len(e) - 1) for e in edges]):
                    lo = np.array([edges[a][i] for a, i in enumerate(idx)])
                    hi = np.array([edges[a][i + 1] for a, i in enumerate(idx)])
                    centre = 0.5 * (lo + hi)
                    if any(b.contains(centre[None, :])[0] for b in self.boxes):
                        cells.append((lo, hi))
            self._cells = cells
        return self._cells

    def density_mass(self, density) -> float:
        return float(sum(density.box_mass(lo, hi) for lo, hi in self.disjoint_cells()))

    def describe(self):
        if self.space.is_finite:
            return {"labels": [_jsonable(self.space.labels[i]) for i in self.labels]}
        return {"boxes": [[list(b.lower), list(b.upper), b.closed] for b in self.boxes]}


class SimpleFunction:
    """A finite linear combination of region indicators."""

    def __init__(self, space: SampleSpace, terms: Sequence[tuple[Region, float]] = ()):
        self.space = space
        terms = tuple((reg, float(c)) for reg, c in terms)
        for reg, _ in terms:
            space.check_same(reg.space, "function regions and the function")
        self.terms = terms

    @classmethod
    def indicator(cls, region: Region, coef: float = 1.0) -> "SimpleFunction":
        return cls(region.space, [(region, coef)])

    @classmethod
    def of_labels(cls, space: SampleSpace, values: dict) -> "SimpleFunction":
        """Tabulated function on a finite space, ``{label: value}``."""
        return cls(space, [(Region.of_labels(space, [lab]), v) for lab, v in values.items()])

    def __add__(self, other: "SimpleFunction") -> "SimpleFunction":
        self.space.check_same(other.space, "summands")
        return SimpleFunction(self.space, self.terms + other.terms)

    def __mul__(self, c: float) -> "SimpleFunction":
        return SimpleFunction(self.space, [(reg, c * v) for reg, v in self.terms])

    __rmul__ = __mul__

    def __call__(self, x):
        if self.space.is_finite:
            return float(self.table()[self.space.index(x)])
        return float(self.evaluate(np.atleast_1d(np.asarray(x, float))[None, :])[0])

    def evaluate(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.space.dim)
        out = np.zeros(pts.shape[0])
        for reg, c in self.terms:
            out += c * reg.contains(pts)
        return out

    def table(self) -> np.ndarray:
        """Values at every label of a finite space."""
        if not self.space.is_finite:
            raise TypeError("only finite-space functions can be tabulated")
        out = np.zeros(self.space.size)
        for reg, c in self.terms:
            out += c * reg.indicator_vector()
        return out

    def sup_norm(self) -> float:
        if self.space.is_finite:
            return float(np.max(np.abs(self.table())))
        d = self.space.dim
        edges = []
        for a in range(d):
            vals = {self.space.lower[a], self.space.upper[a]}
            for reg, _ in self.terms:
                for b in reg.boxes:
                    vals.update((b.lower[a], b.upper[a]))
            edges.append(np.array(sorted(vals)))
        # values are constant on the open grid cells; probe centres and edges
        probes = [np.unique(np.concatenate([e, 0.5 * (e[1:] + e[:-1])])) for e in edges]
        grid = np.array(list(itertools.product(*probes)))
        return float(np.max(np.abs(self.evaluate(grid)))) if grid.size else 0.0
