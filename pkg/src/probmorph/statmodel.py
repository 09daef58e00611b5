"""Statistical models, morphisms between them and sufficiency checks on finite spaces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpaceMismatchError
from .kernel import Kernel, compose, pushforward_p
from .measure import LabelMap, Measure, total_variation
from .spaces import SampleSpace

__all__ = [
    "StatModel",
    "SufficiencyReport",
    "is_morphism",
    "check_sufficiency",
    "fisher_neyman_check",
    "check_equivalence_pair",
    "dual_sufficiency_check",
    "product_bernoulli_model",
    "random_sufficient_chain",
]

SUFF_TOL = 1e-9


class StatModel:
    """A sample space with a finite family of probability measures on it."""

    def __init__(self, space: SampleSpace, members):
        members = list(members)
        if not members:
            raise ValueError("a statistical model needs at least one member")
        for m in members:
            space.check_same(m.space, "model members and model space")
            if not m.is_probability():
                raise ValueError("model members must be probability measures")
        self.space = space
        self.members = members

    @classmethod
    def from_kernel(cls, kernel: Kernel, params=None) -> "StatModel":
        """The family ``{p_θ}`` of a kernel, over the given parameter points."""
        if params is None:
            params = kernel.domain.labels
        return cls(kernel.codomain, [kernel.at(t) for t in params])

    @classmethod
    def from_vectors(cls, space: SampleSpace, vectors) -> "StatModel":
        return cls(space, [Measure(space, vector=v) for v in vectors])

    def pushforward(self, T: Kernel) -> "StatModel":
        return StatModel(T.codomain, [pushforward_p(T, m) for m in self.members])

    @property
    def is_finite(self) -> bool:
        return self.space.is_finite

    def matrix(self) -> np.ndarray:
        """Members as rows of a ``(members, labels)`` matrix."""
        return np.vstack([m.vector for m in self.members])

    def __len__(self):
        return len(self.members)


@dataclass
class SufficiencyReport:
    verdict: str
    witness: Kernel | None
    max_deviation: float

    @property
    def sufficient(self) -> bool:
        return self.verdict == "sufficient"

    def as_dict(self) -> dict:
        out = {"verdict": self.verdict, "max_deviation": self.max_deviation}
        if self.witness is not None:
            out["witness"] = self.witness.matrix.tolist()
        return out


def is_morphism(T: Kernel, src: StatModel, dst: StatModel, tol: float = SUFF_TOL):
    """Whether ``T_*`` maps every member of ``src`` into ``dst``.

    Returns ``(ok, worst)`` where ``worst`` is the largest distance from an
    image to its nearest ``dst`` member.
    """
    T.domain.check_same(src.space, "kernel domain and source model")
    T.codomain.check_same(dst.space, "kernel codomain and target model")
    worst = 0.0
    for m in src.members:
        img = pushforward_p(T, m)
        worst = max(worst, min(total_variation(img, d) for d in dst.members))
    return worst <= tol, worst


def _conditionals(M: np.ndarray, v: np.ndarray):
    """``W[y, x] = v(x) M[x, y] / (vM)(y)`` and the image ``vM``; NaN rows where undefined."""
    joint = v[:, None] * M
    img = joint.sum(axis=0)
    W = np.full((M.shape[1], M.shape[0]), np.nan)
    pos = img > 0
    W[pos] = (joint[:, pos] / img[pos]).T
    return W, img


def check_sufficiency(T: Kernel, model: StatModel, tol: float = SUFF_TOL) -> SufficiencyReport:
    """Decide sufficiency of ``T`` for a finite model by comparing conditional mappings.

    For each member the conditional ``x | y`` is the componentwise ratio of
    ``T_*(1_{x} μ)`` to ``T_*μ`` on the support of ``T_*μ``; ``T`` is sufficient
    when these agree across members wherever defined. Labels ``y`` that no
    member reaches get a uniform witness row.
    """
    if not (T.domain.is_finite and T.codomain.is_finite and model.is_finite):
        return SufficiencyReport("inconclusive", None, float("nan"))
    T.domain.check_same(model.space, "statistic domain and model")
    M = T.matrix
    ref = np.full((M.shape[1], M.shape[0]), np.nan)
    dev = 0.0
    for v in model.matrix():
        W, _ = _conditionals(M, v)
        fresh = np.isnan(ref[:, 0]) & ~np.isnan(W[:, 0])
        ref[fresh] = W[fresh]
        both = ~np.isnan(W[:, 0])
        if np.any(both):
            dev = max(dev, float(np.max(np.abs(W[both] - ref[both]))))
    unseen = np.isnan(ref[:, 0])
    ref[unseen] = 1.0 / M.shape[0]
    if dev > tol:
        return SufficiencyReport("not-sufficient", None, dev)
    witness = Kernel.from_matrix(T.codomain, T.domain, ref, tol=1e-10)
    return SufficiencyReport("sufficient", witness, dev)


def fisher_neyman_check(model: StatModel, kappa, nu=None, tol: float = SUFF_TOL) -> bool:
    """Factorisation test ``dμ_θ/dν (x) = h(κ(x), θ) g(x)``.

    ``kappa`` is a deterministic kernel or a :class:`LabelMap`. Densities are
    taken against ``nu`` (counting measure by default). On each fiber of
    ``κ`` the density vectors of all members must be proportional; this is
    checked by comparing their fiber-normalised shapes, with all-zero fiber
    restrictions compared by support only.
    """
    if isinstance(kappa, Kernel):
        if not kappa.is_deterministic:
            raise ValueError("the Fisher-Neyman check needs a deterministic statistic")
        fiber_of = np.argmax(kappa.matrix, axis=1)
        n_fibers = kappa.codomain.size
    elif isinstance(kappa, LabelMap):
        fiber_of = kappa.index_map()
        n_fibers = kappa.codomain.size
    else:
        raise TypeError("kappa must be a deterministic kernel or a LabelMap")
    F = model.matrix()
    ref = np.ones(model.space.size) if nu is None else np.asarray(
        nu.vector if isinstance(nu, Measure) else nu, dtype=float)
    if np.any((ref == 0) & np.any(F > 0, axis=0)):
        raise ValueError("the reference measure does not dominate the family")
    dens = np.divide(F, ref, out=np.zeros_like(F), where=ref > 0)
    for y in range(n_fibers):
        cols = fiber_of == y
        block = dens[:, cols]
        sums = block.sum(axis=1)
        live = sums > 0
        if live.sum() < 2:
            continue
        shapes = block[live] / sums[live, None]
        if np.max(np.abs(shapes - shapes[0])) > tol:
            return False
    return True


def check_equivalence_pair(T1: Kernel, T2: Kernel, mA: StatModel, mB: StatModel,
                           tol: float = SUFF_TOL) -> bool:
    """Whether ``T2∘T1`` fixes every member of ``mA`` and ``T1∘T2`` every member of ``mB``."""
    if T1.domain != mA.space or T1.codomain != mB.space:
        raise SpaceMismatchError("T1 must map mA's space to mB's space")
    if T2.domain != mB.space or T2.codomain != mA.space:
        raise SpaceMismatchError("T2 must map mB's space back to mA's space")
    there_back = compose(T2, T1)
    back_there = compose(T1, T2)
    ok_a = all(total_variation(pushforward_p(there_back, m), m) <= tol for m in mA.members)
    ok_b = all(total_variation(pushforward_p(back_there, m), m) <= tol for m in mB.members)
    return ok_a and ok_b


def dual_sufficiency_check(T: Kernel, p: Kernel, model: StatModel, tol: float = SUFF_TOL) -> bool:
    """Check ``(T_*μ)(y) p(y)(x) = T(x)(y) μ(x)`` for all labels and members.

    This says ``p`` reproduces the joint law of ``(x, T(x))``, so ``p`` is in
    turn sufficient for ``T_*`` of the family with ``T`` as its conditional.
    """
    T.domain.check_same(model.space, "statistic domain and model")
    if p.domain != T.codomain or p.codomain != T.domain:
        raise SpaceMismatchError("p must map T's codomain back to T's domain")
    M, P = T.matrix, p.matrix
    for v in model.matrix():
        img = v @ M
        lhs = img[:, None] * P
        rhs = (v[:, None] * M).T
        if np.max(np.abs(lhs - rhs)) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# model builders


def product_bernoulli_model(thetas, n: int = 2) -> StatModel:
    """``{Bern(θ)^n}`` on ``{0,1}^n`` (labels are tuples)."""
    import itertools

    labels = list(itertools.product((0, 1), repeat=n))
    space = SampleSpace.finite(labels)
    members = []
    for t in thetas:
        vec = []
        for lab in labels:
            w = 1.0
            for bit in lab:
                w = w * (t if bit else 1.0 - t)
            vec.append(w)
        members.append(Measure(space, vector=vec))
    return StatModel(space, members)


def _random_surjection(gen, n: int, m: int) -> np.ndarray:
    idx = np.concatenate([np.arange(m), gen.integers(0, m, size=n - m)])
    return gen.permutation(idx)


def random_sufficient_chain(gen: np.random.Generator, sizes=(6, 4, 2), members: int = 3):
    """A random finite model with statistics ``X -> Y -> Z`` that are both sufficient.

    Densities are built as ``h(κ2(κ1(x)), θ) k(κ1(x)) g(x)`` so the
    factorisation holds by construction. Returns ``(model, T1, T2)``.
    """
    nx, ny, nz = sizes
    X, Y, Z = (SampleSpace.finite(range(k)) for k in sizes)
    k1 = _random_surjection(gen, nx, ny)
    k2 = _random_surjection(gen, ny, nz)
    g = gen.uniform(0.1, 1.0, nx)
    k = gen.uniform(0.1, 1.0, ny)
    vecs = []
    for _ in range(members):
        h = gen.uniform(0.1, 1.0, nz)
        v = h[k2[k1]] * k[k1] * g
        vecs.append(v / v.sum())
    model = StatModel.from_vectors(X, vecs)
    T1 = Kernel.from_map(LabelMap(X, Y, [int(i) for i in k1]))
    T2 = Kernel.from_map(LabelMap(Y, Z, [int(i) for i in k2]))
    return model, T1, T2
