"""Pure-Python (numpy) implementations of the inner loops.

Every function here has a twin with the same signature in ``_ckernels.pyx``;
``probmorph._backend`` picks one at import time.
"""
import math

import numpy as np
from scipy.special import erf, erfc

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SIMPSON_WIDTH = 1e-3


def _phi(z):
    return _INV_SQRT2PI * np.exp(-0.5 * z * z)


def ndtr_diff(a, b):
    """Standard normal mass of ``[a, b]`` (elementwise, ``a <= b``), tail-stable."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)
    upper = a > 0
    lower = b < 0
    mid = ~(upper | lower)
    out[upper] = 0.5 * (erfc(a[upper] / _SQRT2) - erfc(b[upper] / _SQRT2))
    out[lower] = 0.5 * (erfc(-b[lower] / _SQRT2) - erfc(-a[lower] / _SQRT2))
    out[mid] = 0.5 * (erf(b[mid] / _SQRT2) - erf(a[mid] / _SQRT2))
    narrow = (b - a) < _SIMPSON_WIDTH
    if np.any(narrow):
        an, bn = a[narrow], b[narrow]
        out[narrow] = (bn - an) / 6.0 * (_phi(an) + 4.0 * _phi(0.5 * (an + bn)) + _phi(bn))
    return np.maximum(out, 0.0)


def normal_ball_logweights(theta, data, r, sd, lo, hi):
    """Sum over data of log P_theta(D_r(x)) for N(theta, sd^2) truncated to [lo, hi]."""
    theta = np.ascontiguousarray(theta, dtype=float)
    out = np.zeros(theta.shape[0])
    z = ndtr_diff((lo - theta) / sd, (hi - theta) / sd)
    log_z = np.log(z)
    for x in np.asarray(data, dtype=float).ravel():
        a = max(x - r, lo)
        b = min(x + r, hi)
        if b <= a:
            return np.full(theta.shape[0], -np.inf)
        with np.errstate(divide="ignore"):
            out += np.log(ndtr_diff((a - theta) / sd, (b - theta) / sd)) - log_z
    return out


def cloud_ball_masses(offsets, locs, weights, x, r):
    """Open-ball mass around ``x`` for each atom cloud stored in CSR layout."""
    offsets = np.asarray(offsets, dtype=np.int64)
    locs = np.asarray(locs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if locs.ndim == 1:
        locs = locs[:, None]
    x = np.asarray(x, dtype=float).ravel()
    d2 = np.sum((locs - x) ** 2, axis=1)
    inside = np.where(d2 < r * r, weights, 0.0)
    n = offsets.shape[0] - 1
    owner = np.repeat(np.arange(n), np.diff(offsets))
    return np.bincount(owner, weights=inside, minlength=n)


def stick_scan(thetas, remainder, eps, limit):
    """Break sticks until the unassigned mass drops below ``eps`` or ``limit`` sticks.

    Returns ``(weights, remainder, used)``; ``weights[i] = thetas[i] * rem_i``
    where ``rem_i`` is the mass left before stick ``i``.
    """
    thetas = np.asarray(thetas, dtype=float)
    weights = np.empty(min(thetas.shape[0], max(limit, 0)))
    used = 0
    rem = float(remainder)
    while used < weights.shape[0] and rem >= eps:
        w = thetas[used] * rem
        weights[used] = w
        rem = rem * (1.0 - thetas[used])
        used += 1
    return weights[:used], rem, used
