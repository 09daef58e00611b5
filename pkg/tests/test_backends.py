import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from probmorph import _backend, _pykernels as py

cy = pytest.importorskip("probmorph._ckernels")

floats = st.floats(-8.0, 8.0)


def test_backend_is_chosen_at_import():
    assert _backend.BACKEND in ("cython", "python")


def test_fallback_is_selected_by_environment():
    env = dict(os.environ, PROBMORPH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import probmorph; print(probmorph.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@given(floats, st.floats(0.0, 6.0))
def test_ndtr_diff_agrees(a, w):
    x = np.array([a]), np.array([a + w])
    assert cy.ndtr_diff(*x)[0] == pytest.approx(py.ndtr_diff(*x)[0], rel=1e-12, abs=1e-300)


def test_ndtr_diff_tails():
    a = np.array([30.0, -31.0, -1.0])
    b = np.array([30.5, -30.0, 1.0])
    for k in (py, cy):
        out = k.ndtr_diff(a, b)
        assert out[0] > 0 and out[1] > 0
        assert out[2] == pytest.approx(0.6826894921370859)


@given(st.lists(floats, min_size=1, max_size=20), st.lists(st.floats(-3, 3), min_size=1, max_size=3),
       st.floats(1e-6, 2.0))
def test_normal_ball_logweights_agree(theta, data, r):
    t = np.array(theta)
    a = py.normal_ball_logweights(t, data, r, 1.0, -20.0, 20.0)
    b = cy.normal_ball_logweights(t, data, r, 1.0, -20.0, 20.0)
    fin = np.isfinite(a)
    assert np.array_equal(fin, np.isfinite(b))
    np.testing.assert_allclose(a[fin], b[fin], rtol=1e-10, atol=1e-10)


@given(st.integers(1, 30), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(1e-4, 0.5))
def test_cloud_ball_masses_agree(n, seed, x, r):
    gen = np.random.default_rng(seed)
    counts = gen.integers(0, 6, size=n)
    off = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    locs = gen.uniform(size=(off[-1], 1))
    w = gen.uniform(size=off[-1])
    a = py.cloud_ball_masses(off, locs, w, [x], r)
    b = cy.cloud_ball_masses(off, locs, w, [x], r)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=64), st.floats(1e-12, 1e-2))
def test_stick_scan_agrees(thetas, eps):
    th = np.array(thetas)
    wa, ra, ua = py.stick_scan(th, 1.0, eps, th.size)
    wb, rb, ub = cy.stick_scan(th, 1.0, eps, th.size)
    assert ua == ub and ra == rb
    assert np.array_equal(np.asarray(wa), np.asarray(wb))
