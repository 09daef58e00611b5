"""Compare the compiled inner loops with the numpy fallback.

Run from the repository root after ``pip install -e .``::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each row times one kernel on identical inputs under both backends and
reports the speedup and the largest absolute difference between outputs.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from probmorph import _pykernels as py

try:
    from probmorph import _ckernels as cy
except ImportError:
    cy = None


def _cases(seed=0):
    gen = np.random.default_rng(seed)
    theta = gen.normal(size=100_000)
    counts = gen.integers(20, 80, size=2_000)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    locs = gen.uniform(size=(offsets[-1], 1))
    w = gen.dirichlet(np.ones(8), size=offsets[-1] // 8 + 1).ravel()[: offsets[-1]]
    sticks = gen.beta(1.0, 2.0, size=4096)
    a = gen.normal(size=200_000)
    return {
        "ndtr_diff": lambda k: k.ndtr_diff(a, a + 0.3),
        "normal_ball_logweights": lambda k: k.normal_ball_logweights(theta, [1.0, 0.4, -0.2], 1e-3,
                                                                      1.0, -20.0, 20.0),
        "cloud_ball_masses": lambda k: k.cloud_ball_masses(offsets, locs, w, [0.5], 0.01),
        "stick_scan": lambda k: k.stick_scan(sticks, 1.0, 1e-300, sticks.size),
    }


def _first(out):
    return np.asarray(out[0] if isinstance(out, tuple) else out, dtype=float)


def run(repeat: int = 5) -> list[dict]:
    rows = []
    for name, fn in _cases().items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=repeat))
        row = {"kernel": name, "python_s": t_py}
        if cy is not None:
            t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=repeat))
            diff = np.max(np.abs(_first(fn(py)) - _first(fn(cy))), initial=0.0)
            row.update(cython_s=t_cy, speedup=t_py / t_cy, max_abs_diff=float(diff))
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args(argv)
    rows = run(args.repeat)
    if cy is None:
        print("compiled kernels not built; timing the fallback only", file=sys.stderr)
    print(f"{'kernel':<24}{'python [ms]':>13}{'cython [ms]':>13}{'speedup':>9}{'max |diff|':>12}")
    for r in rows:
        cyt = f"{1e3 * r['cython_s']:13.3f}" if "cython_s" in r else f"{'-':>13}"
        sp = f"{r['speedup']:9.1f}" if "speedup" in r else f"{'-':>9}"
        df = f"{r['max_abs_diff']:12.2e}" if "max_abs_diff" in r else f"{'-':>12}"
        print(f"{r['kernel']:<24}{1e3 * r['python_s']:13.3f}{cyt}{sp}{df}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
