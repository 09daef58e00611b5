"""Command-line entry point: ``probmorph <subcommand> [options]``.

Every run produces a JSON :class:`RunReport` (to ``--out/<subcommand>.json``
or stdout) and, where relevant, CSV traces next to it. Exit codes: 0 when all
checks pass, 1 when a check fails, 2 for usage or config errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _backend
from .bayes import (ball_posterior, classical_bayes_posterior, consistency_check,
                    exact_finite_posterior, lopital_posterior, RadiusSchedule)
from .config import ConfigError, DirichletConfig, build_space, digest, load
from .dirichlet import (DEFAULT_EPS, dirichlet_suite, dp_project_many, stick_breaking_sample)
from .errors import MethodMismatchError, ProbmorphError
from .kernel import Kernel, compose, laws_check
from .measure import jsonable, pushforward_measure
from .rngstats import moment_summary, moments_match
from .statmodel import check_sufficiency, fisher_neyman_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on its own errors, which matches the contract;
    # raising lets main() keep stdout clean and emit one structured message.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunReport:
    """What a run did and found, with enough context to replay it."""

    command: list
    subcommand: str
    seed: int
    config_digest: str | None
    passed: bool = False
    results: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"command": self.command, "subcommand": self.subcommand, "seed": self.seed,
                "config_digest": self.config_digest, "versions": self.versions,
                "passed": self.passed, "results": _plain(self.results), "timings": self.timings}


def _plain(v):
    """Recursively convert numpy values and tuples to JSON-ready Python objects."""
    if isinstance(v, dict):
        return {str(jsonable(k)) if not isinstance(k, str) else k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, np.generic):
        return v.item()
    return v


def versions() -> dict:
    return {"probmorph": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "backend": _backend.BACKEND}


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# subcommands; each returns (passed, results, {filename: csv_text})


def cmd_posterior(args, report: RunReport):
    cfg, raw = load(args.config, "model")
    report.config_digest = digest(raw)
    method = args.method or cfg.method
    X = build_space(cfg.sample_space)
    try:
        schedule = cfg.radius_schedule(X)
        if args.schedule:
            base = RadiusSchedule.parse(args.schedule, X)
            schedule = RadiusSchedule(base.r0, base.ratio, base.max_steps, schedule.window, schedule.tol)
        if args.tolerance is not None:
            schedule = RadiusSchedule(schedule.r0, schedule.ratio, schedule.max_steps,
                                      schedule.window, args.tolerance)
        schedule.check_space(X)
    except ValueError as e:
        raise ConfigError(str(e), where="schedule") from None

    t0 = time.perf_counter()
    model = cfg.build(args.seed)
    report.timings["build"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    queries = cfg.queries or None
    if method == "exact":
        rep = exact_finite_posterior(model, cfg.data)
    elif method == "classical":
        rep = classical_bayes_posterior(model, cfg.data)
    elif method == "lopital":
        rep = lopital_posterior(model, cfg.data, schedule)
    else:
        rep = ball_posterior(model, cfg.data, schedule, queries=queries)
    report.timings["posterior"] = time.perf_counter() - t0

    results = {"model": model.name, "method": method, "data": cfg.data, **rep.to_dict()}
    files = {}
    checks = {"normalised": rep.singular or abs(float(rep.weights.sum()) - 1.0) <= 1e-10}
    if method == "ball":
        results["schedule"] = schedule.as_dict()
        checks["converged"] = rep.converged or rep.singular
        checks["denominator_monotone"] = rep.denominator_monotone is not False
        files["posterior-trace.csv"] = rep.trace_csv()
        if args.consistency:
            t0 = time.perf_counter()
            results["consistency_mass"] = consistency_check(model, cfg.data, schedule)
            checks["consistency"] = results["consistency_mass"] <= 1e-6
            report.timings["consistency"] = time.perf_counter() - t0
    if method == "lopital":
        checks["dui_verified"] = bool(rep.dui_verified)
    results["checks"] = checks
    return all(checks.values()), results, files


def _faulty_compose(T2: Kernel, T1: Kernel) -> Kernel:
    # mixes the true product with the uniform kernel: a wrong but valid kernel
    M = compose(T2, T1).matrix
    return Kernel.from_matrix(T1.domain, T2.codomain, 0.5 * M + 0.5 / M.shape[1])


def cmd_laws(args, report: RunReport):
    tol = 1e-12 if args.tolerance is None else args.tolerance
    t0 = time.perf_counter()
    rep = laws_check(args.seed, args.sizes, args.trials,
                     compose_fn=_faulty_compose if args.inject_fault else None)
    report.timings["laws"] = time.perf_counter() - t0
    results = {**rep.as_dict(), "tolerance": tol, "fault_injected": bool(args.inject_fault)}
    return rep.passed(tol), results, {}


def _atoms_csv(draws, space) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    qcols = ["q"] if space.is_finite or space.dim == 1 else [f"q{j}" for j in range(space.dim)]
    wr.writerow(["draw", "i", *qcols, "p", "remainder"])
    for d, s in enumerate(draws):
        rem = repr(s.remainder)
        for i, q, p in s.rows():
            if space.is_finite:
                loc = [json.dumps(jsonable(q)) if isinstance(q, tuple) else q]
            else:
                loc = [repr(float(v)) for v in q]
            wr.writerow([d, i, *loc, repr(p), rem])
    return buf.getvalue()


def cmd_dp_sample(args, report: RunReport):
    if args.config:
        cfg, raw = load(args.config, "dirichlet")
        report.config_digest = digest(raw)
    else:
        cfg = DirichletConfig.default()
    if args.cuts is not None:
        try:
            cfg.cuts = [float(c) for c in args.cuts.split(",") if c.strip()]
        except ValueError:
            raise ConfigError(f"bad --cuts {args.cuts!r}") from None
    alpha = cfg.param()
    t0 = time.perf_counter()
    draws = stick_breaking_sample(alpha, args.n, args.seed, truncation=args.truncation, eps=args.eps)
    report.timings["sample"] = time.perf_counter() - t0
    rems = np.array([d.remainder for d in draws])
    sticks = np.array([d.truncation for d in draws])
    results = {"alpha": cfg.to_dict(), "n": args.n, "eps": args.eps, "truncation": args.truncation,
               "max_remainder": float(rems.max()), "mean_sticks": float(sticks.mean()),
               "max_sticks": int(sticks.max())}
    checks = {}
    if args.truncation is None:
        checks["remainder_below_eps"] = bool(np.all(rems < args.eps))
    part = cfg.partition()
    if part is not None:
        cells = dp_project_many(draws, part)
        cell_alpha = pushforward_measure(part, alpha.base).vector
        mean = cell_alpha / cell_alpha.sum()
        var = mean * (1 - mean) / (cell_alpha.sum() + 1)
        proj = []
        for j in range(cells.shape[1]):
            entry = {"cell": j, "expected_mean": float(mean[j]), "expected_variance": float(var[j])}
            if args.n < 2:
                entry["values"] = cells[:, j].tolist()
                proj.append(entry)
                continue
            s = moment_summary(cells[:, j])
            entry.update(s.as_dict())
            if args.n >= 30:
                ok_m, ok_v = moments_match(s, mean[j], var[j], args.k_se)
                entry.update(mean_ok=ok_m, variance_ok=ok_v)
                checks[f"cell{j}_moments"] = ok_m and ok_v
            proj.append(entry)
        results["cells"] = proj
    results["checks"] = checks
    return all(checks.values()), results, {"dp-atoms.csv": _atoms_csv(draws, alpha.space)}


def cmd_dir_check(args, report: RunReport):
    t0 = time.perf_counter()
    reps = dirichlet_suite(args.seed, args.draws)
    report.timings["suite"] = time.perf_counter() - t0
    results = {"draws": args.draws, "reports": [r.as_dict() for r in reps],
               "checks": {r.name: r.passed for r in reps}}
    return all(r.passed for r in reps), results, {}


def cmd_sufficiency(args, report: RunReport):
    cfg, raw = load(args.config, "sufficiency")
    report.config_digest = digest(raw)
    tol = 1e-9 if args.tolerance is None else args.tolerance
    model, T, kappa = cfg.build()
    rep = check_sufficiency(T, model, tol)
    results = {"name": cfg.name, **rep.as_dict(), "tolerance": tol}
    checks = {"sufficient": rep.sufficient}
    if kappa is not None:
        fn = fisher_neyman_check(model, kappa, tol=tol)
        results["fisher_neyman"] = fn
        results["criteria_agree"] = fn == rep.sufficient
    results["checks"] = checks
    return rep.sufficient, results, {}


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="root seed for every random stream (default 0)")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS,
                        help="directory for the JSON report and CSV files (default: report on stdout)")
    common.add_argument("--tolerance", type=_positive_float, default=argparse.SUPPRESS,
                        help="check tolerance: law residual, sufficiency deviation or ball convergence")

    p = _Parser(prog="probmorph", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    sp = sub.add_parser("posterior", parents=[common], help="posterior of a configured model")
    sp.add_argument("config", help="model config (JSON)")
    sp.add_argument("--method", choices=["exact", "classical", "ball", "lopital"],
                    help="overrides the config's method")
    sp.add_argument("--schedule", metavar="R0,RATIO,STEPS", help="radius schedule for the ball method")
    sp.add_argument("--consistency", action="store_true",
                    help="also report the updated marginal mass of the flagged singular region")
    sp.set_defaults(func=cmd_posterior)

    sp = sub.add_parser("laws-check", parents=[common], help="category and monad laws on random kernels")
    sp.add_argument("--sizes", type=_positive_int, default=6, help="maximum finite space size")
    sp.add_argument("--trials", type=_positive_int, default=100)
    sp.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_laws)

    sp = sub.add_parser("dp-sample", parents=[common], help="stick-breaking draws as CSV atom lists")
    sp.add_argument("config", nargs="?", help="Dirichlet config (default α = 2·Uniform[0,1])")
    sp.add_argument("--n", type=_positive_int, default=1, help="number of draws")
    sp.add_argument("--truncation", type=_positive_int, default=None, help="maximum sticks per draw")
    sp.add_argument("--eps", type=_positive_float, default=DEFAULT_EPS, help="stop when the remainder drops below this")
    sp.add_argument("--cuts", help="comma-separated cut points for cell projections")
    sp.add_argument("--k-se", type=_positive_float, default=3.0, help="moment check width in standard errors")
    sp.set_defaults(func=cmd_dp_sample)

    sp = sub.add_parser("dir-check", parents=[common], help="Dirichlet verification suite")
    sp.add_argument("--draws", type=_positive_int, default=10_000)
    sp.set_defaults(func=cmd_dir_check)

    sp = sub.add_parser("sufficiency-check", parents=[common], help="check a statistic for sufficiency")
    sp.add_argument("config", help="sufficiency config (JSON)")
    sp.set_defaults(func=cmd_sufficiency)
    return p


def _fail(kind: str, message: str, code: int = EXIT_USAGE, **extra) -> int:
    err = {"error": kind, "message": message, **extra}
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        return _fail("usage", str(e))
    args.seed = getattr(args, "seed", 0)
    args.out = getattr(args, "out", None)
    args.tolerance = getattr(args, "tolerance", None)

    report = RunReport(["probmorph", *argv], args.subcommand, args.seed, None, versions=versions())
    t0 = time.perf_counter()
    try:
        passed, results, files = args.func(args, report)
    except ConfigError as e:
        return _fail("config", e.detail, where=e.where)
    except MethodMismatchError as e:
        return _fail("method-mismatch", str(e), method=getattr(args, "method", None))
    except (ProbmorphError, ValueError) as e:
        return _fail("invalid-input", str(e))
    report.timings["total"] = time.perf_counter() - t0
    report.passed = bool(passed)
    report.results = results

    text = json.dumps(report.as_dict(), indent=2) + "\n"
    if args.out is not None:
        try:
            for name, body in files.items():
                _atomic_write(args.out / name, body)
            _atomic_write(args.out / f"{args.subcommand}.json", text)
        except OSError as e:
            return _fail("output", str(e))
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
