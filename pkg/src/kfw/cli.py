"""Command-line experiment runner.

Subcommands
-----------
run       run one solver of a config (``--solver i``, default 0)
compare   run every solver of a config, optionally in parallel
certify   compute certificates at a point stored in a Matrix Market file
gen       write a generated problem's data to disk

Exit codes: 0 success, 1 configuration error, 2 solver error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import inspect
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bench import BENCHMARKS, make_benchmark
from .certificates import certify
from .config import EXTERNAL_PROBLEM, load_config
from .errors import ConfigError, KfwError, NumericalError, ParameterError
from .linalg import DenseOperator, IdentityOperator, MaskOperator, RightMultiplyOperator
from .mmio import load_external_matrix, read_matrix, write_matrix
from .objective import CompositeObjective, QuadraticOuter
from .problem import Problem
from .sets import L1Ball, Simplex
from .solvers import CSV_COLUMNS, solve

__all__ = ["main", "build_problem", "run_one", "run_compare", "write_trace"]

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def build_problem(spec) -> Problem:
    """Instantiate the problem described by a :class:`ProblemSpec`."""
    if spec.name == EXTERNAL_PROBLEM:
        p = spec.params
        A = load_external_matrix(p["matrix"])
        if not isinstance(A, DenseOperator):
            raise ParameterError("problem.matrix must hold a matrix, not a vector")
        b = np.ravel(read_matrix(p["rhs"]))
        if b.size != A.shape[0]:
            raise ParameterError(f"rhs has {b.size} entries, matrix has {A.shape[0]} rows")
        n = A.shape[1]
        fset = L1Ball(n, p.get("radius", 1.0)) if p["set"] == "l1" else Simplex(n)
        return Problem(CompositeObjective(QuadraticOuter(b), A), fset, name="external")
    params = dict(spec.params)
    if "seed" in inspect.signature(BENCHMARKS[spec.name]).parameters:
        params["seed"] = spec.seed
    return make_benchmark(spec.name, spec.paper_scale, **params)


def write_trace(path, trace):
    """One row per recorded iteration; floats written with ``repr``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in trace.rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def run_one(problem_spec, solver_spec, out_dir, certify_point=True, samples=200):
    """Solve one (problem, solver) pair in isolation and write its trace.

    Never raises for solver failures: errors are returned in the summary
    under ``"error"`` together with ``"error_kind"``.
    """
    summary = {"solver": solver_spec.name, "algorithm": solver_spec.algorithm,
               "k": solver_spec.k, "error": None, "error_kind": None}
    try:
        problem = build_problem(problem_spec)
        summary["problem"] = problem.name
        summary["problem_hash"] = problem.fingerprint()
        x, trace = solve(problem, solver_spec.to_solver_config())
    except KfwError as exc:
        summary["error"] = str(exc)
        summary["error_kind"] = "numerical" if isinstance(exc, NumericalError) else "solver"
        return summary
    trace_file = Path(out_dir) / f"trace_{solver_spec.name}.csv"
    write_trace(trace_file, trace)
    kds = trace.kds_seconds
    summary.update(
        trace_file=trace_file.name,
        final_objective=float(trace.objectives[-1]),
        iterations=int(trace.iterations),
        converged=bool(trace.converged),
        stop_reason=trace.stop_reason,
        total_seconds=float(trace.total_seconds),
        kloo_kds_ratio=float(trace.kloo_seconds / kds) if kds > 0 else None,
        certificate=None,
    )
    if certify_point:
        try:
            summary["certificate"] = certify(problem, x, samples=samples).to_dict()
        except KfwError as exc:
            summary["certificate"] = {"error": str(exc)}
    return _json_safe(summary)


def _run_one_star(args):
    return run_one(*args)


def run_compare(cfg, solver_indices=None):
    """Run the configured solvers and write ``summary.json``; returns exit code."""
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    indices = list(range(len(cfg.solvers))) if solver_indices is None else solver_indices
    jobs = [(cfg.problem, cfg.solvers[i], str(out), cfg.output.certify, cfg.output.samples)
            for i in indices]
    if cfg.output.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.output.jobs, len(jobs))) as pool:
            runs = list(pool.map(_run_one_star, jobs))
    else:
        runs = [_run_one_star(j) for j in jobs]
    summary = {
        "problem": cfg.problem.name,
        "problem_seed": cfg.problem.seed,
        "problem_hash": next((r["problem_hash"] for r in runs if "problem_hash" in r), None),
        "runs": runs,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    kinds = {r["error_kind"] for r in runs}
    for r in runs:
        if r["error"]:
            print(f"{r['solver']}: {r['error']}", file=sys.stderr)
        else:
            print(f"{r['solver']}: objective {r['final_objective']!r} after "
                  f"{r['iterations']} iterations ({r['stop_reason']})")
    if "numerical" in kinds or "solver" in kinds:
        return EXIT_SOLVER
    return EXIT_OK


def _apply_overrides(cfg, args):
    if getattr(args, "out", None):
        cfg.output.dir = args.out
    if getattr(args, "jobs", None) is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg.output.jobs = args.jobs
    if getattr(args, "seed", None) is not None:
        cfg.problem.seed = args.seed
    if getattr(args, "paper_scale", False):
        cfg.problem.paper_scale = True
    return cfg


def _cmd_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    if not 0 <= args.solver < len(cfg.solvers):
        raise ConfigError(f"--solver {args.solver} out of range (have {len(cfg.solvers)})")
    return run_compare(cfg, [args.solver])


def _cmd_compare(args):
    cfg = _apply_overrides(load_config(args.config), args)
    return run_compare(cfg)


def _cmd_certify(args):
    cfg = _apply_overrides(load_config(args.config), args)
    try:
        problem = build_problem(cfg.problem)
    except KfwError as exc:
        raise ConfigError(str(exc)) from exc
    x = read_matrix(args.point)
    shape = problem.start().shape
    if x.size != int(np.prod(shape)):
        raise ConfigError(f"point has {x.size} entries, problem needs {int(np.prod(shape))}")
    x = x.reshape(shape)
    if not problem.feasible_set.contains(x, 1e-8):
        print("warning: point is not feasible to 1e-8", file=sys.stderr)
    cert = certify(problem, x, samples=cfg.output.samples)
    out = {"problem": problem.name, "problem_hash": problem.fingerprint(),
           "objective": problem.objective.value(x), "certificate": cert.to_dict()}
    print(json.dumps(_json_safe(out), indent=2, sort_keys=True))
    return EXIT_OK


def _operator_data(A):
    if isinstance(A, DenseOperator):
        return {"A": A.values}
    if isinstance(A, MaskOperator):
        return {"mask": A.mask.astype(float)}
    if isinstance(A, RightMultiplyOperator):
        return {"X": A.X}
    if isinstance(A, IdentityOperator):
        return {}
    return {}


def _cmd_gen(args):
    cfg = _apply_overrides(load_config(args.config), args)
    try:
        problem = build_problem(cfg.problem)
    except KfwError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    obj = problem.objective
    files = {}
    arrays = dict(_operator_data(obj.A))
    if isinstance(obj.outer, QuadraticOuter):
        arrays["b"] = obj.outer.b
    if obj.c is not None:
        arrays["c"] = obj.c
    arrays["x0"] = problem.start()
    if problem.x_star is not None:
        arrays["x_star"] = problem.x_star
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=float)
        arr = arr if arr.ndim <= 2 else arr.reshape(arr.shape[0], -1)
        write_matrix(out / f"{name}.mtx", arr)
        files[name] = f"{name}.mtx"
    meta = {
        "problem": problem.name,
        "problem_hash": problem.fingerprint(),
        "operator": type(obj.A).__name__,
        "variable_shape": list(problem.start().shape),
        "set": {"type": type(problem.feasible_set).__name__,
                "params": _json_safe(problem.feasible_set.params())},
        "f_star": problem.f_star,
        "files": files,
        "spec": _json_safe(dataclasses.asdict(cfg.problem)),
    }
    with open(out / "problem.json", "w") as fh:
        json.dump(_json_safe(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(files)} matrices to {out}")
    return EXIT_OK


def _parser():
    p = argparse.ArgumentParser(prog="kfw", description="kFW and Frank-Wolfe experiment runner")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="run configuration file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, help="problem seed override")
        sp.add_argument("--paper-scale", action="store_true",
                        help="use the full experiment sizes")

    sp = sub.add_parser("run", help="run a single solver")
    common(sp)
    sp.add_argument("--solver", type=int, default=0, help="solver index in the config")
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("compare", help="run every configured solver")
    common(sp)
    sp.add_argument("--jobs", type=int, help="parallel runs (overrides output.jobs)")
    sp.set_defaults(func=_cmd_compare)

    sp = sub.add_parser("certify", help="certificates at a given point")
    common(sp)
    sp.add_argument("--point", required=True, help="Matrix Market file with the point")
    sp.set_defaults(func=_cmd_certify)

    sp = sub.add_parser("gen", help="write problem data to disk")
    common(sp)
    sp.set_defaults(func=_cmd_gen)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
