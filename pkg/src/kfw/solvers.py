"""Outer loops: FW, kFW (fixed and adaptive k), limited-memory variants,
away-step and pairwise FW, all sharing one stopping and tracing contract."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .apg import ApgConfig, apg_solve, line_search, polish_face_qp, polish_simplex_qp
from .certificates import support_size
from .errors import ParameterError, UnsupportedError
from .linalg import inner
from .objective import RestrictedObjective
from .sets import AtomMemory, vertex_decomposition

__all__ = [
    "ALGORITHMS",
    "SolverConfig",
    "TraceRow",
    "SolveTrace",
    "ActiveSet",
    "stop_check",
    "run_fw",
    "run_kfw",
    "run_kfw_adaptive",
    "run_limited_memory",
    "run_away",
    "run_pairwise",
    "solve",
]

ALGORITHMS = ("fw", "kfw", "kfw_adaptive", "lfw", "lkfw", "away", "pairwise")

CSV_COLUMNS = ("iter", "elapsed_s", "objective", "fw_gap", "rel_change",
               "k_used", "support_size", "kloo_s", "kds_s")


@dataclass(frozen=True)
class SolverConfig:
    """Outer-loop settings.

    ``k_max`` of ``None`` caps adaptive growth at the set's largest valid k;
    ``memory`` of ``None`` means ``k - 1`` for the limited-memory variants.
    """

    algorithm: str = "kfw"
    k: int = 1
    max_iter: int = 1000
    rel_change_tol: float = 1e-6
    fw_gap_tol: float = 0.0
    growth: float = 2.0
    k_max: int | None = None
    memory: int | None = None
    seed: int = 0
    line_search: str = "auto"
    apg: ApgConfig = field(default_factory=ApgConfig)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"unknown algorithm {self.algorithm!r}")
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if self.max_iter < 0:
            raise ParameterError("max_iter must be nonnegative")
        if self.rel_change_tol < 0 or self.fw_gap_tol < 0:
            raise ParameterError("tolerances must be nonnegative")
        if not self.growth > 1.0:
            raise ParameterError("growth factor must exceed 1")
        if self.k_max is not None and self.k_max < 1:
            raise ParameterError("k_max must be positive")
        if self.memory is not None and self.memory < 0:
            raise ParameterError("memory must be nonnegative")

    @property
    def memory_size(self):
        return self.k - 1 if self.memory is None else self.memory


class TraceRow(NamedTuple):
    iter: int
    elapsed_s: float
    objective: float
    fw_gap: float
    rel_change: float
    k_used: int
    support_size: int
    kloo_s: float
    kds_s: float


@dataclass
class SolveTrace:
    rows: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    algorithm: str = ""

    def append(self, row):
        self.rows.append(row)

    @property
    def iterations(self):
        return self.rows[-1].iter if self.rows else 0

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def objectives(self):
        return self.column("objective")

    @property
    def gaps(self):
        return self.column("fw_gap")

    @property
    def k_history(self):
        return [r.k_used for r in self.rows[1:]]

    @property
    def kloo_seconds(self):
        return float(sum(r.kloo_s for r in self.rows))

    @property
    def kds_seconds(self):
        return float(sum(r.kds_s for r in self.rows))

    @property
    def total_seconds(self):
        return self.rows[-1].elapsed_s if self.rows else 0.0


def stop_check(trace, config):
    """Return ``(stop, reason)`` from the last recorded row."""
    if not trace.rows:
        raise ParameterError("stop_check needs at least one recorded iteration")
    last = trace.rows[-1]
    if config.fw_gap_tol > 0 and last.fw_gap <= config.fw_gap_tol:
        return True, "fw_gap"
    if last.iter >= 1 and last.rel_change < config.rel_change_tol:
        return True, "rel_change"
    if last.iter >= config.max_iter:
        return True, "max_iter"
    return False, ""


class _Runner:
    """Shared bookkeeping: objective/gap evaluation, timing and trace rows."""

    def __init__(self, problem, config):
        self.problem = problem
        self.obj = problem.objective
        self.fset = problem.feasible_set
        self.cfg = config
        self.trace = SolveTrace(algorithm=config.algorithm)
        self.t0 = time.perf_counter()
        self.x = problem.start()
        if not self.fset.contains(self.x, 1e-8):
            raise ParameterError("start point is not feasible")
        self.f, self.g = self.obj.value_and_gradient(self.x)
        self._record(0, math.nan, 0, 0.0, 0.0)

    def _record(self, it, rel, k_used, kloo_s, kds_s):
        gap = inner(self.g, self.x) - self.fset.linear_min(self.g)
        row = TraceRow(it, time.perf_counter() - self.t0, float(self.f), float(gap),
                       float(rel), int(k_used), support_size(self.fset, self.x),
                       float(kloo_s), float(kds_s))
        self.trace.append(row)

    def accept(self, it, x_new, k_used, kloo_s, kds_s, f_new=None, g_new=None):
        """Move to ``x_new`` unless it raises the objective; record the row."""
        if f_new is None:
            f_new, g_new = self.obj.value_and_gradient(x_new)
        f_old = self.f
        if f_new <= f_old:
            self.x, self.f, self.g = x_new, f_new, g_new
        rel = abs(f_old - self.f) / max(abs(f_old), 1e-300)
        self._record(it, rel, k_used, kloo_s, kds_s)

    def done(self):
        stop, reason = stop_check(self.trace, self.cfg)
        if stop:
            self.trace.stop_reason = reason
            self.trace.converged = reason in ("rel_change", "fw_gap")
        return stop

    def finish(self):
        return self.x, self.trace

    def direction_search(self, param):
        """Solve the restricted problem warm-started at the current iterate."""
        t = time.perf_counter()
        restricted = RestrictedObjective(self.obj, param)
        res = apg_solve(restricted, param.project, self.cfg.apg, param.theta0())
        blocks = param.simplex_blocks()
        if blocks is not None:
            theta = polish_simplex_qp(restricted, res.theta, blocks)
        else:
            theta = polish_face_qp(restricted, res.theta, param)
        x_new = param.map(theta)
        return x_new, time.perf_counter() - t


def run_fw(problem, config=None):
    """Frank-Wolfe with line search."""
    cfg = config or SolverConfig(algorithm="fw")
    run = _Runner(problem, cfg)
    it = 0
    while not run.done():
        it += 1
        t = time.perf_counter()
        v = run.fset.loo(run.g)
        kloo_s = time.perf_counter() - t
        t = time.perf_counter()
        d = v - run.x
        eta = line_search(run.obj, run.x, d, 1.0, cfg.line_search, grad=run.g)
        x_new = run.x + eta * d
        kds_s = time.perf_counter() - t
        run.accept(it, x_new, 1, kloo_s, kds_s)
    return run.finish()


def _kfw_step(run, k):
    t = time.perf_counter()
    out = run.fset.kloo(run.g, k)
    kloo_s = time.perf_counter() - t
    param = run.fset.build_ds(run.x, out)
    x_new, kds_s = run.direction_search(param)
    return x_new, kloo_s, kds_s


def run_kfw(problem, config=None):
    """kFW: k-best oracle followed by a direction search over the result."""
    cfg = config or SolverConfig(algorithm="kfw")
    k = cfg.k
    if k > problem.feasible_set.max_k():
        raise ParameterError(f"k={k} exceeds the largest valid k "
                             f"{problem.feasible_set.max_k()} for this set")
    run = _Runner(problem, cfg)
    it = 0
    while not run.done():
        it += 1
        x_new, kloo_s, kds_s = _kfw_step(run, k)
        run.accept(it, x_new, k, kloo_s, kds_s)
    return run.finish()


def run_kfw_adaptive(problem, config=None):
    """kFW whose k grows by ``growth`` while the relative decrease improves.

    At the step leaving ``x_2`` k is multiplied once unconditionally; after
    that it keeps growing as long as the latest relative decrease beats the
    previous one, and is frozen for good the first time it does not.  k is
    rounded up and capped at ``k_max`` (default: the set's largest valid k).
    """
    cfg = config or SolverConfig(algorithm="kfw_adaptive")
    cap = problem.feasible_set.max_k()
    if cfg.k_max is not None:
        cap = min(cap, cfg.k_max)
    k = min(cfg.k, cap)
    run = _Runner(problem, cfg)
    fvals = [run.f]
    inc = True
    t = 0
    while not run.done():
        if t == 2:
            k = min(cap, math.ceil(cfg.growth * k))
        elif t > 2 and inc:
            dec_now = (fvals[t - 1] - fvals[t]) / max(abs(fvals[t - 1]), 1e-300)
            dec_prev = (fvals[t - 2] - fvals[t - 1]) / max(abs(fvals[t - 2]), 1e-300)
            if dec_now > dec_prev:
                k = min(cap, math.ceil(cfg.growth * k))
            else:
                inc = False
        t += 1
        x_new, kloo_s, kds_s = _kfw_step(run, k)
        run.accept(t, x_new, k, kloo_s, kds_s)
        fvals.append(run.f)
    return run.finish()


def run_limited_memory(problem, config=None, variant=None):
    """FW/kFW that also searches over the most recent LOO vertices.

    ``lfw`` calls the plain LOO once per step; ``lkfw`` calls the k-best
    oracle.  Either way the search runs over the hull of the iterate, the
    memory of past LOO vertices and the new atoms (``2k - 1`` directions for
    ``lkfw`` with the default memory ``k - 1``).  Polytopes only.
    """
    cfg = config or SolverConfig(algorithm=variant or "lfw")
    variant = variant or cfg.algorithm
    if variant not in ("lfw", "lkfw"):
        raise ParameterError(f"unknown limited-memory variant {variant!r}")
    fset = problem.feasible_set
    if not fset.is_polytope:
        raise UnsupportedError("limited-memory variants need a vertex-representable set")
    mem = AtomMemory(cfg.memory_size)
    run = _Runner(problem, cfg)
    it = 0
    while not run.done():
        it += 1
        t = time.perf_counter()
        if variant == "lfw":
            key, v = fset.loo_atom(run.g)
            keys, pts = [key], [v]
        else:
            keys, pts = fset.vertex_kloo(run.g, cfg.k)
            keys, pts = list(keys), list(pts)
            key, v = keys[0], pts[0]
        kloo_s = time.perf_counter() - t
        param = fset.build_hull(run.x, mem.keys() + keys, mem.points() + pts)
        x_new, kds_s = run.direction_search(param)
        mem.push(key, v, it)
        run.accept(it, x_new, len(keys), kloo_s, kds_s)
    return run.finish()


class ActiveSet:
    """Convex weights over keyed vertices representing the iterate."""

    prune_tol = 1e-12

    def __init__(self, items):
        self.points = {}
        self.weights = {}
        for key, v, w in items:
            self.add(key, v, w)
        self.normalize()

    def add(self, key, v, w):
        if key in self.weights:
            self.weights[key] += w
        else:
            self.points[key] = np.asarray(v, dtype=float)
            self.weights[key] = float(w)

    def scale(self, factor):
        for key in self.weights:
            self.weights[key] *= factor

    def normalize(self):
        for key in [k for k, w in self.weights.items() if w <= self.prune_tol]:
            del self.weights[key]
            del self.points[key]
        total = sum(self.weights.values())
        for key in self.weights:
            self.weights[key] /= total

    def __len__(self):
        return len(self.weights)

    def point(self):
        keys = list(self.weights)
        return sum(self.weights[k] * self.points[k] for k in keys)

    def away_atom(self, grad):
        """Active vertex maximizing ``<grad, v>`` (first inserted on ties)."""
        best, best_val = None, -math.inf
        for key, v in self.points.items():
            val = inner(grad, v)
            if val > best_val:
                best, best_val = key, val
        return best


def _active_set_loop(problem, cfg, pairwise):
    fset = problem.feasible_set
    if not fset.is_atomic:
        raise UnsupportedError("away-step and pairwise FW need a set with explicit atoms "
                               "(polytopes or the group-norm ball)")
    run = _Runner(problem, cfg)
    active = ActiveSet(vertex_decomposition(fset, run.x))
    run.x = active.point()
    run.f, run.g = run.obj.value_and_gradient(run.x)
    it = 0
    while not run.done():
        it += 1
        t = time.perf_counter()
        key_v, v = fset.loo_atom(run.g)
        key_a = active.away_atom(run.g)
        kloo_s = time.perf_counter() - t
        t = time.perf_counter()
        a = active.points[key_a]
        w_a = active.weights[key_a]
        if pairwise:
            d = v - a
            eta = line_search(run.obj, run.x, d, w_a, cfg.line_search, grad=run.g)
            active.add(key_v, v, eta)
            active.weights[key_a] -= eta
        else:
            fw_gap = inner(run.g, run.x - v)
            away_gap = inner(run.g, a - run.x)
            if fw_gap >= away_gap or w_a >= 1.0:
                d = v - run.x
                eta = line_search(run.obj, run.x, d, 1.0, cfg.line_search, grad=run.g)
                active.scale(1.0 - eta)
                active.add(key_v, v, eta)
            else:
                max_step = w_a / (1.0 - w_a)
                d = run.x - a
                eta = line_search(run.obj, run.x, d, max_step, cfg.line_search, grad=run.g)
                active.scale(1.0 + eta)
                if eta >= max_step:
                    active.weights[key_a] = 0.0  # drop step
                else:
                    active.weights[key_a] -= eta
        active.normalize()
        x_new = active.point()
        kds_s = time.perf_counter() - t
        run.accept(it, x_new, 1, kloo_s, kds_s)
    run.trace.active_size = len(active)
    return run.finish()


def run_away(problem, config=None):
    """Away-step FW; the away step is taken only when its gap beats the FW gap."""
    return _active_set_loop(problem, config or SolverConfig(algorithm="away"), False)


def run_pairwise(problem, config=None):
    """Pairwise FW: move weight from the away atom to the LOO vertex."""
    return _active_set_loop(problem, config or SolverConfig(algorithm="pairwise"), True)


def solve(problem, config):
    """Dispatch on ``config.algorithm``."""
    alg = config.algorithm
    if alg == "fw":
        return run_fw(problem, config)
    if alg == "kfw":
        return run_kfw(problem, config)
    if alg == "kfw_adaptive":
        return run_kfw_adaptive(problem, config)
    if alg in ("lfw", "lkfw"):
        return run_limited_memory(problem, config, alg)
    if alg == "away":
        return run_away(problem, config)
    if alg == "pairwise":
        return run_pairwise(problem, config)
    raise ParameterError(f"unknown algorithm {alg!r}")


def with_algorithm(config, algorithm, **changes):
    """Copy of ``config`` for another algorithm (convenience for comparisons)."""
    return replace(config, algorithm=algorithm, **changes)
