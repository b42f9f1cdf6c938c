"""Accelerated projected gradient for the direction-search subproblems, plus
the one-dimensional line search used by Frank-Wolfe style steps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError

__all__ = ["ApgConfig", "SubproblemResult", "apg_solve", "line_search", "polish_simplex_qp",
           "polish_face_qp"]


@dataclass(frozen=True)
class ApgConfig:
    """Inner solver settings.

    ``initial_step`` of ``None`` means ``1 / L`` when the restricted problem
    knows its smoothness constant and ``1.0`` otherwise.  An iteration only
    counts towards the ``patience`` quiet iterations if, besides the relative
    objective change being below ``rel_tol``, the projected-gradient step
    ``||z - y||`` is below ``step_tol``; the objective test alone fires too
    early when the objective is large compared to the attainable decrease.
    """

    max_inner: int = 500
    rel_tol: float = 1e-10
    factor: float = 0.5
    initial_step: float | None = None
    restart_on_increase: bool = True
    patience: int = 3
    step_tol: float = 1e-10

    def __post_init__(self):
        if self.max_inner < 1:
            raise ParameterError("max_inner must be positive")
        if not self.rel_tol > 0:
            raise ParameterError("rel_tol must be positive")
        if not 0.0 < self.factor < 1.0:
            raise ParameterError("backtracking factor must lie in (0, 1)")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ParameterError("initial_step must be positive")


@dataclass
class SubproblemResult:
    theta: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _finite(val, where):
    if not np.isfinite(val):
        raise NumericalError(f"non-finite objective encountered in {where}")


def apg_solve(restricted, project, config=None, theta0=None) -> SubproblemResult:
    """FISTA with backtracking and function-value restart.

    Parameters
    ----------
    restricted : RestrictedObjective
        Anything with ``value_and_gradient(theta)``.  An optional
        ``lipschitz_hint`` attribute seeds the step size.
    project : callable
        Euclidean projection onto the parameter domain.
    config : ApgConfig, optional
    theta0 : array_like
        Feasible warm start.

    Notes
    -----
    The accepted sequence is monotone: a candidate that would raise the
    objective is rejected and the momentum reset, so the returned value never
    exceeds the warm start's.  Stops after ``patience`` consecutive accepted
    steps with relative change below ``rel_tol``, at a fixed point of the
    projected step, or after ``max_inner`` iterations.
    """
    cfg = config or ApgConfig()
    theta = np.array(theta0, dtype=float)
    f_theta, _ = restricted.value_and_gradient(theta)
    _finite(f_theta, "warm start")
    f_start = f_theta
    form = restricted.quadratic_form() if hasattr(restricted, "quadratic_form") else None
    if form is not None:
        # track f - f(theta0) exactly; small decreases are lost against a
        # large objective otherwise
        restricted = _Shifted(form[0], form[1], theta)
        f_theta = 0.0

    hint = getattr(restricted, "lipschitz_hint", None)
    if cfg.initial_step is not None:
        L = 1.0 / cfg.initial_step
    elif hint:
        L = float(hint)
    else:
        L = 1.0
    L = max(L, 1e-12)
    grow = 1.0 / cfg.factor

    y = theta.copy()
    t = 1.0
    quiet = 0
    converged = False
    it = 0
    while it < cfg.max_inner:
        it += 1
        f_y, g_y = restricted.value_and_gradient(y)
        _finite(f_y, "extrapolated point")
        while True:
            z = project(y - g_y / L)
            f_z, _ = restricted.value_and_gradient(z)
            d = z - y
            model = f_y + float(g_y @ d) + 0.5 * L * float(d @ d)
            if np.isfinite(f_z) and f_z <= model + 1e-12 * max(abs(f_y), 1.0):
                break
            L *= grow
            if L > 1e300:
                raise NumericalError("step-size backtracking diverged")
        if f_z > f_theta:
            # restart from the last accepted point with no momentum
            if cfg.restart_on_increase and not np.array_equal(y, theta):
                y = theta.copy()
                t = 1.0
                continue
            converged = True
            break
        step = float(np.linalg.norm(z - theta))
        rel = abs(f_theta - f_z) / max(abs(f_start + f_theta), 1e-300)
        theta_prev, theta, f_theta = theta, z, f_z
        if np.linalg.norm(d) <= 1e-15 * (1.0 + np.linalg.norm(y)) or step == 0.0:
            converged = True
            break
        small = float(np.linalg.norm(d)) <= cfg.step_tol * (1.0 + float(np.linalg.norm(y)))
        quiet = quiet + 1 if (rel < cfg.rel_tol and small) else 0
        if quiet >= cfg.patience:
            converged = True
            break
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = theta + ((t - 1.0) / t_next) * (theta - theta_prev)
        t = t_next
    if form is not None:
        f_theta = f_start + f_theta
    return SubproblemResult(theta, float(f_theta), it, converged)


class _Shifted:
    """Quadratic ``t -> f(t) - f(t0)`` evaluated from the difference ``t - t0``."""

    def __init__(self, H, q, t0):
        self.H = H
        self.t0 = np.array(t0, dtype=float)
        self.g0 = H @ self.t0 + q
        self.lipschitz_hint = float(np.linalg.eigvalsh(H)[-1]) if H.size else 0.0

    def value_and_gradient(self, t):
        d = t - self.t0
        Hd = self.H @ d
        return float(self.g0 @ d + 0.5 * d @ Hd), self.g0 + Hd


def line_search(obj, x, d, max_step=1.0, mode="auto", grad=None) -> float:
    """Minimize ``phi(eta) = f(x + eta d)`` over ``eta in [0, max_step]``.

    ``mode`` is ``"exact"`` (closed form, quadratic outer function only),
    ``"bisection"`` (60 halvings on ``phi'``, which is monotone for convex
    ``f``) or ``"auto"`` (exact when available).
    """
    if mode == "auto":
        mode = "exact" if obj.is_quadratic else "bisection"
    g0 = obj.gradient(x) if grad is None else grad
    slope0 = float(np.vdot(g0, d))
    if slope0 >= 0.0:
        return 0.0
    if mode == "exact":
        curv = obj.curvature(d)
        if curv <= 0.0:
            return float(max_step)
        return float(min(max(-slope0 / curv, 0.0), max_step))
    if mode != "bisection":
        raise ParameterError(f"unknown line-search mode {mode!r}")

    def slope(eta):
        return float(np.vdot(obj.gradient(x + eta * d), d))

    if slope(max_step) <= 0.0:
        return float(max_step)
    lo, hi = 0.0, float(max_step)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _face_solve(H, q, S, block_of, nb):
    """Minimize the quadratic on the face ``{theta_S, block sums = 1}``."""
    nS = S.size
    E = np.zeros((nb, nS))
    E[block_of[S], np.arange(nS)] = 1.0
    K = np.zeros((nS + nb, nS + nb))
    K[:nS, :nS] = H[np.ix_(S, S)]
    K[:nS, nS:] = E.T
    K[nS:, :nS] = E
    rhs = np.concatenate([-q[S], np.ones(nb)])
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    if np.linalg.norm(K @ sol - rhs) > 1e-9 * max(1.0, np.linalg.norm(rhs)):
        return None, None
    return sol[:nS], sol[nS:]


def polish_simplex_qp(restricted, theta, blocks, max_rounds=None, tol=1e-12):
    """Refine a quadratic subproblem over a product of simplices exactly.

    Primal active-set iteration started from the first-order solution
    ``theta``: solve the equality-constrained quadratic on the current
    support through its KKT system, step back along the segment when an
    entry would turn negative (dropping it), and otherwise add the entry
    with the most negative reduced cost until none is left.  The result
    replaces ``theta`` only if it does not raise the objective, so the
    first-order solution is never made worse.
    """
    form = restricted.quadratic_form() if hasattr(restricted, "quadratic_form") else None
    if form is None or blocks is None:
        return theta
    H, q, _ = form
    n = theta.size
    nb = len(blocks)
    block_of = np.empty(n, dtype=int)
    for b, blk in enumerate(blocks):
        block_of[blk] = b
    cur = theta.copy()
    active = cur > 0.0
    scale = max(1.0, float(np.abs(q).max()), float(np.abs(H).max()))
    for _ in range(max_rounds or 3 * n + 10):
        S = np.flatnonzero(active)
        if np.unique(block_of[S]).size < nb:
            break
        tS, nu = _face_solve(H, q, S, block_of, nb)
        if tS is None:
            break
        if tS.min() >= 0.0:
            cur = np.zeros(n)
            cur[S] = tS
            red = H @ cur + q + nu[block_of]
            red[S] = 0.0
            j = int(np.argmin(red))
            if red[j] >= -tol * scale:
                break
            active[j] = True
            continue
        # ratio test along cur -> candidate, dropping the blocking entries
        d = -cur[S]
        d += tS
        neg = d < 0.0
        steps = cur[S][neg] / -d[neg]
        t = float(steps.min()) if steps.size else 1.0
        new = cur.copy()
        new[S] = cur[S] + t * d
        new[S[neg][steps <= t]] = 0.0
        new = np.maximum(new, 0.0)
        cur = new
        active = cur > 0.0
    for blk in blocks:
        total = cur[blk].sum()
        if total <= 0.0:
            return theta
        cur[blk] /= total
    # compare through the difference from theta: plain values lose the
    # decrease to rounding near the optimum.  Block means of the gradient
    # are removed since they only see the rounding error of the block sums.
    d = cur - theta
    g = H @ theta + q
    for blk in blocks:
        g[blk] -= g[blk].mean()
    if float(g @ d + 0.5 * d @ (H @ d)) <= 0.0:
        return cur
    return theta


def _eq_qp(H, g, rows, rhs):
    """Minimize ``0.5 d'Hd + g'd`` subject to ``rows @ d = rhs``.

    Returns ``(d, multipliers)`` with ``H d + g + rows' mult = 0``, or
    ``(None, None)`` when the KKT system is inconsistent.
    """
    n = g.size
    m = len(rows)
    K = np.zeros((n + m, n + m))
    K[:n, :n] = H
    if m:
        R = np.asarray(rows, dtype=float)
        K[:n, n:] = R.T
        K[n:, :n] = R
    b = np.concatenate([-g, np.asarray(rhs, dtype=float)])
    sol = np.linalg.lstsq(K, b, rcond=None)[0]
    if np.linalg.norm(K @ sol - b) > 1e-9 * max(1.0, np.linalg.norm(b)):
        return None, None
    return sol[:n], sol[n:]


def polish_face_qp(restricted, theta, param, max_rounds=30):
    """Refine a quadratic subproblem on a budget-constrained domain.

    Sequential quadratic programming on the budget ``c(theta) <= 1`` given by
    ``param.face_constraint``: each round solves the quadratic model with the
    budget's curvature weighted by the current multiplier, on a few candidate
    faces (budget active or not, ``eta`` free or zero).  Candidates are
    projected back onto the domain and kept only if they lower the
    objective, so the input point is never made worse.
    """
    form = restricted.quadratic_form() if hasattr(restricted, "quadratic_form") else None
    face = getattr(param, "face_constraint", None)
    if form is None or face is None or face(theta) is None:
        return theta
    H, q, _ = form
    n = theta.size
    eye = np.eye(n)
    best = np.array(theta, dtype=float)
    # objective measured from the input point, free of cancellation
    base = best.copy()
    g_base = H @ base + q

    def rel_value(t):
        d = t - base
        return float(g_base @ d + 0.5 * d @ (H @ d))

    f_best = 0.0
    mu = None
    for _ in range(max_rounds):
        g = H @ best + q
        a, c, equality, zeros, curv = face(best, g, mu)
        free = np.ones(n, dtype=bool)
        free[zeros] = False
        if mu is None:
            af = a[free]
            mu = max(0.0, -float(af @ g[free]) / max(float(af @ af), 1e-300))
        pins = [eye[i] for i in zeros]
        pin_rhs = [-best[i] for i in zeros]
        slack = c - float(a @ best)
        options = [(True, False), (True, True)]
        if not equality:
            options += [(False, False), (False, True)]
        improved = False
        for budget, drop_eta in options:
            rows, rhs = list(pins), list(pin_rhs)
            Hm = H
            if budget:
                rows.append(a)
                rhs.append(slack)
                if curv is not None:
                    Hm = H + mu * curv
            if drop_eta:
                rows.append(eye[0])
                rhs.append(-best[0])
            d, mult = _eq_qp(Hm, g, rows, rhs)
            if d is None:
                continue
            cand = param.project(best + d)
            f = rel_value(cand)
            if f < f_best:
                best, f_best = cand, f
                if budget:
                    mu = max(0.0, float(mult[len(pins)]))
                improved = True
                break
        if not improved:
            break
    return best
