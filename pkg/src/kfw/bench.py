"""Seeded synthetic benchmark problems.

Desk-scale defaults are a tenth of the published experiment sizes; pass
``paper_scale=True`` to :func:`make_benchmark` for the full sizes.  Radii of
the norm balls are set to the norm of the planted ground truth.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .linalg import (
    DenseOperator,
    IdentityOperator,
    MaskOperator,
    RightMultiplyOperator,
    seeded_rng,
)
from .objective import CompositeObjective, QuadraticOuter
from .problem import Problem
from .sets import GroupNormBall, Hypercube, L1Ball, NuclearBall, Simplex, Spectrahedron, VertexPolytope

__all__ = [
    "gen_lasso",
    "gen_svm",
    "gen_group_lasso",
    "gen_matrix_completion",
    "gen_cone_polygon",
    "gen_hypercube_projection",
    "gen_simplex_projection",
    "gen_planted_simplex",
    "gen_planted_group",
    "gen_planted_spectrahedron",
    "gen_planted_nuclear",
    "polynomial_kernel",
    "svm_decision",
    "make_benchmark",
    "BENCHMARKS",
    "PAPER_SCALE",
]


def _noisy(signal, level, rng):
    # i.i.d. normal noise scaled by a fraction of the signal's std
    return signal + level * np.std(signal) * rng.standard_normal(signal.shape)


def gen_lasso(m=200, n=500, s=20, noise=0.01, seed=0):
    """``min ||Ax - b||^2`` over the l1 ball of radius ``||x_true||_1``."""
    if not 1 <= s <= n:
        raise ParameterError("need 1 <= s <= n")
    rng = seeded_rng(seed)
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    support = np.sort(rng.choice(n, size=s, replace=False))
    x_true[support] = rng.standard_normal(s)
    b = _noisy(A @ x_true, noise, rng) if noise > 0 else A @ x_true
    obj = CompositeObjective(QuadraticOuter(b), DenseOperator(A))
    fset = L1Ball(n, float(np.abs(x_true).sum()))
    meta = {"k_star": s, "x_true": x_true, "seed": seed}
    f_star = 0.0 if noise == 0 else None
    return Problem(obj, fset, name="lasso", f_star=f_star,
                   x_star=x_true if noise == 0 else None, meta=meta)


def polynomial_kernel(X1, X2):
    """``k(x, y) = (x'y + 1)^2`` between the columns of ``X1`` and ``X2``."""
    return (X1.T @ X2 + 1.0) ** 2


def gen_svm(n_samples=200, n_features=20, seed=0, C=10.0, rank=5, train_frac=0.8, noise=0.1):
    """Kernel SVM dual over the simplex.

    Two classes of columns ``U1 V1 + 1`` and ``U2 V2 - 1`` plus noise.  The
    training dual is ``min_{lam in simplex} lam' Q lam`` with
    ``Q = (y y') * K + I / C`` (squared-hinge SVM, kernel constant acting as
    the offset), written as ``||R lam||^2`` with ``Q = R'R`` (Cholesky).
    """
    if n_samples % 2:
        raise ParameterError("n_samples must be even (equal class split)")
    rng = seeded_rng(seed)
    half = n_samples // 2
    X1 = rng.standard_normal((n_features, rank)) @ rng.standard_normal((rank, half)) + 1.0
    X2 = rng.standard_normal((n_features, rank)) @ rng.standard_normal((rank, half)) - 1.0
    X = np.hstack([X1, X2])
    X = X + noise * np.std(X) * rng.standard_normal(X.shape)
    y = np.concatenate([np.ones(half), -np.ones(half)])
    perm = rng.permutation(n_samples)
    n_train = max(2, int(round(train_frac * n_samples)))
    tr, te = perm[:n_train], perm[n_train:]
    Xtr, ytr = X[:, tr], y[tr]
    Q = np.outer(ytr, ytr) * polynomial_kernel(Xtr, Xtr) + np.eye(n_train) / C
    R = np.linalg.cholesky(Q).T
    obj = CompositeObjective(QuadraticOuter(np.zeros(n_train)), DenseOperator(R))
    meta = {"X_train": Xtr, "y_train": ytr, "X_test": X[:, te], "y_test": y[te],
            "C": C, "seed": seed}
    return Problem(obj, Simplex(n_train), name="svm", meta=meta)


def svm_decision(problem, lam, X):
    """Decision values ``sum_i lam_i y_i k(x_i, x)`` for the columns of ``X``."""
    m = problem.meta
    return (lam * m["y_train"]) @ polynomial_kernel(m["X_train"], X)


def gen_group_lasso(p=5, n=200, groups=40, live=4, noise=0.01, seed=0):
    """``min ||W X - Y||_F^2`` over the group ball; groups are columns of ``W``.

    ``W`` is ``p x groups`` with ``live`` nonzero columns and ``X`` is
    ``groups x n`` (``n`` samples).
    """
    if not 1 <= live <= groups:
        raise ParameterError("need 1 <= live <= groups")
    rng = seeded_rng(seed)
    X = rng.standard_normal((groups, n))
    W = np.zeros((p, groups))
    cols = np.sort(rng.choice(groups, size=live, replace=False))
    W[:, cols] = rng.standard_normal((p, live))
    Y = W @ X
    if noise > 0:
        Y = _noisy(Y, noise, rng)
    fset = GroupNormBall.matrix_columns(p, groups, 1.0)
    fset = GroupNormBall.matrix_columns(p, groups, fset.norm(W))
    obj = CompositeObjective(QuadraticOuter(Y.ravel()), RightMultiplyOperator(X, p))
    meta = {"k_star": live, "W_true": W, "live_groups": cols, "seed": seed}
    return Problem(obj, fset, name="group_lasso", f_star=0.0 if noise == 0 else None,
                   x_star=W if noise == 0 else None, meta=meta)


def gen_matrix_completion(n1=100, n2=100, rank=3, obs_frac=0.5, seed=0):
    """Observed-entry least squares over the nuclear ball of radius ``||M||_nuc``."""
    if not 0.0 < obs_frac <= 1.0:
        raise ParameterError("obs_frac must lie in (0, 1]")
    rng = seeded_rng(seed)
    M = rng.standard_normal((n1, rank)) @ rng.standard_normal((rank, n2))
    n_obs = int(round(obs_frac * n1 * n2))
    flat = rng.choice(n1 * n2, size=n_obs, replace=False)
    mask = np.zeros(n1 * n2, dtype=bool)
    mask[flat] = True
    mask = mask.reshape(n1, n2)
    op = MaskOperator(mask)
    obj = CompositeObjective(QuadraticOuter(M[mask]), op)
    alpha = float(np.linalg.svd(M, compute_uv=False).sum())
    meta = {"k_star": rank, "M": M, "mask": mask, "seed": seed}
    return Problem(obj, NuclearBall(n1, n2, alpha), name="matrix_completion",
                   f_star=0.0, meta=meta)


def gen_cone_polygon(n_vertices=200):
    """``x^2 + y^2 + z`` over the hull of an n-gon and the apex ``(0, 0, 1)``.

    Polygon vertices come first, the apex last.  Starts at ``(0, 0, 0.1)``;
    the optimum is the origin with value 0.
    """
    n = int(n_vertices)
    if n < 3:
        raise ParameterError("need at least 3 polygon vertices")
    ang = 2.0 * np.pi * np.arange(1, n + 1) / n
    V = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(n)])
    V = np.vstack([V, [0.0, 0.0, 1.0]])
    A = DenseOperator([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    obj = CompositeObjective(QuadraticOuter(np.zeros(2)), A, c=[0.0, 0.0, 1.0])
    return Problem(obj, VertexPolytope(V), x0=np.array([0.0, 0.0, 0.1]),
                   name="cone_polygon", f_star=0.0, x_star=np.zeros(3),
                   meta={"n_vertices": n})


def gen_hypercube_projection(n=50, n_fractional=10, seed=0):
    """``||x - x0||^2`` over ``[0, 1]^n``; ``x0`` has ``n_fractional`` entries
    uniform in ``(0, 1)`` and the rest equal to 2."""
    if not 0 <= n_fractional <= n:
        raise ParameterError("need 0 <= n_fractional <= n")
    rng = seeded_rng(seed)
    x0 = np.full(n, 2.0)
    x0[:n_fractional] = rng.uniform(size=n_fractional)
    x_star = np.clip(x0, 0.0, 1.0)
    obj = CompositeObjective(QuadraticOuter(x0), IdentityOperator((n,)))
    f_star = float(np.sum((x_star - x0) ** 2))
    return Problem(obj, Hypercube(n), name="hypercube", f_star=f_star, x_star=x_star,
                   meta={"k_star": n_fractional + 1, "target": x0, "seed": seed})


def gen_simplex_projection(p, scale=1.0):
    """``scale * ||x - p||^2`` over the simplex."""
    p = np.asarray(p, dtype=float)
    if scale == 1.0:
        obj = CompositeObjective(QuadraticOuter(p), IdentityOperator(p.shape))
    elif scale > 0:
        w = math.sqrt(scale)
        obj = CompositeObjective(QuadraticOuter(w * p), DenseOperator(w * np.eye(p.size)))
    else:
        raise ParameterError("scale must be positive")
    return Problem(obj, Simplex(p.size), name="simplex_projection")


def gen_planted_simplex(n=50, r=5, seed=0, gap=0.1, level=-0.1):
    """Simplex projection whose solution has ``r`` nonzeros and a known gap.

    The gradient at the solution equals ``level`` on the support and
    ``level + gap_i`` off it with ``gap_i >= gap`` (minimum exactly ``gap``),
    so ``delta = gap``.  ``f(x) = ||x - p||^2`` with ``p = x* - grad / 2``.
    """
    rng = seeded_rng(seed)
    support = np.sort(rng.choice(n, size=r, replace=False))
    x_star = np.zeros(n)
    x_star[support] = rng.dirichlet(np.ones(r))
    grad = np.full(n, float(level))
    off = np.setdiff1d(np.arange(n), support)
    gaps = gap + rng.uniform(0.0, 1.0, size=off.size)
    gaps[0] = gap
    grad[off] += gaps
    p = x_star - grad / 2.0
    prob = gen_simplex_projection(p)
    prob.name = "planted_simplex"
    prob.x_star = x_star
    prob.f_star = float(np.sum((x_star - p) ** 2))
    prob.meta = {"k_star": r, "delta": float(gap), "support": support, "seed": seed}
    return prob


def gen_planted_group(n_groups=12, size=4, live=3, seed=0, lam=1.0, gap=0.2, alpha=1.0):
    """Group-ball projection with ``live`` active groups and dual-norm gap.

    Active groups carry gradient blocks of norm ``lam`` pointing against the
    solution; inactive blocks have norms at most ``lam - gap`` (one exactly),
    so ``delta = alpha * gap``.
    """
    rng = seeded_rng(seed)
    fset = GroupNormBall.contiguous(n_groups, size, alpha)
    act = np.sort(rng.choice(n_groups, size=live, replace=False))
    x_star = np.zeros(n_groups * size)
    grad = np.zeros_like(x_star)
    weights = alpha * rng.dirichlet(np.ones(live))
    for g, w in zip(act, weights):
        u = rng.standard_normal(size)
        u /= np.linalg.norm(u)
        x_star[fset.groups[g]] = w * u
        grad[fset.groups[g]] = -lam * u
    inactive = np.setdiff1d(np.arange(n_groups), act)
    for j, g in enumerate(inactive):
        u = rng.standard_normal(size)
        norm = lam - gap if j == 0 else rng.uniform(0.0, lam - gap)
        grad[fset.groups[g]] = norm * u / np.linalg.norm(u)
    p = x_star - grad / 2.0
    obj = CompositeObjective(QuadraticOuter(p), IdentityOperator(p.shape))
    return Problem(obj, fset, name="planted_group", x_star=x_star,
                   f_star=float(np.sum((x_star - p) ** 2)),
                   meta={"k_star": live, "delta": alpha * gap, "live_groups": act})


def _orthonormal(rng, n, k):
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return Q


def gen_planted_spectrahedron(n=60, rank=2, gap=0.2, seed=0):
    """``||X - P||_F^2`` over the spectrahedron with a rank-``rank`` solution.

    ``grad f(X*)`` has eigenvalue 0 on ``range(X*)`` and eigenvalues at
    least ``gap`` (one exactly) on the complement, so the eigengap is ``gap``.
    """
    rng = seeded_rng(seed)
    Q = _orthonormal(rng, n, n)
    lam_x = rng.dirichlet(np.ones(rank)) if rank > 1 else np.ones(1)
    g = gap + rng.uniform(0.0, 1.0, size=n - rank)
    g[0] = gap
    X_star = (Q[:, :rank] * lam_x) @ Q[:, :rank].T
    G = (Q[:, rank:] * g) @ Q[:, rank:].T
    P = X_star - G / 2.0
    P = 0.5 * (P + P.T)
    obj = CompositeObjective(QuadraticOuter(P.ravel()), IdentityOperator((n, n)))
    return Problem(obj, Spectrahedron(n), name="planted_spectrahedron", x_star=X_star,
                   f_star=float(np.sum((X_star - P) ** 2)),
                   meta={"k_star": rank, "delta": float(gap), "seed": seed})


def gen_planted_nuclear(n1=40, n2=50, rank=3, seed=0, lam=4.0, w_norm=0.25, alpha=1.0):
    """``||X - P||_F^2`` over the nuclear ball with a rank-``rank`` boundary solution.

    ``grad f(X*) = -lam (U V' + W)`` with ``W`` orthogonal to ``U, V`` and
    ``||W||_2 = w_norm < 1``, so the singular gap is ``lam (1 - w_norm)``.
    """
    if not 0.0 <= w_norm < 1.0:
        raise ParameterError("w_norm must lie in [0, 1)")
    rng = seeded_rng(seed)
    Uf = _orthonormal(rng, n1, n1)
    Vf = _orthonormal(rng, n2, n2)
    U, V = Uf[:, :rank], Vf[:, :rank]
    s = alpha * rng.dirichlet(np.ones(rank)) if rank > 1 else np.array([alpha])
    X_star = (U * s) @ V.T
    m = min(n1, n2) - rank
    w = rng.uniform(0.0, w_norm, size=m)
    w[0] = w_norm
    W = (Uf[:, rank:rank + m] * w) @ Vf[:, rank:rank + m].T
    G = -lam * (U @ V.T + W)
    P = X_star - G / 2.0
    obj = CompositeObjective(QuadraticOuter(P.ravel()), IdentityOperator((n1, n2)))
    return Problem(obj, NuclearBall(n1, n2, alpha), name="planted_nuclear", x_star=X_star,
                   f_star=float(np.sum((X_star - P) ** 2)),
                   meta={"k_star": rank, "delta": alpha * lam * (1.0 - w_norm), "seed": seed})


BENCHMARKS = {
    "lasso": gen_lasso,
    "svm": gen_svm,
    "group_lasso": gen_group_lasso,
    "matrix_completion": gen_matrix_completion,
    "cone_polygon": gen_cone_polygon,
    "hypercube": gen_hypercube_projection,
    "planted_simplex": gen_planted_simplex,
    "planted_group": gen_planted_group,
    "planted_spectrahedron": gen_planted_spectrahedron,
    "planted_nuclear": gen_planted_nuclear,
}

# full experiment sizes
PAPER_SCALE = {
    "lasso": {"m": 2000, "n": 5000},
    "svm": {"n_samples": 1000, "n_features": 20},
    "group_lasso": {"p": 10, "n": 1000, "groups": 100, "live": 10},
    "matrix_completion": {"n1": 500, "n2": 500, "rank": 5},
}


def make_benchmark(name, paper_scale=False, **params):
    """Build a benchmark by name; explicit ``params`` override the scale preset."""
    if name not in BENCHMARKS:
        raise ParameterError(f"unknown benchmark {name!r}")
    kwargs = dict(PAPER_SCALE.get(name, {})) if paper_scale else {}
    kwargs.update(params)
    return BENCHMARKS[name](**kwargs)
