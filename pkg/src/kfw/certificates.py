"""Optimality and structure certificates: FW gap, sparsity, complementarity
gap, probed quadratic growth and the finite-convergence iteration bound."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParameterError, UnsupportedError
from .linalg import inner, seeded_rng
from .sets import (
    GroupNormBall,
    Hypercube,
    L1Ball,
    NuclearBall,
    ProductSimplices,
    Simplex,
    Spectrahedron,
    VertexPolytope,
)

__all__ = [
    "Certificate",
    "Support",
    "fw_gap",
    "sparsity_measure",
    "support_size",
    "delta_gap",
    "probe_quadratic_growth",
    "t_bound",
    "certify",
    "dilation_slack",
]


@dataclass
class Support:
    """Support descriptor: ``kind`` is coords/signed/groups/subspace/face."""

    kind: str
    r: int
    indices: list = field(default_factory=list)
    basis: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class Certificate:
    r_star: int
    delta: float
    gamma_lower: float
    L_f: float
    D: float
    T_bound: float
    fw_gap: float
    support: dict

    def to_dict(self):
        d = asdict(self)
        for key in ("delta", "gamma_lower", "L_f", "D", "T_bound", "fw_gap"):
            v = d[key]
            d[key] = v if math.isfinite(v) else str(v)
        return d


def fw_gap(problem, x) -> float:
    """``<grad f(x), x - loo(grad f(x))>``; nonnegative on the set, zero at optima."""
    g = problem.objective.gradient(x)
    return inner(g, x) - problem.feasible_set.linear_min(g)


def _rank(values, rank_tol):
    values = np.abs(np.asarray(values))
    if values.size == 0 or values.max() == 0.0:
        return 0
    return int(np.count_nonzero(values > rank_tol * values.max()))


def sparsity_measure(fset, x, rank_tol=1e-8) -> Support:
    """Size of the smallest face containing ``x`` and a descriptor of it.

    Coordinates and groups use ``rank_tol`` as an absolute threshold; spectra
    use it relative to the largest eigen/singular value.  For the hypercube
    ``r`` is the number of vertices of the face (``2**m``) and
    ``extra["fractional"]`` the face dimension ``m``.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(fset, (Simplex, ProductSimplices)):
        idx = np.flatnonzero(np.abs(x) > rank_tol)
        if isinstance(fset, ProductSimplices):
            # vertices of the face = product of per-block support sizes
            r = int(np.prod([np.count_nonzero(np.abs(x[sl]) > rank_tol) for sl in fset.slices]))
            return Support("coords", r, idx.tolist())
        return Support("coords", int(idx.size), idx.tolist())
    if isinstance(fset, L1Ball):
        idx = np.flatnonzero(np.abs(x) > rank_tol)
        signs = np.sign(x[idx]).astype(int)
        return Support("signed", int(idx.size), list(zip(idx.tolist(), signs.tolist())))
    if isinstance(fset, Hypercube):
        frac = np.flatnonzero((x > rank_tol) & (x < 1.0 - rank_tol))
        return Support("face", 2 ** int(frac.size), frac.tolist(),
                       extra={"fractional": int(frac.size)})
    if isinstance(fset, GroupNormBall):
        norms = fset.group_norms(x)
        live = np.flatnonzero(norms > rank_tol)
        return Support("groups", int(live.size), live.tolist())
    if isinstance(fset, Spectrahedron):
        w, V = np.linalg.eigh(0.5 * (x + x.T))
        r = _rank(w, rank_tol)
        order = np.argsort(w)[::-1][:r]
        return Support("subspace", r, basis=V[:, order])
    if isinstance(fset, NuclearBall):
        U, s, _ = np.linalg.svd(x, full_matrices=False)
        r = _rank(s, rank_tol)
        return Support("subspace", r, basis=U[:, :r])
    if isinstance(fset, VertexPolytope):
        face = _minimal_face(fset, x, rank_tol)
        return Support("face", len(face), face)
    raise UnsupportedError(f"no sparsity measure for {type(fset).__name__}")


def _minimal_face(fset, x, tol):
    # vertex i lies on the minimal face iff some representation of x gives it
    # positive weight; maximize that weight by LP for each vertex
    from scipy.optimize import linprog

    V = fset.vertices
    m = len(V)
    A_eq = np.vstack([V.T, np.ones((1, m))])
    b_eq = np.concatenate([x, [1.0]])
    face = []
    for i in range(m):
        c = np.zeros(m)
        c[i] = -1.0
        res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs")
        if res.status == 0 and -res.fun > max(tol, 1e-9):
            face.append(i)
    return face


def support_size(fset, x, rank_tol=1e-8) -> int:
    """Cheap per-iteration support count used in traces.

    Same as :func:`sparsity_measure` except the hypercube reports fractional
    coordinates and vertex polytopes report nonzero coordinates (no LPs).
    """
    if isinstance(fset, Hypercube):
        x = np.asarray(x)
        return int(np.count_nonzero((x > rank_tol) & (x < 1.0 - rank_tol)))
    if isinstance(fset, VertexPolytope):
        return int(np.count_nonzero(np.abs(x) > rank_tol))
    return sparsity_measure(fset, x, rank_tol).r


def delta_gap(fset, grad, support) -> float:
    """Strict-complementarity gap from the gradient at the solution.

    ``support`` is a :class:`Support` or an integer ``r``.  Vertex sets sort
    the vertex inner products ascending and return ``s[r] - s[r-1]``; groups
    use block norms, the spectrahedron eigenvalues and the nuclear ball
    singular values.  Returns ``inf`` when no complementary atom exists.
    """
    r = support.r if isinstance(support, Support) else int(support)
    if r < 1:
        raise ParameterError("support size must be positive")
    g = np.asarray(grad, dtype=float)
    if isinstance(fset, Simplex):
        s = np.sort(g)
    elif isinstance(fset, L1Ball):
        s = np.sort(np.concatenate([fset.alpha * g, -fset.alpha * g]))
    elif isinstance(fset, VertexPolytope):
        s = np.sort(fset.vertices @ g)
    elif isinstance(fset, Hypercube):
        if fset.n > 20:
            raise UnsupportedError("hypercube gap needs vertex enumeration (n <= 20)")
        bits = (np.arange(2 ** fset.n)[:, None] >> np.arange(fset.n)) & 1
        s = np.sort(bits @ g)
    elif isinstance(fset, GroupNormBall):
        norms = np.sort(fset.group_norms(g))[::-1]
        if r >= norms.size:
            return math.inf
        return float(fset.alpha * (norms[r - 1] - norms[r]))
    elif isinstance(fset, Spectrahedron):
        mu = np.linalg.eigvalsh(0.5 * (g + g.T))
        if r >= mu.size:
            return math.inf
        return float(mu[r] - mu[r - 1])
    elif isinstance(fset, NuclearBall):
        sig = np.linalg.svd(g, compute_uv=False)
        if r >= sig.size:
            return math.inf
        return float(fset.alpha * (sig[r - 1] - sig[r]))
    else:
        raise UnsupportedError(f"no gap formula for {type(fset).__name__}")
    if r >= s.size:
        return math.inf
    return float(s[r] - s[r - 1])


def probe_quadratic_growth(problem, x_star, samples=1000, seed=0, segments=20) -> float:
    """Lower estimate of the quadratic-growth constant around ``x_star``.

    Minimum of ``(f(x) - f(x_star)) / ||x - x_star||^2`` over seeded feasible
    samples and points on the segments from a few samples towards
    ``x_star``.  This is an empirical probe, not a certificate.
    """
    rng = seeded_rng(seed)
    obj = problem.objective
    f0 = obj.value(x_star)
    pts = problem.feasible_set.sample(rng, samples)
    cands = list(pts)
    for p in pts[:segments]:
        for s in (0.5, 0.1, 0.01):
            cands.append(x_star + s * (p - x_star))
    best = math.inf
    for x in cands:
        d2 = float(np.sum((x - x_star) ** 2))
        if d2 <= 1e-20:
            continue
        best = min(best, (obj.value(x) - f0) / d2)
    return best


def t_bound(L, D, gamma, delta) -> float:
    """``4 L^3 D^4 / (gamma delta^2)``; ``inf`` unless gamma, delta > 0."""
    if not (gamma > 0 and delta > 0) or not math.isfinite(gamma * delta):
        return math.inf
    return 4.0 * L**3 * D**4 / (gamma * delta**2)


def certify(problem, x, rank_tol=1e-8, samples=1000, seed=0) -> Certificate:
    """Assemble the full certificate at a (near) optimal point ``x``."""
    fset = problem.feasible_set
    g = problem.objective.gradient(x)
    sup = sparsity_measure(fset, x, rank_tol)
    try:
        delta = delta_gap(fset, g, sup) if sup.r >= 1 else math.nan
    except UnsupportedError:
        delta = math.nan
    gamma = probe_quadratic_growth(problem, x, samples=samples, seed=seed)
    L = problem.objective.lipschitz
    D = fset.diameter()
    desc = {"kind": sup.kind, "indices": [list(i) if isinstance(i, tuple) else i
                                          for i in sup.indices]}
    desc.update(sup.extra)
    return Certificate(
        r_star=int(sup.r),
        delta=float(delta),
        gamma_lower=float(gamma),
        L_f=float(L),
        D=float(D),
        T_bound=float(t_bound(L, D, gamma, delta)),
        fw_gap=float(fw_gap(problem, x)),
        support=desc,
    )


def dilation_slack(U1, S1, V1, U2, S2, V2) -> float:
    """``||U1S1U1'-U2S2U2'||^2 + ||V1S1V1'-V2S2V2'||^2 - 2||U1S1V1'-U2S2V2'||^2``.

    With orthonormal ``U_i``, ``V_i`` and symmetric ``S_i`` this equals
    ``-2 ||S2^(1/2) (U2'U1 - V2'V1) S1^(1/2)||^2`` for positive semidefinite
    ``S_i``, so it is never positive and vanishes only when the two
    factorizations rotate their left and right bases alike.
    """
    a = U1 @ S1 @ U1.T - U2 @ S2 @ U2.T
    b = V1 @ S1 @ V1.T - V2 @ S2 @ V2.T
    c = U1 @ S1 @ V1.T - U2 @ S2 @ V2.T
    return float(np.sum(a * a) + np.sum(b * b) - 2.0 * np.sum(c * c))
