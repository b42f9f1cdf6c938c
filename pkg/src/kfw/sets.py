"""Feasible sets with linear oracles, k-best oracles and search parametrizations.

Every set exposes

* ``contains(x, tol)`` and ``diameter()``,
* ``loo(grad)``: an exact minimizer of ``<v, grad>`` over the set,
* ``kloo(grad, k)``: the set-specific "k best directions",
* ``build_ds(anchor, out)``: a low-dimensional parametrization of the set
  searched by the k-direction step, warm-started at ``anchor``.

Polytopes additionally give every vertex a hashable key (``loo_atom``,
``vertex_kloo``), which the active-set and limited-memory solvers use to
identify atoms exactly.

New polytopes (matroid bases, Birkhoff, path polytopes, ...) plug in by
subclassing :class:`FeasibleSet` with ``is_polytope = True`` and providing
``loo_atom``/``vertex_kloo``; the hull parametrization then works unchanged.
"""
from __future__ import annotations

import heapq
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, UnsupportedError
from .linalg import SpectralBasis, eig_bottom_k, inner, select_k_smallest, svd_top_k
from .projections import (
    project_group_domain,
    project_simplex,
    project_spectral_nuclear,
    project_spectral_simplex,
)

__all__ = [
    "FeasibleSet",
    "Simplex",
    "L1Ball",
    "Hypercube",
    "ProductSimplices",
    "GroupNormBall",
    "Spectrahedron",
    "NuclearBall",
    "VertexPolytope",
    "Vertices",
    "SignedCoords",
    "Groups",
    "EigBasis",
    "SingularBases",
    "BlockSelections",
    "ConvexHull",
    "GroupSupport",
    "SpectralSimplex",
    "SpectralNuclear",
    "ScaledProductSimplices",
    "AtomMemory",
    "vertex_decomposition",
]


# --------------------------------------------------------------------------
# k-best oracle outputs


@dataclass(frozen=True)
class Vertices:
    keys: tuple
    points: np.ndarray  # shape (k, *set.shape)

    def __len__(self):
        return len(self.keys)


@dataclass(frozen=True)
class SignedCoords:
    indices: np.ndarray
    signs: np.ndarray

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class Groups:
    ids: np.ndarray

    def __len__(self):
        return len(self.ids)


@dataclass(frozen=True)
class EigBasis:
    V: SpectralBasis

    def __len__(self):
        return self.V.k


@dataclass(frozen=True)
class SingularBases:
    U: SpectralBasis
    V: SpectralBasis

    def __len__(self):
        return self.U.k


@dataclass(frozen=True)
class BlockSelections:
    blocks: tuple  # per-block arrays of local indices

    def __len__(self):
        return max(len(b) for b in self.blocks)


# --------------------------------------------------------------------------
# direction-search parametrizations


class _Parametrization:
    dim: int

    def theta0(self):
        t = np.zeros(self.dim)
        t[0] = 1.0
        return t

    def fix_gradient(self, g):
        return g

    def simplex_blocks(self):
        """Index blocks whose entries form probability simplices, if any."""
        return None

    def face_constraint(self, theta, grad=None, mu=None):
        """Linearized budget constraint at ``theta`` for face polishing.

        Returns ``(a, c, equality, zeros, curv)``: near ``theta`` the
        domain's budget reads ``a @ theta <= c`` (``== c`` if ``equality``)
        with ``a`` the budget's gradient and ``curv`` its Hessian (``None``
        when linear); the entries in ``zeros`` are pinned at zero on the
        current face.  Where ``theta`` sits at a kink (a zero block), the
        descent direction ``-grad`` picks the branch; ``mu`` is the budget's
        current multiplier, used to decide whether a zero block should be
        opened.  ``None`` when the domain has no such description.
        """
        return None


class ConvexHull(_Parametrization):
    """``x = eta * w + sum_i lam_i v_i`` over ``(eta, lam)`` in the simplex."""

    def __init__(self, anchor, atoms, keys=None):
        anchor = np.asarray(anchor, dtype=float)
        atoms = np.asarray(atoms, dtype=float).reshape((-1,) + anchor.shape)
        self.shape = anchor.shape
        self.anchor = anchor
        self.atoms = atoms
        self.keys = tuple(keys) if keys is not None else tuple(range(len(atoms)))
        self.B = np.column_stack([anchor.ravel()] + [a.ravel() for a in atoms])
        self.dim = self.B.shape[1]

    @property
    def k(self):
        return self.dim - 1

    def map(self, theta):
        return (self.B @ theta).reshape(self.shape)

    def adjoint(self, G):
        return self.B.T @ np.ravel(G)

    def project(self, theta):
        return project_simplex(theta)

    def simplex_blocks(self):
        return [np.arange(self.dim)]


class GroupSupport(_Parametrization):
    """``x = eta * w + alpha * lam`` with ``lam`` supported on chosen groups.

    Domain ``eta >= 0, eta + sum_g ||lam_g|| <= 1``; ``lam`` is stored
    compactly (concatenated group blocks).
    """

    def __init__(self, anchor, groups, alpha=1.0):
        self.anchor = np.asarray(anchor, dtype=float)
        self.shape = self.anchor.shape
        self.alpha = float(alpha)
        self.groups = [np.asarray(g, dtype=int) for g in groups]
        self.index = (np.concatenate(self.groups) if self.groups
                      else np.zeros(0, dtype=int))
        offsets = np.cumsum([0] + [len(g) for g in self.groups])
        self.local = [np.arange(a, b) for a, b in zip(offsets[:-1], offsets[1:])]
        self.dim = 1 + self.index.size

    def map(self, theta):
        x = theta[0] * self.anchor.ravel()
        x[self.index] += self.alpha * theta[1:]
        return x.reshape(self.shape)

    def adjoint(self, G):
        G = np.ravel(G)
        return np.concatenate([[G @ self.anchor.ravel()], self.alpha * G[self.index]])

    def project(self, theta):
        eta, lam = project_group_domain(theta[0], theta[1:], self.local, 1.0)
        return np.concatenate([[eta], lam])

    def face_constraint(self, theta, grad=None, mu=None):
        a = np.zeros(self.dim)
        a[0] = 1.0
        curv = np.zeros((self.dim, self.dim))
        zeros = []
        release = None
        if grad is not None and self.local:
            gn = np.array([np.linalg.norm(grad[1 + loc]) if not np.any(theta[1 + loc]) else -np.inf
                           for loc in self.local])
            j = int(np.argmax(gn))
            # open the zero block that violates ||grad_g|| <= mu the most
            # (any block when all of them are zero)
            if not np.any(theta[1:]) or (mu is not None and gn[j] > mu * (1.0 + 1e-9)):
                release = j
        for j, loc in enumerate(self.local):
            idx = 1 + loc
            blk = theta[idx]
            kink = not np.any(blk)
            if kink and j == release:
                blk = -grad[idx]
            elif kink:
                zeros.extend(idx.tolist())
                continue
            nrm = np.linalg.norm(blk)
            if nrm == 0.0:
                zeros.extend(idx.tolist())
                continue
            u = blk / nrm
            a[idx] = u
            if not kink:
                # Hessian of ||lam_g||: (I - u u') / ||lam_g||
                curv[np.ix_(idx, idx)] = (np.eye(idx.size) - np.outer(u, u)) / nrm
        return a, 1.0, False, np.asarray(zeros, dtype=int), curv


class SpectralSimplex(_Parametrization):
    """``X = eta * W + alpha * V S V^T`` with ``eta >= 0, S psd, eta + tr S = 1``."""

    def __init__(self, anchor, V, alpha=1.0):
        self.anchor = np.asarray(anchor, dtype=float)
        self.V = np.asarray(V, dtype=float)
        self.alpha = float(alpha)
        self.r = self.V.shape[1]
        self.dim = 1 + self.r * self.r

    def split(self, theta):
        return theta[0], theta[1:].reshape(self.r, self.r)

    def map(self, theta):
        eta, S = self.split(theta)
        return eta * self.anchor + self.alpha * (self.V @ S @ self.V.T)

    def fix_gradient(self, g):
        S = g[1:].reshape(self.r, self.r)
        return np.concatenate([[g[0]], (0.5 * (S + S.T)).ravel()])

    def adjoint(self, G):
        G = np.asarray(G, dtype=float)
        S = self.V.T @ G @ self.V
        S = 0.5 * (S + S.T)
        return np.concatenate([[inner(self.anchor, G)], self.alpha * S.ravel()])

    def project(self, theta):
        eta, S = project_spectral_simplex(theta[0], theta[1:].reshape(self.r, self.r))
        return np.concatenate([[eta], S.ravel()])

    def face_constraint(self, theta, grad=None, mu=None):
        a = np.concatenate([[1.0], np.eye(self.r).ravel()])
        return a, 1.0, True, np.zeros(0, dtype=int), None


class SpectralNuclear(_Parametrization):
    """``X = eta * W + alpha * U S V^T`` with ``eta >= 0, eta + ||S||_nuc <= 1``."""

    def __init__(self, anchor, U, V, alpha=1.0):
        self.anchor = np.asarray(anchor, dtype=float)
        self.U = np.asarray(U, dtype=float)
        self.V = np.asarray(V, dtype=float)
        self.alpha = float(alpha)
        self.r = self.U.shape[1]
        self.dim = 1 + self.r * self.r

    def split(self, theta):
        return theta[0], theta[1:].reshape(self.r, self.r)

    def map(self, theta):
        eta, S = self.split(theta)
        return eta * self.anchor + self.alpha * (self.U @ S @ self.V.T)

    def adjoint(self, G):
        G = np.asarray(G, dtype=float)
        S = self.U.T @ G @ self.V
        return np.concatenate([[inner(self.anchor, G)], self.alpha * S.ravel()])

    def project(self, theta):
        eta, S = project_spectral_nuclear(theta[0], theta[1:].reshape(self.r, self.r))
        return np.concatenate([[eta], S.ravel()])

    def face_constraint(self, theta, grad=None, mu=None):
        # ||S||_nuc = <P Q', S> near S = P diag(s) Q' (polar factor)
        S = theta[1:].reshape(self.r, self.r)
        if grad is not None and np.linalg.matrix_rank(S) < self.r:
            S = S - grad[1:].reshape(self.r, self.r)
        P, sv, Qt = np.linalg.svd(S)
        live = sv > 1e-14 * max(sv.max(initial=0.0), 1.0)
        a = np.concatenate([[1.0], (P[:, live] @ Qt[live]).ravel()])
        curv = None
        if live.all():
            # derivative of the polar factor P Q': E -> P Om Q' with
            # Om_ij = (E~_ij - E~_ji) / (s_i + s_j), E~ = P' E Q
            r = self.r
            den = sv[:, None] + sv[None, :]
            curv = np.zeros((self.dim, self.dim))
            for j in range(r * r):
                E = np.zeros(r * r)
                E[j] = 1.0
                Et = P.T @ E.reshape(r, r) @ Qt.T
                curv[1:, 1 + j] = (P @ ((Et - Et.T) / den) @ Qt).ravel()
        return a, 1.0, False, np.zeros(0, dtype=int), curv


class ScaledProductSimplices(_Parametrization):
    """Product-of-simplices search set that keeps the anchor's off-support mass.

    In block ``j`` the coordinates in the selected set ``I_j`` are free
    nonnegative weights ``a_ij``; the remaining coordinates follow the anchor
    scaled together, ``x_i = beta_j * w_i / s_j`` with
    ``s_j = sum_{i not in I_j} w_i``.  Each block ``(a_j, beta_j)`` lives on
    a plain simplex, so the projection is blockwise.  This is the ``B_{w,I}``
    set with ``beta_j = eta_j * s_j``; blocks with ``s_j = 0`` carry no
    ``beta_j``.  The warm start ``a_ij = w_i, beta_j = s_j`` maps to ``w``.
    """

    def __init__(self, anchor, block_slices, selections):
        self.anchor = np.asarray(anchor, dtype=float)
        self.shape = self.anchor.shape
        self.parts = []
        offset = 0
        for sl, sel in zip(block_slices, selections):
            wb = self.anchor[sl]
            sel = np.unique(np.asarray(sel, dtype=int))
            rest = np.setdiff1d(np.arange(wb.size), sel)
            s = float(wb[rest].sum())
            has_beta = s > 0.0
            size = sel.size + (1 if has_beta else 0)
            self.parts.append(dict(slice=sl, sel=sel, rest=rest, s=s,
                                   has_beta=has_beta, pslice=slice(offset, offset + size)))
            offset += size
        self.dim = offset

    def theta0(self):
        t = np.zeros(self.dim)
        for p in self.parts:
            wb = self.anchor[p["slice"]]
            seg = np.concatenate([wb[p["sel"]], [p["s"]] if p["has_beta"] else []])
            t[p["pslice"]] = seg
        return t

    def map(self, theta):
        x = np.zeros_like(self.anchor)
        for p in self.parts:
            seg = theta[p["pslice"]]
            base = p["slice"].start
            x[base + p["sel"]] = seg[: p["sel"].size]
            if p["has_beta"]:
                x[base + p["rest"]] = seg[-1] * self.anchor[base + p["rest"]] / p["s"]
        return x

    def adjoint(self, G):
        G = np.ravel(G)
        out = np.zeros(self.dim)
        for p in self.parts:
            base = p["slice"].start
            seg = [G[base + p["sel"]]]
            if p["has_beta"]:
                idx = base + p["rest"]
                seg.append([G[idx] @ self.anchor[idx] / p["s"]])
            out[p["pslice"]] = np.concatenate(seg)
        return out

    def simplex_blocks(self):
        return [np.arange(p["pslice"].start, p["pslice"].stop) for p in self.parts]

    def project(self, theta):
        out = np.empty_like(theta)
        for p in self.parts:
            out[p["pslice"]] = project_simplex(theta[p["pslice"]])
        return out


# --------------------------------------------------------------------------
# sets


class FeasibleSet:
    """Common interface; see the module docstring."""

    is_polytope = False
    is_atomic = False
    shape: tuple

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {x.shape}")
        return x

    def max_k(self):
        raise NotImplementedError

    def _check_k(self, k):
        k = int(k)
        if not 1 <= k <= self.max_k():
            raise ParameterError(f"k must lie in [1, {self.max_k()}], got {k}")
        return k

    def linear_min(self, grad):
        """``min_{v in set} <v, grad>``."""
        return inner(self.loo(grad), grad)

    def fw_direction_gap(self, x, grad):
        return inner(grad, np.asarray(x) - self.loo(grad))

    def params(self):
        return {}

    def fingerprint_data(self):
        vals = []
        for v in self.params().values():
            vals.append(np.atleast_1d(np.asarray(v, dtype=float)).ravel())
        return [np.array([sum(map(ord, type(self).__name__))], dtype=float)] + vals

    # polytopes only
    def loo_atom(self, grad):
        raise UnsupportedError(f"{type(self).__name__} is not vertex-representable")

    def vertex_kloo(self, grad, k):
        raise UnsupportedError(f"{type(self).__name__} has no keyed k-best vertices")

    def build_hull(self, anchor, keys, points):
        """Hull search over ``anchor`` and keyed vertices, dropping exact duplicates."""
        anchor = np.asarray(anchor, dtype=float)
        seen = set()
        kept_keys, kept = [], []
        for key, p in zip(keys, points):
            if key in seen or np.array_equal(p, anchor):
                continue
            seen.add(key)
            kept_keys.append(key)
            kept.append(p)
        atoms = np.array(kept).reshape((-1,) + anchor.shape)
        return ConvexHull(anchor, atoms, kept_keys)


def _zero(grad):
    return not np.any(grad)


class Simplex(FeasibleSet):
    """Probability simplex ``{x >= 0, sum x = 1}`` in ``R^n``."""

    is_polytope = True
    is_atomic = True

    def __init__(self, n):
        self.n = int(n)
        if self.n < 1:
            raise ParameterError("n must be positive")
        self.shape = (self.n,)

    def params(self):
        return {"n": self.n}

    def max_k(self):
        return self.n

    def contains(self, x, tol=1e-9):
        x = self._check(x)
        return bool(x.min() >= -tol and abs(x.sum() - 1.0) <= tol)

    def diameter(self):
        return float(np.sqrt(2.0)) if self.n > 1 else 0.0

    def canonical_vertex(self):
        return self.vertex(0)

    def vertex(self, i):
        v = np.zeros(self.n)
        v[i] = 1.0
        return v

    def loo(self, grad):
        return self.vertex(int(np.argmin(self._check(grad))))

    def loo_atom(self, grad):
        i = int(np.argmin(self._check(grad)))
        return i, self.vertex(i)

    def linear_min(self, grad):
        return float(np.min(grad))

    def kloo(self, grad, k):
        k = self._check_k(k)
        sel = select_k_smallest(self._check(grad), k)
        return Vertices(tuple(int(i) for i in sel.indices),
                        np.eye(self.n)[sel.indices])

    def vertex_kloo(self, grad, k):
        out = self.kloo(grad, k)
        return out.keys, out.points

    def atoms(self, out):
        return out.keys, out.points

    def build_ds(self, anchor, out):
        if not isinstance(out, Vertices):
            raise ParameterError("simplex search needs a Vertices oracle output")
        return self.build_hull(anchor, out.keys, out.points)

    def sample(self, rng, size):
        return list(rng.dirichlet(np.ones(self.n), size=size))


class L1Ball(FeasibleSet):
    """``{x : ||x||_1 <= alpha}``; vertices ``+-alpha e_i``."""

    is_polytope = True
    is_atomic = True

    def __init__(self, n, alpha=1.0):
        self.n = int(n)
        self.alpha = float(alpha)
        if self.alpha <= 0:
            raise ParameterError("radius must be positive")
        self.shape = (self.n,)

    def params(self):
        return {"n": self.n, "alpha": self.alpha}

    def max_k(self):
        return 2 * self.n

    def contains(self, x, tol=1e-9):
        return bool(np.abs(self._check(x)).sum() <= self.alpha + tol)

    def diameter(self):
        return 2.0 * self.alpha

    def atom(self, i, s):
        v = np.zeros(self.n)
        v[i] = s * self.alpha
        return v

    def canonical_vertex(self):
        return self.atom(0, 1.0)

    def _candidates(self, grad):
        # candidate 2i is +alpha e_i, candidate 2i+1 is -alpha e_i
        c = np.empty(2 * self.n)
        c[0::2] = self.alpha * grad
        c[1::2] = -self.alpha * grad
        return c

    def loo(self, grad):
        return self.loo_atom(grad)[1]

    def loo_atom(self, grad):
        grad = self._check(grad)
        i = int(np.argmax(np.abs(grad)))
        s = -1.0 if grad[i] > 0 else 1.0
        return (i, int(s)), self.atom(i, s)

    def linear_min(self, grad):
        return -self.alpha * float(np.max(np.abs(grad)))

    def kloo(self, grad, k):
        k = self._check_k(k)
        sel = select_k_smallest(self._candidates(self._check(grad)), k)
        idx = sel.indices // 2
        signs = np.where(sel.indices % 2 == 0, 1, -1)
        return SignedCoords(idx, signs)

    def atoms(self, out):
        keys = tuple((int(i), int(s)) for i, s in zip(out.indices, out.signs))
        points = np.array([self.atom(i, s) for i, s in keys]).reshape(-1, self.n)
        return keys, points

    def vertex_kloo(self, grad, k):
        return self.atoms(self.kloo(grad, k))

    def build_ds(self, anchor, out):
        if not isinstance(out, SignedCoords):
            raise ParameterError("l1-ball search needs a SignedCoords oracle output")
        return self.build_hull(anchor, *self.atoms(out))

    def sample(self, rng, size):
        out = []
        for _ in range(size):
            w = rng.dirichlet(np.ones(self.n)) * rng.uniform() ** (1.0 / self.n)
            out.append(self.alpha * w * rng.choice([-1.0, 1.0], size=self.n))
        return out


class Hypercube(FeasibleSet):
    """Unit hypercube ``[0, 1]^n``."""

    is_polytope = True
    is_atomic = True

    def __init__(self, n):
        self.n = int(n)
        self.shape = (self.n,)

    def params(self):
        return {"n": self.n}

    def max_k(self):
        return 2 ** self.n

    def contains(self, x, tol=1e-9):
        x = self._check(x)
        return bool(x.min() >= -tol and x.max() <= 1.0 + tol)

    def diameter(self):
        return float(np.sqrt(self.n))

    def canonical_vertex(self):
        return np.zeros(self.n)

    @staticmethod
    def key(v):
        return np.asarray(v, dtype=np.int8).tobytes()

    def loo(self, grad):
        return (self._check(grad) < 0).astype(float)

    def loo_atom(self, grad):
        v = self.loo(grad)
        return self.key(v), v

    def linear_min(self, grad):
        return float(np.minimum(grad, 0.0).sum())

    def kloo(self, grad, k):
        """Best-first enumeration of vertices in order of ``<v, grad>``.

        Starting from the minimizer, flipping coordinate ``i`` costs
        ``|grad_i|``.  With the costs sorted ascending, every subset of flips
        is reached exactly once by the two moves "append the next position"
        and "replace the last position by the next one", and both moves never
        decrease the total, so a heap pops subsets in nondecreasing cost.
        """
        grad = self._check(grad)
        k = self._check_k(k)
        base = self.loo(grad)
        cost = np.abs(grad)
        order = np.argsort(cost, kind="stable")
        c = cost[order]
        out = [base]
        heap = []
        if self.n and k > 1:
            heap.append((c[0], (0,)))
        while len(out) < k:
            total, pos = heapq.heappop(heap)
            v = base.copy()
            flip = order[list(pos)]
            v[flip] = 1.0 - v[flip]
            out.append(v)
            last = pos[-1]
            if last + 1 < self.n:
                heapq.heappush(heap, (total + c[last + 1], pos + (last + 1,)))
                heapq.heappush(heap, (total - c[last] + c[last + 1], pos[:-1] + (last + 1,)))
        points = np.array(out)
        return Vertices(tuple(self.key(v) for v in points), points)

    def vertex_kloo(self, grad, k):
        out = self.kloo(grad, k)
        return out.keys, out.points

    def atoms(self, out):
        return out.keys, out.points

    def build_ds(self, anchor, out):
        if not isinstance(out, Vertices):
            raise ParameterError("hypercube search needs a Vertices oracle output")
        return self.build_hull(anchor, out.keys, out.points)

    def sample(self, rng, size):
        return list(rng.uniform(size=(size, self.n)))


class ProductSimplices(FeasibleSet):
    """Product of probability simplices with block sizes ``k_1..k_d``."""

    is_polytope = True
    is_atomic = True

    def __init__(self, sizes):
        self.sizes = [int(s) for s in sizes]
        if not self.sizes or min(self.sizes) < 1:
            raise ParameterError("block sizes must be positive")
        offsets = np.cumsum([0] + self.sizes)
        self.slices = [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]
        self.shape = (int(offsets[-1]),)

    def params(self):
        return {"sizes": self.sizes}

    def max_k(self):
        return max(self.sizes)

    def contains(self, x, tol=1e-9):
        x = self._check(x)
        if x.min() < -tol:
            return False
        return all(abs(x[sl].sum() - 1.0) <= tol for sl in self.slices)

    def diameter(self):
        return float(np.sqrt(2.0 * sum(1 for s in self.sizes if s > 1)))

    def _vertex(self, choice):
        v = np.zeros(self.shape)
        for sl, i in zip(self.slices, choice):
            v[sl.start + i] = 1.0
        return v

    def canonical_vertex(self):
        return self._vertex([0] * len(self.sizes))

    def loo_atom(self, grad):
        grad = self._check(grad)
        choice = tuple(int(np.argmin(grad[sl])) for sl in self.slices)
        return choice, self._vertex(choice)

    def loo(self, grad):
        return self.loo_atom(grad)[1]

    def linear_min(self, grad):
        return float(sum(np.min(grad[sl]) for sl in self.slices))

    def kloo(self, grad, k):
        k = self._check_k(k)
        grad = self._check(grad)
        blocks = tuple(select_k_smallest(grad[sl], min(k, sl.stop - sl.start)).indices
                       for sl in self.slices)
        return BlockSelections(blocks)

    def vertex_kloo(self, grad, k):
        if int(k) != 1:
            raise UnsupportedError("keyed k-best vertices of a product of simplices "
                                   "are only provided for k = 1")
        key, v = self.loo_atom(grad)
        return (key,), v[None]

    def build_ds(self, anchor, out):
        if not isinstance(out, BlockSelections):
            raise ParameterError("product-of-simplices search needs BlockSelections")
        return ScaledProductSimplices(anchor, self.slices, out.blocks)

    def sample(self, rng, size):
        return [np.concatenate([rng.dirichlet(np.ones(s)) for s in self.sizes])
                for _ in range(size)]


class GroupNormBall(FeasibleSet):
    """``{x : sum_g ||x_g||_2 <= alpha}`` for a partition of the coordinates.

    Not a polytope, but its atoms ``alpha * u`` (``u`` a unit vector on one
    group) are explicit, so ``is_atomic`` lets the active-set solvers run on
    it with atoms keyed by their exact values.

    ``shape`` may be a matrix shape; groups then index the flattened array
    (for group Lasso the groups are the columns of ``W``).
    """

    is_atomic = True

    def __init__(self, groups, alpha=1.0, shape=None):
        self.groups = [np.asarray(g, dtype=int).ravel() for g in groups]
        n = sum(g.size for g in self.groups)
        self.shape = tuple(shape) if shape is not None else (n,)
        if int(np.prod(self.shape)) != n:
            raise ParameterError("groups must cover every coordinate")
        allidx = np.sort(np.concatenate(self.groups)) if self.groups else np.zeros(0)
        if not np.array_equal(allidx, np.arange(n)) or any(g.size == 0 for g in self.groups):
            raise ParameterError("groups must be a partition of the coordinates")
        self.alpha = float(alpha)
        if self.alpha <= 0:
            raise ParameterError("radius must be positive")

    @classmethod
    def contiguous(cls, n_groups, group_size, alpha=1.0):
        groups = [np.arange(i * group_size, (i + 1) * group_size) for i in range(n_groups)]
        return cls(groups, alpha)

    @classmethod
    def matrix_columns(cls, rows, cols, alpha=1.0):
        """Groups are the columns of a ``rows x cols`` matrix (row-major)."""
        groups = [np.arange(j, rows * cols, cols) for j in range(cols)]
        return cls(groups, alpha, shape=(rows, cols))

    def params(self):
        return {"shape": self.shape, "alpha": self.alpha,
                "groups": np.concatenate(self.groups),
                "sizes": [g.size for g in self.groups]}

    def max_k(self):
        return len(self.groups)

    def group_norms(self, x):
        flat = np.ravel(x)
        return np.array([np.linalg.norm(flat[g]) for g in self.groups])

    def norm(self, x):
        return float(self.group_norms(x).sum())

    def contains(self, x, tol=1e-9):
        return bool(self.norm(self._check(x)) <= self.alpha + tol)

    def diameter(self):
        return 2.0 * self.alpha

    def canonical_vertex(self):
        v = np.zeros(int(np.prod(self.shape)))
        v[self.groups[0][0]] = self.alpha
        return v.reshape(self.shape)

    def loo(self, grad):
        grad = self._check(grad)
        norms = self.group_norms(grad)
        j = int(np.argmax(norms))
        if norms[j] == 0.0:
            return self.canonical_vertex()
        v = np.zeros(grad.size)
        g = self.groups[j]
        v[g] = -self.alpha * np.ravel(grad)[g] / norms[j]
        return v.reshape(self.shape)

    def linear_min(self, grad):
        return -self.alpha * float(self.group_norms(grad).max())

    def loo_atom(self, grad):
        """LOO atom keyed by its exact bytes (atoms form a continuum)."""
        v = self.loo(grad)
        return (int(self._group_of(v)), v.tobytes()), v

    def _group_of(self, v):
        return int(np.argmax(self.group_norms(v)))

    def kloo(self, grad, k):
        k = self._check_k(k)
        sel = select_k_smallest(-self.group_norms(self._check(grad)), k)
        return Groups(sel.indices)

    def build_ds(self, anchor, out):
        if not isinstance(out, Groups):
            raise ParameterError("group-ball search needs a Groups oracle output")
        return GroupSupport(anchor, [self.groups[i] for i in out.ids], self.alpha)

    def sample(self, rng, size):
        out = []
        for _ in range(size):
            d = rng.standard_normal(int(np.prod(self.shape)))
            norms = self.group_norms(d)
            budget = rng.dirichlet(np.ones(len(self.groups))) * self.alpha * rng.uniform()
            for g, nrm, b in zip(self.groups, norms, budget):
                d[g] *= b / max(nrm, 1e-300)
            out.append(d.reshape(self.shape))
        return out


class Spectrahedron(FeasibleSet):
    """``{X symmetric psd, tr X = 1}`` in ``S^n``."""

    def __init__(self, n):
        self.n = int(n)
        self.shape = (self.n, self.n)

    def params(self):
        return {"n": self.n}

    def max_k(self):
        return self.n

    def contains(self, x, tol=1e-9):
        X = self._check(x)
        if np.abs(X - X.T).max() > tol:
            return False
        if abs(np.trace(X) - 1.0) > tol:
            return False
        return bool(np.linalg.eigvalsh(0.5 * (X + X.T)).min() >= -tol)

    def diameter(self):
        return float(np.sqrt(2.0)) if self.n > 1 else 0.0

    def canonical_vertex(self):
        X = np.zeros(self.shape)
        X[0, 0] = 1.0
        return X

    @staticmethod
    def _sym(G):
        G = np.asarray(G, dtype=float)
        return 0.5 * (G + G.T)

    def loo(self, grad):
        grad = self._check(grad)
        if _zero(grad):
            return self.canonical_vertex()
        v = eig_bottom_k(self._sym(grad), 1).basis[:, 0]
        return np.outer(v, v)

    def linear_min(self, grad):
        return float(np.linalg.eigvalsh(self._sym(grad))[0])

    def kloo(self, grad, k):
        k = self._check_k(k)
        return EigBasis(eig_bottom_k(self._sym(self._check(grad)), k))

    def build_ds(self, anchor, out):
        if not isinstance(out, EigBasis):
            raise ParameterError("spectrahedron search needs an EigBasis oracle output")
        return SpectralSimplex(anchor, out.V.basis)

    def sample(self, rng, size):
        out = []
        for _ in range(size):
            r = int(rng.integers(1, self.n + 1))
            G = rng.standard_normal((self.n, r))
            X = G @ G.T
            out.append(X / np.trace(X))
        return out


class NuclearBall(FeasibleSet):
    """``{X in R^{n1 x n2} : ||X||_nuc <= alpha}``."""

    def __init__(self, n1, n2, alpha=1.0):
        self.n1, self.n2 = int(n1), int(n2)
        self.alpha = float(alpha)
        if self.alpha <= 0:
            raise ParameterError("radius must be positive")
        self.shape = (self.n1, self.n2)

    def params(self):
        return {"n1": self.n1, "n2": self.n2, "alpha": self.alpha}

    def max_k(self):
        return min(self.n1, self.n2)

    def contains(self, x, tol=1e-9):
        X = self._check(x)
        return bool(np.linalg.svd(X, compute_uv=False).sum() <= self.alpha + tol)

    def diameter(self):
        return 2.0 * self.alpha

    def canonical_vertex(self):
        X = np.zeros(self.shape)
        X[0, 0] = self.alpha
        return X

    def loo(self, grad):
        grad = self._check(grad)
        if _zero(grad):
            return self.canonical_vertex()
        U, V = svd_top_k(grad, 1)
        return -self.alpha * np.outer(U.basis[:, 0], V.basis[:, 0])

    def linear_min(self, grad):
        return -self.alpha * float(np.linalg.norm(grad, 2))

    def kloo(self, grad, k):
        k = self._check_k(k)
        U, V = svd_top_k(self._check(grad), k)
        return SingularBases(U, V)

    def build_ds(self, anchor, out):
        if not isinstance(out, SingularBases):
            raise ParameterError("nuclear-ball search needs a SingularBases oracle output")
        return SpectralNuclear(anchor, out.U.basis, out.V.basis, self.alpha)

    def sample(self, rng, size):
        out = []
        for _ in range(size):
            X = rng.standard_normal(self.shape)
            X *= self.alpha * rng.uniform() / np.linalg.svd(X, compute_uv=False).sum()
            out.append(X)
        return out


class VertexPolytope(FeasibleSet):
    """Convex hull of an explicit list of vertices (rows of ``vertices``)."""

    is_polytope = True
    is_atomic = True

    def __init__(self, vertices):
        self.vertices = np.array(vertices, dtype=float)
        if self.vertices.ndim != 2 or len(self.vertices) == 0:
            raise ParameterError("vertices must be a nonempty 2-D array")
        self.shape = (self.vertices.shape[1],)

    def params(self):
        return {"vertices": self.vertices}

    def max_k(self):
        return len(self.vertices)

    def contains(self, x, tol=1e-9):
        from scipy.optimize import linprog

        x = self._check(x)
        m = len(self.vertices)
        # min slack s.t. |V^T lam - x| <= slack, lam in simplex
        n = self.shape[0]
        c = np.zeros(m + 1)
        c[-1] = 1.0
        Vt = self.vertices.T
        A_ub = np.block([[Vt, -np.ones((n, 1))], [-Vt, -np.ones((n, 1))]])
        b_ub = np.concatenate([x, -x])
        A_eq = np.concatenate([np.ones(m), [0.0]])[None]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * (m + 1), method="highs")
        return bool(res.status == 0 and res.fun <= tol)

    def diameter(self):
        V = self.vertices
        sq = (V * V).sum(1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * V @ V.T
        return float(np.sqrt(max(d2.max(), 0.0)))

    def canonical_vertex(self):
        return self.vertices[0].copy()

    def loo_atom(self, grad):
        i = int(np.argmin(self.vertices @ self._check(grad)))
        return i, self.vertices[i].copy()

    def loo(self, grad):
        return self.loo_atom(grad)[1]

    def linear_min(self, grad):
        return float(np.min(self.vertices @ grad))

    def kloo(self, grad, k):
        k = self._check_k(k)
        sel = select_k_smallest(self.vertices @ self._check(grad), k)
        return Vertices(tuple(int(i) for i in sel.indices), self.vertices[sel.indices].copy())

    def vertex_kloo(self, grad, k):
        out = self.kloo(grad, k)
        return out.keys, out.points

    def atoms(self, out):
        return out.keys, out.points

    def build_ds(self, anchor, out):
        if not isinstance(out, Vertices):
            raise ParameterError("vertex-polytope search needs a Vertices oracle output")
        return self.build_hull(anchor, out.keys, out.points)

    def sample(self, rng, size):
        w = rng.dirichlet(np.ones(len(self.vertices)), size=size)
        return list(w @ self.vertices)


# --------------------------------------------------------------------------


class AtomMemory:
    """FIFO buffer of the ``m`` most recent oracle atoms, keyed exactly.

    Re-adding a key already present refreshes its stamp and moves it to the
    newest position instead of storing a duplicate.
    """

    def __init__(self, m):
        self.m = int(m)
        if self.m < 0:
            raise ParameterError("memory size must be nonnegative")
        self._items = OrderedDict()

    def push(self, key, point, stamp):
        if self.m == 0:
            return
        if key in self._items:
            del self._items[key]
        self._items[key] = (np.asarray(point, dtype=float).copy(), int(stamp))
        while len(self._items) > self.m:
            self._items.popitem(last=False)

    def __len__(self):
        return len(self._items)

    def keys(self):
        return list(self._items.keys())

    def points(self):
        return [p for p, _ in self._items.values()]

    def stamps(self):
        return [s for _, s in self._items.values()]


def vertex_decomposition(fset, x, tol=1e-12):
    """Write a point of an atomic set as a convex combination of keyed atoms.

    Returns a list of ``(key, vertex, weight)`` with positive weights summing
    to one.  Used to seed the active set of away-step and pairwise FW from
    any feasible start, not only from a vertex.
    """
    x = np.asarray(x, dtype=float)
    out = []
    if isinstance(fset, Simplex):
        for i in np.flatnonzero(x > tol):
            out.append((int(i), fset.vertex(i), float(x[i])))
    elif isinstance(fset, L1Ball):
        acc = {}
        for i in np.flatnonzero(np.abs(x) > tol):
            key = (int(i), 1 if x[i] > 0 else -1)
            acc[key] = acc.get(key, 0.0) + abs(x[i]) / fset.alpha
        rest = 1.0 - sum(acc.values())
        if rest > tol:
            for key in ((0, 1), (0, -1)):
                acc[key] = acc.get(key, 0.0) + 0.5 * rest
        out = [(key, fset.atom(*key), w) for key, w in acc.items()]
    elif isinstance(fset, Hypercube):
        levels = np.unique(np.concatenate([np.clip(x, 0.0, 1.0), [0.0, 1.0]]))[::-1]
        for hi, lo in zip(levels[:-1], levels[1:]):
            v = (x >= hi - tol).astype(float)
            out.append((fset.key(v), v, float(hi - lo)))
    elif isinstance(fset, ProductSimplices):
        rem = np.clip(x.copy(), 0.0, None)
        mass = 1.0
        while mass > tol:
            choice = []
            for sl in fset.slices:
                live = np.flatnonzero(rem[sl] > tol)
                if live.size == 0:
                    break
                choice.append(int(live[0]))
            if len(choice) < len(fset.slices):
                break
            w = min(rem[sl.start + i] for sl, i in zip(fset.slices, choice))
            for sl, i in zip(fset.slices, choice):
                rem[sl.start + i] -= w
            out.append((tuple(choice), fset._vertex(choice), float(w)))
            mass -= w
    elif isinstance(fset, GroupNormBall):
        flat = x.ravel()
        for j, nrm in enumerate(fset.group_norms(x)):
            if nrm > tol:
                v = np.zeros_like(flat)
                v[fset.groups[j]] = fset.alpha * flat[fset.groups[j]] / nrm
                v = v.reshape(fset.shape)
                out.append(((j, v.tobytes()), v, nrm / fset.alpha))
        rest = 1.0 - sum(w for _, _, w in out)
        if rest > tol:
            e = fset.canonical_vertex()
            g0 = fset._group_of(e)
            out.append(((g0, e.tobytes()), e, 0.5 * rest))
            out.append(((g0, (-e).tobytes()), -e, 0.5 * rest))
    elif isinstance(fset, VertexPolytope):
        from scipy.optimize import linprog

        m = len(fset.vertices)
        A_eq = np.vstack([fset.vertices.T, np.ones((1, m))])
        b_eq = np.concatenate([x, [1.0]])
        res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m,
                      method="highs")
        if res.status != 0:
            raise ParameterError("point is not in the polytope")
        for i in np.flatnonzero(res.x > tol):
            out.append((int(i), fset.vertices[i].copy(), float(res.x[i])))
    else:
        raise UnsupportedError(f"{type(fset).__name__} is not vertex-representable")
    total = sum(w for _, _, w in out)
    return [(k, v, w / total) for k, v, w in out if w > 0.0]
