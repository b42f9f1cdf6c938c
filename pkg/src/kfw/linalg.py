"""Dense linear-algebra primitives used by the oracles and solvers.

Everything here works on plain ``numpy`` arrays.  Iterates may be vectors or
matrices; linear operators act on arrays of a fixed ``in_shape`` and return
flat vectors, so composite objectives never need to know which kind of
variable they are dealing with.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "as_point",
    "inner",
    "DenseOperator",
    "IdentityOperator",
    "MaskOperator",
    "RightMultiplyOperator",
    "operator_norm",
    "SelectionResult",
    "SpectralBasis",
    "select_k_smallest",
    "eig_bottom_k",
    "svd_top_k",
    "seeded_rng",
]


def as_point(x, shape=None) -> np.ndarray:
    """Return ``x`` as a float array, rejecting NaN/Inf and wrong shapes."""
    arr = np.array(x, dtype=float)
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionError(f"expected shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("point has non-finite entries")
    return arr


def inner(a, b) -> float:
    """Euclidean (trace) inner product of two equally shaped arrays."""
    return float(np.vdot(a, b))


def _fix_signs(basis):
    # first nonzero entry of each column made nonnegative
    signs = np.ones(basis.shape[1])
    for j in range(basis.shape[1]):
        nz = np.flatnonzero(np.abs(basis[:, j]) > 1e-14)
        if nz.size and basis[nz[0], j] < 0:
            signs[j] = -1.0
    return signs


class DenseOperator:
    """A dense real matrix acting on arrays of shape ``in_shape``.

    Parameters
    ----------
    values : array_like, shape (m, n)
    symmetric : bool
        Assert that ``values`` is symmetric (to 1e-12 relative).
    in_shape : tuple, optional
        Shape of the arrays the operator is applied to; must have ``n``
        entries.  Defaults to ``(n,)``.
    """

    def __init__(self, values, symmetric=False, in_shape=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise DimensionError("operator values must be a 2-D array")
        if not np.all(np.isfinite(values)):
            raise ParameterError("operator has non-finite entries")
        if symmetric:
            if values.shape[0] != values.shape[1]:
                raise ParameterError("symmetric operator must be square")
            scale = max(np.abs(values).max(initial=0.0), 1e-300)
            if np.abs(values - values.T).max(initial=0.0) > 1e-12 * scale:
                raise ParameterError("operator flagged symmetric is not symmetric")
        self.values = values
        self.symmetric = bool(symmetric)
        self.in_shape = tuple(in_shape) if in_shape is not None else (values.shape[1],)
        if int(np.prod(self.in_shape)) != values.shape[1]:
            raise DimensionError("in_shape does not match the operator column count")

    @property
    def shape(self):
        return self.values.shape

    def matvec(self, x):
        return self.values @ np.reshape(x, -1)

    def rmatvec(self, z):
        return (self.values.T @ z).reshape(self.in_shape)

    def fingerprint_data(self):
        return [self.values]


class IdentityOperator:
    """Identity map from arrays of ``in_shape`` to flat vectors."""

    def __init__(self, in_shape):
        self.in_shape = tuple(np.atleast_1d(in_shape).tolist())
        size = int(np.prod(self.in_shape))
        self.shape = (size, size)

    def matvec(self, x):
        return np.reshape(x, -1).astype(float, copy=True)

    def rmatvec(self, z):
        return np.reshape(z, self.in_shape).astype(float, copy=True)

    def fingerprint_data(self):
        return [np.array(self.in_shape, dtype=float)]


class MaskOperator:
    """Sampling operator ``X -> X[mask]`` used by matrix completion."""

    def __init__(self, mask):
        self.mask = np.array(mask, dtype=bool)
        self.in_shape = self.mask.shape
        self.shape = (int(self.mask.sum()), self.mask.size)

    def matvec(self, x):
        return np.asarray(x)[self.mask]

    def rmatvec(self, z):
        out = np.zeros(self.in_shape)
        out[self.mask] = z
        return out

    def fingerprint_data(self):
        return [self.mask.astype(float)]


class RightMultiplyOperator:
    """``W -> vec(W @ X)`` for a fixed data matrix ``X`` (group Lasso)."""

    def __init__(self, X, rows):
        self.X = np.array(X, dtype=float)
        self.in_shape = (int(rows), self.X.shape[0])
        self.shape = (rows * self.X.shape[1], rows * self.X.shape[0])

    def matvec(self, W):
        return (np.reshape(W, self.in_shape) @ self.X).ravel()

    def rmatvec(self, z):
        return np.reshape(z, (self.in_shape[0], self.X.shape[1])) @ self.X.T

    def fingerprint_data(self):
        return [self.X, np.array(self.in_shape, dtype=float)]


def operator_norm(op, rtol=1e-6, max_iter=20000, seed=0) -> float:
    """Largest singular value of ``op`` by power iteration on ``op^T op``.

    Stops once the Rayleigh-quotient estimate changes by less than
    ``rtol * 1e-4`` between sweeps, which keeps the returned value well
    inside ``rtol`` of the truth for well-separated spectra.
    """
    rng = seeded_rng(seed)
    x = rng.standard_normal(op.in_shape)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = op.rmatvec(op.matvec(x))
        new = float(np.sqrt(max(inner(x, y), 0.0)))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(new - est) <= rtol * 1e-4 * max(new, 1e-300):
            est = new
            break
        est = new
    return est


class SelectionResult(NamedTuple):
    """Indices and values of the ``k`` smallest entries, ascending."""

    indices: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class SpectralBasis:
    """Orthonormal columns plus their eigen- or singular values."""

    basis: np.ndarray
    values: np.ndarray

    @property
    def k(self):
        return self.basis.shape[1]


def select_k_smallest(y, k) -> SelectionResult:
    """Pick the ``k`` smallest entries of ``y``.

    Uses a bounded heap (``heapq.nsmallest``), O(n log k).  Ties go to the
    smaller index, so the result equals the first ``k`` entries of a stable
    ascending sort.

    >>> select_k_smallest([3.0, 1.0, 2.0], 2).indices
    array([1, 2])
    """
    y = np.asarray(y, dtype=float).ravel()
    k = int(k)
    if not 1 <= k <= y.size:
        raise ParameterError(f"k must lie in [1, {y.size}], got {k}")
    yl = y.tolist()
    idx = heapq.nsmallest(k, range(len(yl)), key=lambda i: (yl[i], i))
    idx = np.array(idx, dtype=int)
    return SelectionResult(idx, y[idx])


def eig_bottom_k(Y, k) -> SpectralBasis:
    """Eigenvectors of the ``k`` algebraically smallest eigenvalues of ``Y``.

    ``Y`` may be an array or a symmetric :class:`DenseOperator`.  The full
    decomposition is computed and truncated; each column is sign-fixed so its
    first nonzero entry is nonnegative.
    """
    values = Y.values if isinstance(Y, DenseOperator) else np.asarray(Y, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ParameterError("eig_bottom_k needs a square matrix")
    scale = max(np.abs(values).max(initial=0.0), 1e-300)
    if np.abs(values - values.T).max(initial=0.0) > 1e-10 * scale:
        raise ParameterError("eig_bottom_k needs a symmetric matrix")
    n = values.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in [1, {n}], got {k}")
    w, V = np.linalg.eigh(0.5 * (values + values.T))
    V = V[:, :k]
    V = V * _fix_signs(V)
    return SpectralBasis(V, w[:k].copy())


def svd_top_k(Y, k):
    """Top-``k`` singular triplets of ``Y`` as ``(left, right)`` bases.

    Both bases carry the singular values (descending).  Signs are chosen so
    that the first nonzero entry of every left vector is nonnegative; the
    matching right vector is flipped along with it.
    """
    values = Y.values if isinstance(Y, DenseOperator) else np.asarray(Y, dtype=float)
    if values.ndim != 2:
        raise ParameterError("svd_top_k needs a 2-D array")
    k = int(k)
    if not 1 <= k <= min(values.shape):
        raise ParameterError(f"k must lie in [1, {min(values.shape)}], got {k}")
    U, s, Vt = np.linalg.svd(values, full_matrices=False)
    U = U[:, :k]
    V = Vt[:k].T
    signs = _fix_signs(U)
    U = U * signs
    V = V * signs
    s = s[:k].copy()
    return SpectralBasis(U, s), SpectralBasis(V, s)


def seeded_rng(seed) -> np.random.Generator:
    """Deterministic random stream: numpy ``Generator`` over ``PCG64(seed)``.

    PCG64 output and numpy's ziggurat normal sampler are platform
    independent for a fixed numpy major version.
    """
    seed = int(seed)
    if seed < 0:
        raise ParameterError("seed must be a nonnegative integer")
    return np.random.Generator(np.random.PCG64(seed))
