"""Matrix Market input/output for problem data.

Parsing is delegated to :mod:`scipy.io`; this module adds the checks the
solvers rely on (no duplicate coordinates, finite values, dimensions) and
turns the result into dense arrays or operators.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .errors import DimensionError, ParameterError
from .linalg import DenseOperator

__all__ = ["read_matrix", "write_matrix", "load_external_matrix"]


def read_matrix(path) -> np.ndarray:
    """Read an array- or coordinate-format Matrix Market file as a dense array.

    Raises
    ------
    ParameterError
        Malformed header or body, a coordinate entry listed twice, or a
        value that is not finite (including overflow to infinity).
    """
    path = Path(path)
    try:
        data = scipy.io.mmread(str(path))
    except (ValueError, IndexError, OverflowError) as exc:
        raise ParameterError(f"{path}: malformed Matrix Market file ({exc})") from exc
    if scipy.sparse.issparse(data):
        coo = data.tocoo()
        pairs = np.stack([coo.row, coo.col], axis=1)
        _, first, counts = np.unique(pairs, axis=0, return_index=True, return_counts=True)
        if np.any(counts > 1):
            i, j = pairs[first[np.argmax(counts > 1)]]
            raise ParameterError(f"{path}: duplicate entry ({i + 1}, {j + 1})")
        values = coo.data
        dense = coo.toarray()
    else:
        dense = np.asarray(data)
        values = dense
    if np.iscomplexobj(dense):
        raise ParameterError(f"{path}: complex matrices are not supported")
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise ParameterError(f"{path}: non-finite or overflowing value")
    return np.asarray(dense, dtype=float)


def write_matrix(path, array, precision=17):
    """Write a dense vector or matrix in array format (vectors as columns).

    ``precision`` significant digits make the write-then-read round trip
    exact for float64.
    """
    a = np.asarray(array, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionError("only vectors and matrices can be written")
    if not np.all(np.isfinite(a)):
        raise ParameterError("refusing to write non-finite values")
    scipy.io.mmwrite(str(path), a, precision=precision)


def load_external_matrix(path):
    """Load problem data: a ``DenseOperator`` for matrices, a 1-D array for
    single-row or single-column files."""
    a = read_matrix(path)
    if a.size == 0:
        raise DimensionError(f"{path}: empty matrix")
    if 1 in a.shape:
        return a.ravel()
    return DenseOperator(a)
