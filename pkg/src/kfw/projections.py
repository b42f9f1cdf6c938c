"""Euclidean projections onto the direction-search parameter domains."""
from __future__ import annotations

import numpy as np

from .errors import ParameterError

__all__ = [
    "project_simplex",
    "project_capped_simplex",
    "project_group_domain",
    "project_spectral_simplex",
    "project_spectral_nuclear",
]


def project_simplex(z, radius=1.0):
    """Project ``z`` onto ``{a >= 0, sum(a) = radius}``.

    Sort-and-scan threshold: ``out = max(z - tau, 0)`` where ``tau`` is the
    largest threshold keeping the sum equal to ``radius``.
    """
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ParameterError("cannot project an empty vector")
    if radius <= 0:
        raise ParameterError("radius must be positive")
    flat = z.ravel() / radius
    u = np.sort(flat)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, u.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    tau = css[rho - 1] / rho
    return (np.maximum(flat - tau, 0.0) * radius).reshape(z.shape)


def project_capped_simplex(z, radius=1.0):
    """Project onto ``{a >= 0, sum(a) <= radius}`` (hull of simplex and 0)."""
    z = np.asarray(z, dtype=float)
    clipped = np.maximum(z, 0.0)
    if clipped.sum() <= radius:
        return clipped
    return project_simplex(z, radius)


def project_group_domain(eta0, lam0, groups, alpha=1.0):
    """Project ``(eta0, lam0)`` onto ``{eta >= 0, eta + sum_g ||lam_g|| <= alpha}``.

    Entries of ``lam0`` outside ``groups`` are forced to zero.  The block
    norms are projected jointly with ``eta0`` onto the capped simplex, then
    each block is rescaled to its projected norm.

    Returns
    -------
    eta : float
    lam : ndarray, same shape as ``lam0``
    """
    lam0 = np.asarray(lam0, dtype=float)
    norms = np.array([np.linalg.norm(lam0[g]) for g in groups])
    a = project_capped_simplex(np.concatenate([[float(eta0)], norms]), alpha)
    lam = np.zeros_like(lam0)
    for g, nrm, target in zip(groups, norms, a[1:]):
        # a zero block has target 0 as well (the threshold is nonnegative)
        if nrm > 0.0 and target > 0.0:
            lam[g] = lam0[g] * (target / nrm)
    return float(a[0]), lam


def project_spectral_simplex(eta0, S0, alpha=1.0):
    """Project onto ``{eta >= 0, S psd, eta + tr(S) = alpha}``.

    ``S0`` is symmetrized first; its eigenvalues are projected together with
    ``eta0`` onto the scaled simplex and the eigenvectors reused.
    """
    S0 = np.asarray(S0, dtype=float)
    w, V = np.linalg.eigh(0.5 * (S0 + S0.T))
    a = project_simplex(np.concatenate([[float(eta0)], w]), alpha)
    S = (V * a[1:]) @ V.T
    return float(a[0]), 0.5 * (S + S.T)


def project_spectral_nuclear(eta0, S0, alpha=1.0):
    """Project onto ``{eta >= 0, eta + ||S||_nuc <= alpha}``.

    The singular values are projected with ``eta0`` onto the scaled *capped*
    simplex (the domain is an inequality set), then ``S`` is rebuilt from the
    same singular vectors.
    """
    S0 = np.asarray(S0, dtype=float)
    U, s, Vt = np.linalg.svd(S0, full_matrices=False)
    a = project_capped_simplex(np.concatenate([[float(eta0)], s]), alpha)
    return float(a[0]), (U * a[1:]) @ Vt
