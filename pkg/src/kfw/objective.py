"""Composite objectives ``f(x) = g(A x) + <c, x>`` and their restrictions."""
from __future__ import annotations

import zlib

import numpy as np

from .errors import DimensionError, UnsupportedError
from .linalg import IdentityOperator, inner, operator_norm

__all__ = [
    "QuadraticOuter",
    "SmoothOuter",
    "CompositeObjective",
    "RestrictedObjective",
    "estimate_lipschitz",
    "restricted_value_gradient",
]


class QuadraticOuter:
    """``g(z) = ||z - b||^2``; gradient ``2 (z - b)``, ``L_g = 2``."""

    is_quadratic = True
    lipschitz = 2.0

    def __init__(self, b):
        self.b = np.array(b, dtype=float).ravel()

    def value(self, z):
        r = z - self.b
        return float(r @ r)

    def gradient(self, z):
        return 2.0 * (z - self.b)

    def fingerprint_data(self):
        return [self.b]


class SmoothOuter:
    """Generic smooth convex outer function from user callables.

    ``lipschitz`` is a bound on the gradient's Lipschitz constant; leave it
    ``None`` when unknown (then :func:`estimate_lipschitz` refuses).
    """

    is_quadratic = False

    def __init__(self, value, gradient, lipschitz=None, name="smooth"):
        self._value = value
        self._gradient = gradient
        self.lipschitz = lipschitz
        self.name = name

    def value(self, z):
        return float(self._value(z))

    def gradient(self, z):
        return np.asarray(self._gradient(z), dtype=float)

    def fingerprint_data(self):
        return [np.array([zlib.crc32(self.name.encode())], dtype=float)]


class CompositeObjective:
    """``f(x) = g(A x) + <c, x>`` for a smooth convex ``g``.

    Parameters
    ----------
    outer : QuadraticOuter or SmoothOuter
    A : linear operator, optional
        Anything with ``matvec``/``rmatvec``/``in_shape``; identity if omitted
        (then ``in_shape`` is required).
    c : array_like, optional
        Linear term with the variable's shape.
    lipschitz_f : float, optional
        Override for the smoothness constant of ``f``.
    """

    def __init__(self, outer, A=None, c=None, in_shape=None, lipschitz_f=None):
        if A is None:
            if in_shape is None:
                raise DimensionError("in_shape is required when A is omitted")
            A = IdentityOperator(in_shape)
        self.outer = outer
        self.A = A
        self.in_shape = tuple(A.in_shape)
        self.c = None if c is None else np.array(c, dtype=float).reshape(self.in_shape)
        self._lipschitz = lipschitz_f

    @property
    def is_quadratic(self):
        return bool(getattr(self.outer, "is_quadratic", False))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != self.in_shape:
            raise DimensionError(f"expected shape {self.in_shape}, got {x.shape}")
        return x

    def value(self, x):
        x = self._check(x)
        val = self.outer.value(self.A.matvec(x))
        if self.c is not None:
            val += inner(self.c, x)
        return val

    def gradient(self, x):
        x = self._check(x)
        g = self.A.rmatvec(self.outer.gradient(self.A.matvec(x)))
        if self.c is not None:
            g = g + self.c
        return g

    def value_and_gradient(self, x):
        x = self._check(x)
        z = self.A.matvec(x)
        val = self.outer.value(z)
        g = self.A.rmatvec(self.outer.gradient(z))
        if self.c is not None:
            val += inner(self.c, x)
            g = g + self.c
        return val, g

    def curvature(self, d):
        """``phi''`` of ``t -> f(x + t d)`` for quadratic ``g`` (constant in x)."""
        if not self.is_quadratic:
            raise UnsupportedError("closed-form curvature needs a quadratic outer function")
        Ad = self.A.matvec(d)
        return 2.0 * float(Ad @ Ad)

    @property
    def lipschitz(self):
        """Cached smoothness constant of ``f``."""
        if self._lipschitz is None:
            self._lipschitz = estimate_lipschitz(self)
        return self._lipschitz

    def fingerprint_data(self):
        data = list(self.outer.fingerprint_data()) + list(self.A.fingerprint_data())
        if self.c is not None:
            data.append(self.c)
        return data


def estimate_lipschitz(obj) -> float:
    """``L_f = L_g * ||A||_op^2`` with the operator norm from power iteration."""
    L_g = getattr(obj.outer, "lipschitz", None)
    if L_g is None:
        raise UnsupportedError("outer function has no curvature bound; pass lipschitz_f")
    if isinstance(obj.A, IdentityOperator):
        return float(L_g)
    return float(L_g) * operator_norm(obj.A) ** 2


class RestrictedObjective:
    """``theta -> f(map(theta))`` for a direction-search parametrization.

    Every shipped parametrization is linear in ``theta``.  When ``f`` has a
    quadratic outer function the images ``A map(e_j)`` are stacked once into
    a small Jacobian so each evaluation costs O(m * dim) instead of a full
    ambient pass.
    """

    def __init__(self, base, param, use_quadratic=True):
        self.base = base
        self.param = param
        self._jac = None
        self._lin = None
        self._L = None
        if use_quadratic and base.is_quadratic and isinstance(base.outer, QuadraticOuter):
            self._build_quadratic()

    @property
    def dim(self):
        return self.param.dim

    def _build_quadratic(self):
        p = self.param.dim
        cols = []
        e = np.zeros(p)
        for j in range(p):
            e[j] = 1.0
            cols.append(self.base.A.matvec(self.param.map(e)))
            e[j] = 0.0
        self._jac = np.column_stack(cols)
        self._lin = None if self.base.c is None else self.param.adjoint(self.base.c)
        smax = np.linalg.norm(self._jac, 2) if self._jac.size else 0.0
        self._L = 2.0 * smax**2

    def quadratic_form(self):
        """``(H, q, const)`` with ``value = 0.5 t'Ht + q't + const``, or ``None``."""
        if self._jac is None:
            return None
        b = self.base.outer.b
        H = 2.0 * (self._jac.T @ self._jac)
        q = -2.0 * (self._jac.T @ b)
        if self._lin is not None:
            q = q + self._lin
        return H, q, float(b @ b)

    @property
    def lipschitz_hint(self):
        """Exact smoothness constant of the restricted problem, if known."""
        return self._L

    def value(self, theta):
        return self.value_and_gradient(theta)[0]

    def value_and_gradient(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.param.dim,):
            raise DimensionError(f"expected parameter of length {self.param.dim}")
        if self._jac is not None:
            r = self._jac @ theta - self.base.outer.b
            val = float(r @ r)
            g = 2.0 * (self._jac.T @ r)
            if self._lin is not None:
                val += float(self._lin @ theta)
                g = g + self._lin
            return val, self.param.fix_gradient(g)
        val, G = self.base.value_and_gradient(self.param.map(theta))
        return val, self.param.adjoint(G)


def restricted_value_gradient(r, theta):
    """Value and chain-rule gradient of a :class:`RestrictedObjective`."""
    return r.value_and_gradient(theta)
