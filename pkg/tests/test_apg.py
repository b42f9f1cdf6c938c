import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kfw.apg import (
    ApgConfig,
    apg_solve,
    line_search,
    polish_face_qp,
    polish_simplex_qp,
)
from kfw.errors import NumericalError, ParameterError
from kfw.linalg import DenseOperator
from kfw.objective import CompositeObjective, QuadraticOuter, RestrictedObjective, SmoothOuter
from kfw.projections import project_simplex
from kfw.sets import GroupNormBall, L1Ball, NuclearBall, Simplex, Spectrahedron

from oracles import quadratic_pg


class Quadratic:
    """``0.5 t'Ht + q't`` without a ``quadratic_form`` (generic APG path)."""

    def __init__(self, H, q):
        self.H, self.q = H, q

    def value_and_gradient(self, t):
        return 0.5 * t @ self.H @ t + self.q @ t, self.H @ t + self.q

    def value(self, t):
        return self.value_and_gradient(t)[0]


def random_hull_problem(rng, n=8, m=12, k=4):
    A = rng.standard_normal((m, n))
    f = CompositeObjective(QuadraticOuter(rng.standard_normal(m)), DenseOperator(A))
    fset = L1Ball(n, 1.0)
    w = fset.sample(rng, 1)[0]
    p = fset.build_ds(w, fset.kloo(f.gradient(w), k))
    return f, p, RestrictedObjective(f, p)


def test_config_validation():
    with pytest.raises(ParameterError):
        ApgConfig(max_inner=0)
    with pytest.raises(ParameterError):
        ApgConfig(factor=1.5)
    with pytest.raises(ParameterError):
        ApgConfig(rel_tol=0.0)


def test_vertex_minimizer_on_simplex():
    # minimize ||t - (2, -1)||^2 over the 2-simplex: optimum at (1, 0)
    H = 2 * np.eye(2)
    q = -2 * np.array([2.0, -1.0])
    res = apg_solve(Quadratic(H, q), project_simplex, ApgConfig(), np.array([0.5, 0.5]))
    np.testing.assert_allclose(res.theta, [1.0, 0.0], atol=1e-8)
    assert res.iterations <= 200
    assert res.converged


def test_warm_start_at_optimum_stops_quickly():
    H = 2 * np.eye(3)
    q = -2 * np.array([0.2, 0.3, 0.5])
    res = apg_solve(Quadratic(H, q), project_simplex, ApgConfig(), np.array([0.2, 0.3, 0.5]))
    assert res.converged and res.iterations <= 3


def test_matches_projected_gradient_oracle(rng):
    for _ in range(5):
        _, p, r = random_hull_problem(rng)
        H, q, const = r.quadratic_form()
        res = apg_solve(r, p.project, ApgConfig(max_inner=5000), p.theta0())
        _, f_ref = quadratic_pg(H, q, p.project, p.theta0())
        assert res.objective == pytest.approx(f_ref + const, abs=1e-8)


def test_generic_path_matches_quadratic_path(rng):
    f, p, r = random_hull_problem(rng)
    slow = RestrictedObjective(f, p, use_quadratic=False)
    a = apg_solve(r, p.project, ApgConfig(max_inner=3000), p.theta0())
    b = apg_solve(slow, p.project, ApgConfig(max_inner=3000), p.theta0())
    assert a.objective == pytest.approx(b.objective, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 50))
def test_never_worse_than_warm_start_and_feasible(seed, max_inner):
    rng = np.random.default_rng(seed)
    _, p, r = random_hull_problem(rng)
    theta0 = p.theta0()
    res = apg_solve(r, p.project, ApgConfig(max_inner=max_inner), theta0)
    assert res.objective <= r.value(theta0) + 1e-12
    assert np.linalg.norm(res.theta - p.project(res.theta)) <= 1e-9
    assert res.objective == pytest.approx(r.value(res.theta), rel=1e-9, abs=1e-9)


def test_non_finite_objective_raises():
    class Bad:
        def value_and_gradient(self, t):
            return np.nan, np.zeros_like(t)

    with pytest.raises(NumericalError):
        apg_solve(Bad(), project_simplex, ApgConfig(), np.array([1.0, 0.0]))


# ---------------------------------------------------------------- line search

def _quadratic_objective(rng, n=5):
    A = rng.standard_normal((7, n))
    return CompositeObjective(QuadraticOuter(rng.standard_normal(7)), DenseOperator(A))


def test_line_search_reaches_segment_end():
    f = CompositeObjective(QuadraticOuter(np.zeros(2)), DenseOperator(np.eye(2)))
    x = np.array([1.0, 0.0])
    assert line_search(f, x, -x, mode="exact") == 1.0
    assert line_search(f, x, -x, mode="bisection") == 1.0


def test_line_search_stationary_endpoint():
    f = CompositeObjective(QuadraticOuter(np.zeros(2)), DenseOperator(np.eye(2)))
    x = np.array([1.0, 0.0])
    assert line_search(f, x, np.array([1.0, 0.0])) == 0.0
    assert line_search(f, x, np.array([0.0, 1.0]), mode="bisection") == 0.0


def test_bisection_matches_closed_form(rng):
    for _ in range(50):
        f = _quadratic_objective(rng)
        x, d = rng.standard_normal(5), rng.standard_normal(5)
        a = line_search(f, x, d, mode="exact")
        b = line_search(f, x, d, mode="bisection")
        assert abs(a - b) <= 1e-12


def test_line_search_smooth_outer(rng):
    A = rng.standard_normal((6, 3))
    y = np.sign(rng.standard_normal(6))
    outer = SmoothOuter(lambda z: np.sum(np.logaddexp(0, -y * z)),
                        lambda z: -y / (1 + np.exp(y * z)), lipschitz=0.25)
    f = CompositeObjective(outer, DenseOperator(A))
    x, d = rng.standard_normal(3), rng.standard_normal(3)
    eta = line_search(f, x, d)
    grid = np.linspace(0, 1, 2001)
    best = grid[np.argmin([f.value(x + t * d) for t in grid])]
    assert abs(eta - best) <= 1e-3
    with pytest.raises(ParameterError):
        line_search(f, x, -f.gradient(x), mode="golden")


# ---------------------------------------------------------------- polishing

def test_simplex_polish_is_exact_and_monotone(rng):
    for _ in range(10):
        _, p, r = random_hull_problem(rng, n=10, m=6, k=6)
        H, q, const = r.quadratic_form()
        rough = apg_solve(r, p.project, ApgConfig(max_inner=20), p.theta0())
        fine = polish_simplex_qp(r, rough.theta, p.simplex_blocks())
        assert r.value(fine) <= r.value(rough.theta)
        assert np.linalg.norm(fine - p.project(fine)) <= 1e-12
        _, f_ref = quadratic_pg(H, q, p.project, p.theta0(), steps=200000)
        assert r.value(fine) <= f_ref + const + 1e-9


def _face_cases(rng):
    grp = GroupNormBall.contiguous(6, 3, 1.0)
    A = rng.standard_normal((14, 18))
    f = CompositeObjective(QuadraticOuter(rng.standard_normal(14)), DenseOperator(A))
    w = grp.sample(rng, 1)[0]
    yield f, grp.build_ds(w, grp.kloo(f.gradient(w), 3))
    spec = Spectrahedron(5)
    P = rng.standard_normal((5, 5))
    f = CompositeObjective(QuadraticOuter((P + P.T).ravel()), in_shape=(5, 5))
    W = spec.sample(rng, 1)[0]
    yield f, spec.build_ds(W, spec.kloo(f.gradient(W), 2))
    nuc = NuclearBall(4, 5, 1.0)
    f = CompositeObjective(QuadraticOuter(3 * rng.standard_normal(20)), in_shape=(4, 5))
    W = nuc.sample(rng, 1)[0]
    yield f, nuc.build_ds(W, nuc.kloo(f.gradient(W), 2))


def test_face_polish_never_worse_and_feasible(rng):
    for _ in range(5):
        for f, p in _face_cases(rng):
            r = RestrictedObjective(f, p)
            rough = apg_solve(r, p.project, ApgConfig(max_inner=30), p.theta0())
            fine = polish_face_qp(r, rough.theta, p)
            assert r.value(fine) <= r.value(rough.theta) + 1e-12
            assert np.linalg.norm(fine - p.project(fine)) <= 1e-9


def test_face_polish_reaches_long_run_optimum(rng):
    for f, p in _face_cases(rng):
        r = RestrictedObjective(f, p)
        H, q, const = r.quadratic_form()
        rough = apg_solve(r, p.project, ApgConfig(max_inner=200), p.theta0())
        fine = polish_face_qp(r, rough.theta, p)
        _, f_ref = quadratic_pg(H, q, p.project, p.theta0(), steps=100000)
        assert r.value(fine) <= f_ref + const + 1e-8


def test_polish_without_quadratic_form_is_identity(rng):
    f = CompositeObjective(SmoothOuter(lambda z: z @ z, lambda z: 2 * z, lipschitz=2.0),
                           in_shape=(3,))
    fset = Simplex(3)
    p = fset.build_ds(fset.canonical_vertex(), fset.kloo(np.array([1.0, 0.0, 2.0]), 2))
    r = RestrictedObjective(f, p)
    theta = np.array([0.2, 0.5, 0.3])
    assert polish_simplex_qp(r, theta, p.simplex_blocks()) is theta
    assert polish_face_qp(r, theta, p) is theta
