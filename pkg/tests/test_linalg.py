import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kfw.errors import DimensionError, ParameterError
from kfw.linalg import (
    DenseOperator,
    MaskOperator,
    RightMultiplyOperator,
    as_point,
    eig_bottom_k,
    operator_norm,
    seeded_rng,
    select_k_smallest,
    svd_top_k,
)


def test_select_k_smallest_example():
    res = select_k_smallest([3.0, 1.0, 2.0], 2)
    assert res.indices.tolist() == [1, 2]
    assert res.values.tolist() == [1.0, 2.0]


def test_select_k_smallest_ties_go_to_smaller_index():
    assert select_k_smallest([5.0, 5.0, 5.0], 2).indices.tolist() == [0, 1]


@pytest.mark.parametrize("k", [0, 4, -1])
def test_select_k_smallest_rejects_bad_k(k):
    with pytest.raises(ParameterError):
        select_k_smallest([1.0, 2.0, 3.0], k)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30), st.data())
def test_select_k_smallest_matches_stable_sort(values, data):
    k = data.draw(st.integers(1, len(values)))
    res = select_k_smallest(values, k)
    expected = np.argsort(np.asarray(values, dtype=float), kind="stable")[:k]
    assert res.indices.tolist() == expected.tolist()


def test_eig_bottom_k_residual_and_order(rng):
    B = rng.standard_normal((30, 30))
    Y = B + B.T
    basis = eig_bottom_k(Y, 4)
    V, w = basis.basis, basis.values
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(Y @ V - V * w) <= 1e-8 * np.linalg.norm(Y)
    assert np.allclose(V.T @ V, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(Y)[:4], atol=1e-10)


def test_eig_bottom_k_sign_convention(rng):
    B = rng.standard_normal((10, 10))
    V = eig_bottom_k(B + B.T, 3).basis
    for j in range(3):
        first = V[np.flatnonzero(np.abs(V[:, j]) > 1e-14)[0], j]
        assert first >= 0


def test_eig_bottom_k_rejects_nonsymmetric(rng):
    with pytest.raises(ParameterError):
        eig_bottom_k(rng.standard_normal((4, 4)), 1)


def test_svd_top_k_against_full_svd(rng):
    Y = rng.standard_normal((12, 9))
    U, V = svd_top_k(Y, 3)
    s = np.linalg.svd(Y, compute_uv=False)
    np.testing.assert_allclose(U.values, s[:3], rtol=1e-12)
    np.testing.assert_allclose(Y @ V.basis, U.basis * U.values, atol=1e-10)
    for j in range(3):
        first = U.basis[np.flatnonzero(np.abs(U.basis[:, j]) > 1e-14)[0], j]
        assert first >= 0


def test_seeded_rng_is_deterministic_and_centered():
    a = seeded_rng(7).standard_normal(100000)
    b = seeded_rng(7).standard_normal(100000)
    assert np.array_equal(a, b)
    assert abs(a.mean()) < 0.02
    with pytest.raises(ParameterError):
        seeded_rng(-1)


def test_as_point_checks():
    with pytest.raises(DimensionError):
        as_point([1.0, 2.0], shape=(3,))
    with pytest.raises(ParameterError):
        as_point([1.0, np.nan])


def test_operators_adjoint_identity(rng):
    ops = [
        (DenseOperator(rng.standard_normal((5, 7))), (7,)),
        (MaskOperator(rng.uniform(size=(4, 6)) < 0.5), (4, 6)),
        (RightMultiplyOperator(rng.standard_normal((6, 8)), 3), (3, 6)),
    ]
    for op, shape in ops:
        x = rng.standard_normal(shape)
        z = rng.standard_normal(op.matvec(x).shape)
        assert np.isclose(op.matvec(x) @ z, np.vdot(x, op.rmatvec(z)))


def test_operator_norm_power_iteration(rng):
    A = rng.standard_normal((20, 15))
    est = operator_norm(DenseOperator(A))
    assert est == pytest.approx(np.linalg.norm(A, 2), rel=1e-5)


def test_svd_top_k_diagonal_example():
    U, V = svd_top_k(np.diag([3.0, 1.0]), 1)
    assert U.values.tolist() == [3.0]
    np.testing.assert_allclose(U.basis[:, 0], [1.0, 0.0])
    np.testing.assert_allclose(V.basis[:, 0], [1.0, 0.0])


def test_svd_top_k_rank_one(rng):
    a, b = rng.standard_normal(6), rng.standard_normal(4)
    U, V = svd_top_k(np.outer(a, b), 1)
    assert U.values[0] == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b))
    assert abs(U.basis[:, 0] @ a / np.linalg.norm(a)) == pytest.approx(1.0)


def test_svd_top_k_random_prefix(rng):
    Y = rng.standard_normal((15, 10))
    U, V = svd_top_k(Y, 4)
    Uf, s, Vt = np.linalg.svd(Y)
    np.testing.assert_allclose(U.values, s[:4], rtol=1e-12)
    # same singular subspaces up to sign
    np.testing.assert_allclose(np.abs(np.sum(U.basis * Uf[:, :4], 0)), 1.0, atol=1e-10)
    np.testing.assert_allclose(np.abs(np.sum(V.basis * Vt[:4].T, 0)), 1.0, atol=1e-10)


def test_seeded_rng_streams_differ():
    assert not np.array_equal(seeded_rng(0).standard_normal(100),
                              seeded_rng(1).standard_normal(100))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40), st.data())
def test_selection_partitions_indices(values, data):
    k = data.draw(st.integers(1, len(values)))
    res = select_k_smallest(values, k)
    rest = np.setdiff1d(np.arange(len(values)), res.indices)
    assert len(set(res.indices.tolist())) == k
    if rest.size:
        assert res.values.max() <= np.min(np.asarray(values)[rest])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 10**6))
def test_factor_bases_orthonormal(n1, n2, seed):
    g = np.random.default_rng(seed)
    Y = g.standard_normal((n1, n2))
    k = min(n1, n2)
    U, V = svd_top_k(Y, k)
    assert np.allclose(U.basis.T @ U.basis, np.eye(k), atol=1e-10)
    assert np.allclose(V.basis.T @ V.basis, np.eye(k), atol=1e-10)
    S = Y[:, :1] @ Y[:, :1].T + np.eye(n1)
    E = eig_bottom_k(S, n1).basis
    assert np.allclose(E.T @ E, np.eye(n1), atol=1e-10)
