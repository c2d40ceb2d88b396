import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaybf.matrixkit import (
    SingularMatrixError,
    _objective,
    _objective_and_grad,
    gram_schmidt_residual,
    jd_objective,
    joint_diagonalize,
    joint_diagonalize_batch,
    right_inverse,
    semi_orthogonality,
    svd,
)


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def psd(rng, n, count, rank=None):
    x = cn(rng, count, n, rank or n + 1)
    return x @ x.conj().transpose(0, 2, 1)


# --- svd -------------------------------------------------------------------


def test_svd_of_diagonal():
    r = svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(r.s, [3.0, 1.0])
    for m in (r.u, r.vh):
        np.testing.assert_allclose(np.abs(m), np.eye(2), atol=1e-15)


def test_svd_of_zero():
    r = svd(np.zeros((2, 3)))
    np.testing.assert_array_equal(r.s, 0.0)
    np.testing.assert_allclose(r.u.conj().T @ r.u, np.eye(2), atol=1e-12)
    assert r.rank() == 0


def test_svd_wide_random():
    a = cn(np.random.default_rng(0), 2, 4)
    r = svd(a)
    assert np.linalg.norm(r.reconstruct() - a) < 1e-10
    assert r.rank() == 2 and np.count_nonzero(r.s > 1e-12) == 2


@pytest.mark.parametrize("bad", [np.zeros((0, 3)), np.ones(3), np.array([[np.nan, 1.0]])])
def test_svd_rejects(bad):
    with pytest.raises(ValueError):
        svd(bad)


# --- right inverse ---------------------------------------------------------


def test_right_inverse_examples():
    np.testing.assert_allclose(right_inverse(np.eye(2)), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(right_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), atol=1e-15)
    x = right_inverse(np.array([[1.0, 0.0, 0.0]]))
    np.testing.assert_allclose(x, [[1.0], [0.0], [0.0]], atol=1e-15)


def test_right_inverse_rank_deficient():
    with pytest.raises(SingularMatrixError):
        right_inverse(np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]]))
    with pytest.raises(SingularMatrixError):
        right_inverse(np.ones((3, 2)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 3))
def test_right_inverse_matches_normal_equations(seed, q, extra):
    a = cn(np.random.default_rng(seed), q, q + extra)
    x = right_inverse(a)
    assert np.linalg.norm(a @ x - np.eye(q)) < 1e-9
    oracle = a.conj().T @ np.linalg.inv(a @ a.conj().T)
    np.testing.assert_allclose(x, oracle, atol=1e-9)


# --- Gram-Schmidt and semi-orthogonality -----------------------------------


def test_gram_schmidt_hand_example():
    r, noc = gram_schmidt_residual([1, 1], [[1, 0]])
    np.testing.assert_allclose(r, [0, 1])
    assert noc == pytest.approx(1.0)


def test_gram_schmidt_orthogonal_and_in_span():
    rng = np.random.default_rng(1)
    v = cn(rng, 4)
    assert gram_schmidt_residual(v, [])[1] == pytest.approx(np.linalg.norm(v))
    b = cn(rng, 3, 4)
    in_span = b.T @ cn(rng, 3)
    assert gram_schmidt_residual(in_span, list(b))[1] <= 1e-10 * np.linalg.norm(in_span)


def test_gram_schmidt_skips_dependent_basis():
    rng = np.random.default_rng(2)
    b = cn(rng, 4)
    v = cn(rng, 4)
    _, one = gram_schmidt_residual(v, [b])
    _, twice = gram_schmidt_residual(v, [b, 2j * b])
    assert one == pytest.approx(twice)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3))
def test_gram_schmidt_matches_projector(seed, k):
    rng = np.random.default_rng(seed)
    v, b = cn(rng, 4), cn(rng, k, 4)
    r, noc = gram_schmidt_residual(v, list(b))
    proj = b.T @ np.linalg.pinv(b.T) if k else np.zeros((4, 4))
    np.testing.assert_allclose(r, v - proj @ v, atol=1e-10)
    assert noc == pytest.approx(np.linalg.norm(r))


def test_semi_orthogonality_examples():
    assert semi_orthogonality([1, 0], [0, 1]) == 0.0
    v = np.array([1 + 2j, -1j, 3])
    assert semi_orthogonality(v, v) == pytest.approx(1.0)
    assert semi_orthogonality([1, 0], np.array([1, 1]) / np.sqrt(2)) == pytest.approx(0.7071, abs=1e-4)
    assert semi_orthogonality([1, 0], [1j, 0]) == 0.0
    with pytest.raises(ValueError):
        semi_orthogonality([0, 0], [1, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_semi_orthogonality_bounds_and_symmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = cn(rng, 3), cn(rng, 3)
    x = semi_orthogonality(a, b)
    assert 0.0 <= x <= 1.0
    assert x == pytest.approx(semi_orthogonality(b, a))
    assert x == pytest.approx(semi_orthogonality(2.5 * a, b))


# --- joint diagonalization -------------------------------------------------


def test_jd_diagonal_targets():
    a = np.array([np.diag([3.0, 1.0, 2.0]), np.diag([1.0, 5.0, 0.5])]).astype(complex)
    res = joint_diagonalize(a)
    assert jd_objective(np.eye(3), a) == 0.0
    assert res.objective <= 1e-20
    assert res.converged


def test_jd_single_matrix_exact():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        a = psd(rng, n, 1)[0]
        res = joint_diagonalize(a)
        assert res.objective <= 1e-8 * np.linalg.norm(a) ** 2
        # Oracle: the eigenbasis diagonalizes exactly.
        _, v = np.linalg.eigh(a)
        assert jd_objective(v.conj().T, [a]) <= 1e-20 * np.linalg.norm(a) ** 2


def test_jd_commuting_pair_exact():
    rng = np.random.default_rng(4)
    for _ in range(10):
        q, _ = np.linalg.qr(cn(rng, 3, 3))
        a = np.stack([q @ np.diag(rng.uniform(0.1, 2.0, 3)) @ q.conj().T for _ in range(2)])
        res = joint_diagonalize(a)
        assert res.objective <= 1e-8 * np.sum(np.abs(a) ** 2)
        assert jd_objective(q.conj().T, a) <= 1e-20 * np.sum(np.abs(a) ** 2)


def test_jd_trace_monotone_and_no_worse_than_identity():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a = psd(rng, 2, 3)
        res = joint_diagonalize(a)
        t = np.array(res.objective_trace)
        assert np.all(np.diff(t) <= 1e-12 * t[0])
        assert res.objective <= jd_objective(np.eye(2), a) + 1e-12


def test_jd_batch_matches_single():
    rng = np.random.default_rng(6)
    a = np.stack([psd(rng, 2, 3) for _ in range(5)])
    b, traces, conv = joint_diagonalize_batch(a)
    for i in range(5):
        single = joint_diagonalize(a[i])
        assert traces[i][-1] == pytest.approx(single.objective, rel=1e-6, abs=1e-20)


def test_jd_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    a = psd(rng, 3, 3)[None]
    b = np.eye(3)[None] + 0.3 * cn(rng, 1, 3, 3)
    f, g = _objective_and_grad(b, a)
    for _ in range(5):
        d = cn(rng, 1, 3, 3)
        eps = 1e-6
        plus = _objective((np.eye(3) + eps * d) @ b, a)
        minus = _objective((np.eye(3) - eps * d) @ b, a)
        fd = (plus - minus) / (2 * eps)
        analytic = np.real(np.sum(g.conj() * d))
        assert fd[0] == pytest.approx(analytic, rel=1e-5, abs=1e-9)


def test_jd_rejects_non_hermitian():
    with pytest.raises(ValueError):
        joint_diagonalize(np.array([[1.0, 2.0], [0.0, 1.0]]))
