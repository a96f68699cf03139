import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldroad.linsolve import (AssemblyError, ConvergenceError, SolveOptions, SparseOperator, assert_m_matrix,
                                solve_spd, solve_tridiag)
from fieldroad.oracle import gaussian_elimination


def lap1d(n):
    e = np.ones(n)
    return sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1]).tocsr()


def test_identity_returns_rhs(rng):
    b = rng.random(7)
    assert np.allclose(solve_spd(SparseOperator(sp.identity(7)), b), b, rtol=0, atol=1e-15)


def test_laplacian_against_dense_elimination():
    A = lap1d(5)
    x = solve_spd(SparseOperator(A), np.ones(5))
    ref, _ = gaussian_elimination(A.toarray(), np.ones(5))
    assert np.max(np.abs(x - ref)) < 1e-10
    assert np.allclose(ref, [2.5, 4.0, 4.5, 4.0, 2.5], atol=1e-13)


def test_zero_rhs():
    assert np.array_equal(solve_spd(SparseOperator(lap1d(6)), np.zeros(6)), np.zeros(6))


@pytest.mark.parametrize("pre", ["jacobi", "none"])
def test_residual_contract(pre, rng):
    n = 40
    A = SparseOperator(lap1d(n) + sp.diags(rng.random(n)))
    b = rng.standard_normal(n)
    opts = SolveOptions(rel_tol=1e-11, preconditioner=pre)
    x = solve_spd(A, b, opts)
    assert np.linalg.norm(A @ x - b) <= 1e-11 * np.linalg.norm(b)


def test_deterministic(rng):
    A = SparseOperator(lap1d(50))
    b = rng.random(50)
    assert np.array_equal(solve_spd(A, b), solve_spd(A, b))


def test_max_iter_reports_history():
    A = SparseOperator(lap1d(200))
    with pytest.raises(ConvergenceError) as ei:
        solve_spd(A, np.ones(200), SolveOptions(rel_tol=1e-14, max_iter=3, preconditioner="none"))
    assert len(ei.value.history) >= 3


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(rel_tol=0.0)
    with pytest.raises(ValueError):
        SolveOptions(preconditioner="ilu")


def test_asymmetric_rejected():
    with pytest.raises(AssemblyError):
        SparseOperator(sp.csr_matrix(np.array([[2.0, -1.0], [0.0, 2.0]])))


def test_nonpositive_diagonal_rejected():
    with pytest.raises(AssemblyError):
        SparseOperator(sp.csr_matrix(np.array([[0.0, 0.0], [0.0, 1.0]])))


def test_m_matrix_check():
    assert_m_matrix(SparseOperator(lap1d(4)))
    with pytest.raises(AssemblyError):
        assert_m_matrix(SparseOperator(sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))))


def test_tridiag_small_case():
    x = solve_tridiag(-np.ones(2), 2 * np.ones(3), -np.ones(2), np.ones(3))
    assert np.allclose(x, [1.5, 2.0, 1.5], rtol=0, atol=1e-15)


def test_tridiag_identity_and_zero(rng):
    b = rng.random(5)
    assert np.array_equal(solve_tridiag(np.zeros(4), np.ones(5), np.zeros(4), b), b)
    assert np.array_equal(solve_tridiag(-np.ones(4), 3 * np.ones(5), -np.ones(4), np.zeros(5)), np.zeros(5))


def test_tridiag_zero_pivot():
    with pytest.raises(ZeroDivisionError):
        solve_tridiag(np.ones(1), np.array([0.0, 1.0]), np.ones(1), np.ones(2))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), seed=st.integers(0, 10_000))
def test_tridiag_matches_dense(n, seed):
    r = np.random.default_rng(seed)
    lo, up = -r.random(n - 1), -r.random(n - 1)
    d = 2.0 + r.random(n)
    b = r.standard_normal(n)
    A = np.diag(d) + np.diag(lo, -1) + np.diag(up, 1)
    ref, _ = gaussian_elimination(A, b)
    assert np.allclose(solve_tridiag(lo, d, up, b), ref, rtol=1e-12, atol=1e-12)
