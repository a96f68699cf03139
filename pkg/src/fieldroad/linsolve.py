"""Symmetric positive definite solves: Jacobi-preconditioned CG and Thomas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ConvergenceError(RuntimeError):
    """An iterative method hit its iteration cap; ``history`` holds the residuals."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history or [])


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    rel_tol: float = 1e-12
    max_iter: int | None = None
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


class SparseOperator:
    """CSR matrix that has been checked for symmetry and a positive diagonal."""

    def __init__(self, matrix, check_m_matrix: bool = False):
        A = sp.csr_matrix(matrix, dtype=float)
        A.sum_duplicates()
        A.sort_indices()
        if A.shape[0] != A.shape[1]:
            raise AssemblyError(f"operator is not square: {A.shape}")
        asym = abs(A - A.T)
        scale = abs(A).max() if A.nnz else 1.0
        if asym.nnz and asym.max() > 1e-14 * scale:
            raise AssemblyError(f"operator not symmetric (max |A - A^T| = {asym.max():.3e})")
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise AssemblyError("operator diagonal must be strictly positive")
        self.matrix = A
        self.diag = diag
        self.symmetric = True
        if check_m_matrix:
            assert_m_matrix(self)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, x):
        return self.matrix @ x

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def assert_m_matrix(A: SparseOperator) -> None:
    """Nonpositive off-diagonals and weak diagonal dominance, strict in some row."""
    M = A.matrix.tocoo()
    off = M.row != M.col
    if np.any(M.data[off] > 0):
        raise AssemblyError("positive off-diagonal entry; operator is not an M-matrix")
    rowsum = np.asarray(A.matrix.sum(axis=1)).ravel()
    slack = 1e-12 * A.diag
    if np.any(rowsum < -slack):
        raise AssemblyError("diagonal does not dominate; operator is not an M-matrix")
    if not np.any(rowsum > slack):
        raise AssemblyError("no strictly dominant row; operator may be singular")


def solve_spd(A: SparseOperator, b, opts: SolveOptions = SolveOptions(), x0=None) -> np.ndarray:
    """Preconditioned conjugate gradients.

    Returns x with ||A x - b||_2 <= rel_tol * ||b||_2.  The loop is written
    with plain numpy reductions so that identical inputs give identical bits.
    """
    b = np.asarray(b, dtype=float)
    n = A.dimension
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")
    bnorm = float(np.sqrt(b @ b))
    if bnorm == 0.0:
        return np.zeros(n)
    max_iter = opts.max_iter if opts.max_iter is not None else 20 * n
    target = opts.rel_tol * bnorm
    inv_d = 1.0 / A.diag if opts.preconditioner == "jacobi" else np.ones(n)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A.matrix @ x if x0 is not None else b.copy()
    rnorm = float(np.sqrt(r @ r))
    history = [rnorm]
    if rnorm <= target:
        return x
    z = inv_d * r
    p = z.copy()
    rz = float(r @ z)
    for _ in range(max_iter):
        Ap = A.matrix @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rnorm = float(np.sqrt(r @ r))
        history.append(rnorm)
        if rnorm <= target:
            # guard against drift of the recursively updated residual
            true_r = b - A.matrix @ x
            rnorm = float(np.sqrt(true_r @ true_r))
            if rnorm <= target:
                return x
            # restart from the true residual; the old direction is no longer conjugate
            r = true_r
            z = inv_d * r
            p = z.copy()
            rz = float(r @ z)
            continue
        z = inv_d * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"CG did not reach rel_tol={opts.rel_tol:g} in {max_iter} iterations "
        f"(residual {history[-1]:.3e}, target {target:.3e})",
        history,
    )


def solve_tridiag(lower, diag, upper, b) -> np.ndarray:
    """Thomas algorithm for a tridiagonal system.

    ``lower`` and ``upper`` have length n-1 (``lower[i]`` sits at row i+1,
    column i).  No pivoting, so the system should be diagonally dominant.
    """
    a = np.asarray(lower, dtype=float)
    d = np.asarray(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    rhs = np.asarray(b, dtype=float)
    n = d.size
    if a.size != n - 1 or c.size != n - 1 or rhs.size != n:
        raise ValueError("inconsistent tridiagonal sizes")
    cp = np.empty(n)
    dp = np.empty(n)
    piv = d[0]
    if piv == 0.0:
        raise ZeroDivisionError("zero pivot at row 0")
    cp[0] = c[0] / piv if n > 1 else 0.0
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = d[i] - a[i - 1] * cp[i - 1]
        if piv == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        cp[i] = c[i] / piv if i < n - 1 else 0.0
        dp[i] = (rhs[i] - a[i - 1] * dp[i - 1]) / piv
    x = np.empty(n)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x
