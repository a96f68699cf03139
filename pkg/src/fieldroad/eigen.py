"""Principal Dirichlet eigenpair of the rectangle and the KPP amplitude epsilon."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import FieldFunction, FieldGrid
from .linsolve import ConvergenceError, SolveOptions, SparseOperator, solve_spd
from .model import ModelParams, Reaction, box_cap

DEFAULT_PROBES = tuple(10.0 ** -k for k in range(1, 9))
EPS_SAFETY = 0.99
EPS_FLOOR = 1e-12


@dataclass
class EigenPair:
    lambda1: float
    phi1: FieldFunction


def lambda1_closed_form(ell: float, L: float) -> float:
    if not (ell > 0 and L > 0):
        raise ValueError("ell and L must be positive")
    return (np.pi / (2 * ell)) ** 2 + (np.pi / L) ** 2


def phi1_exact(grid: FieldGrid) -> EigenPair:
    """Product of sines sampled at the nodes; equals 1 at (0, L/2)."""
    if grid.nx % 2 or grid.ny % 2:
        raise ValueError("nx and ny must be even so that (0, L/2) is a node")
    X1, X2 = grid.meshgrid()
    vals = np.sin(np.pi / (2 * grid.ell) * (X1 + grid.ell)) * np.sin(np.pi / grid.L * X2)
    vals[0, :] = vals[-1, :] = 0.0
    vals[:, 0] = vals[:, -1] = 0.0
    vals[grid.nx // 2, grid.ny // 2] = 1.0
    return EigenPair(lambda1_closed_form(grid.ell, grid.L), FieldFunction(grid, vals))


def dirichlet_laplacian(grid: FieldGrid) -> SparseOperator:
    """-Lap_h on the (nx-1)*(ny-1) strictly interior nodes, all edges Dirichlet."""
    def lap1d(n, h):
        e = np.ones(n - 1)
        return sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1]) / h ** 2

    Ax, Ay = lap1d(grid.nx, grid.h1), lap1d(grid.ny, grid.h2)
    Ix, Iy = sp.identity(grid.nx - 1), sp.identity(grid.ny - 1)
    # unknown (i, j) -> (i-1)*(ny-1) + (j-1), matching C order of values[1:-1, 1:-1]
    return SparseOperator(sp.kron(Ax, Iy) + sp.kron(Ix, Ay))


def discrete_eigenpair(grid: FieldGrid, tol: float = 1e-12, max_iter: int = 500):
    """Inverse power iteration; returns (lambda_h, eigenvector on the full grid)."""
    A = dirichlet_laplacian(grid)
    opts = SolveOptions(rel_tol=min(1e-13, tol))
    x = np.ones(A.dimension)
    x /= np.linalg.norm(x)
    lam = float(x @ (A @ x))
    for _ in range(max_iter):
        y = solve_spd(A, x, opts, x0=x / lam)
        y /= np.linalg.norm(y)
        new = float(y @ (A @ y))
        x = y
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    else:
        raise ConvergenceError(f"inverse iteration did not converge in {max_iter} steps")
    vals = np.zeros(grid.shape)
    vals[1:-1, 1:-1] = x.reshape(grid.nx - 1, grid.ny - 1)
    return lam, FieldFunction(grid, vals)


def discrete_lambda1(grid: FieldGrid, tol: float = 1e-12) -> float:
    return discrete_eigenpair(grid, tol)[0]


def kpp_condition(p: ModelParams, f: Reaction, s_probe=DEFAULT_PROBES) -> bool:
    """lambda_1 <= f(s) / (D s) at every probe s."""
    lam1 = lambda1_closed_form(p.ell, p.L)
    s = np.asarray(s_probe, dtype=float)
    return bool(np.all(lam1 <= f(s) / (p.D * s)))


def choose_epsilon(p: ModelParams, f: Reaction, grid: FieldGrid) -> float:
    """Largest eps with D*lambda_1*eps*phi_1 <= f(eps*phi_1) at every node, times 0.99.

    Found by bisection over (0, k]; the admissible set is assumed to be an
    interval starting at 0.
    """
    lam1 = lambda1_closed_form(grid.ell, grid.L)
    phi = phi1_exact(grid).phi1.values.ravel()
    phi = phi[phi > 0]

    def ok(eps):
        s = eps * phi
        return bool(np.all(p.D * lam1 * s <= f(s)))

    lo, hi = 0.0, box_cap(p)
    if ok(hi):
        return EPS_SAFETY * hi
    if not ok(EPS_FLOOR):
        raise ValueError(f"no admissible epsilon down to {EPS_FLOOR:g}; the KPP condition fails on this grid")
    lo = EPS_FLOOR
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return EPS_SAFETY * lo
