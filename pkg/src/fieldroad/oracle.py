"""Independent checks for the elliptic solvers.

* ``parabolic_relax`` marches the time-dependent field-road system with
  explicit Euler until it stops moving.  It evaluates the stencils directly on
  the nodal arrays and shares no code with the assembly or the linear solvers.
* ``dense_reference_solve`` redoes one application of S with Gaussian
  elimination on the dense matrix.
* ``manufactured_convergence`` measures the order of the linear field solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .field import FieldProblem, solve_linear
from .grid import FieldFunction, FieldGrid, RoadFunction, build_field_grid
from .linsolve import SolveOptions
from .model import ModelParams, Reaction, box_cap, zero_reaction

DENSE_LIMIT = 400


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class ParabolicOptions:
    dt: float | None = None
    t_end: float = 1e4
    steady_tol: float = 1e-9
    check_box: bool = True


def stability_limit(p: ModelParams, grid: FieldGrid) -> float:
    """Explicit-Euler step bound min(h1^2, h2^2) / (4 max(D, D'))."""
    return min(grid.h1, grid.h2) ** 2 / (4 * max(p.D, p.Dp))


def monotone_step_limit(p: ModelParams, f: Reaction, g: Reaction, grid: FieldGrid) -> float:
    """Largest dt for which every nodal update is a nondecreasing function of the old state."""
    h1, h2 = grid.h1, grid.h2
    field_road = 2 * p.D / h1 ** 2 + 2 * p.D / h2 ** 2 + 2 * p.nu / h2 + f.lipschitz
    road = 2 * p.Dp / h1 ** 2 + p.mu + g.lipschitz
    return 1.0 / max(field_road, road)


def _rhs(p: ModelParams, f: Reaction, g: Reaction, grid: FieldGrid, u: np.ndarray, v: np.ndarray):
    h1, h2 = grid.h1, grid.h2
    dv = np.zeros_like(v)
    c = v[1:-1, :-1]
    lap_x = (v[:-2, :-1] - 2 * c + v[2:, :-1]) / h1 ** 2
    lap_y = np.empty_like(c)
    lap_y[:, 1:] = (v[1:-1, :-2] - 2 * c[:, 1:] + v[1:-1, 2:]) / h2 ** 2
    # ghost node below the road: v(-h2) = v(h2) + (2 h2 / D)(mu u - nu v)
    lap_y[:, 0] = 2 * (v[1:-1, 1] - v[1:-1, 0]) / h2 ** 2
    dv[1:-1, :-1] = p.D * (lap_x + lap_y) + f(c)
    dv[1:-1, 0] += 2.0 / h2 * (p.mu * u[1:-1] - p.nu * v[1:-1, 0])
    du = np.zeros_like(u)
    du[1:-1] = (p.Dp * (u[:-2] - 2 * u[1:-1] + u[2:]) / h1 ** 2 + g(u[1:-1])
                + p.nu * v[1:-1, 0] - p.mu * u[1:-1])
    return du, dv


def parabolic_relax(p: ModelParams, f: Reaction, g: Reaction, u0: RoadFunction, v0: FieldFunction,
                    opts: ParabolicOptions = ParabolicOptions(), callback: Callable | None = None):
    """March u_t = D'u'' + g(u) + nu v(.,0) - mu u, v_t = D Lap v + f(v) to steady state.

    Returns ``(u, v, steps)``.  Stops when the sup-norm change per unit time
    drops below ``steady_tol`` or at ``t_end``.
    """
    grid = v0.grid
    limit = min(stability_limit(p, grid), monotone_step_limit(p, f, g, grid))
    dt = 0.9 * limit if opts.dt is None else opts.dt
    if dt > stability_limit(p, grid) * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds the explicit stability limit {stability_limit(p, grid):g}")
    k = box_cap(p)
    u = u0.values.astype(float).copy()
    v = v0.values.astype(float).copy()
    u[[0, -1]] = 0.0
    v[[0, -1], :] = 0.0
    v[:, -1] = 0.0
    steps = 0
    t = 0.0
    while t < opts.t_end:
        du, dv = _rhs(p, f, g, grid, u, v)
        u += dt * du
        v += dt * dv
        steps += 1
        t += dt
        vmax = v.max()
        if not np.isfinite(vmax) or vmax > 10 * k or u.max() > 10 * k:
            raise BlowUpError(f"parabolic relaxation blew up at t={t:g}")
        if opts.check_box:
            slack = 1e-12
            if v.min() < -slack or vmax > k + slack or u.min() < -slack or u.max() > p.m + slack:
                raise AssertionError(f"parabolic state left the invariant box at step {steps}")
        rate = max(np.abs(du).max(), np.abs(dv).max())
        if callback is not None:
            callback(steps, t, rate)
        if rate < opts.steady_tol:
            break
    return RoadFunction(grid, u), FieldFunction(grid, v), steps


def gaussian_elimination(A: np.ndarray, b: np.ndarray):
    """Dense elimination without pivoting; returns (x, pivots)."""
    M = np.array(A, dtype=float)
    y = np.array(b, dtype=float)
    n = len(y)
    pivots = np.empty(n)
    for i in range(n):
        piv = M[i, i]
        if piv == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        pivots[i] = piv
        factors = M[i + 1:, i] / piv
        M[i + 1:, i:] -= np.outer(factors, M[i, i:])
        y[i + 1:] -= factors * y[i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - M[i, i + 1:] @ x[i + 1:]) / M[i, i]
    return x, pivots


def dense_reference_solve(prob: FieldProblem, z: FieldFunction, w, w_top=None, return_pivots: bool = False):
    """Same system as ``apply_S`` solved by dense elimination (at most 400 unknowns)."""
    g = prob.grid
    if g.n_unknowns > DENSE_LIMIT:
        raise ValueError(f"{g.n_unknowns} unknowns exceeds the dense limit {DENSE_LIMIT}")
    zu = z.unknowns()
    rhs = g.row_weight * (prob.f(zu) + prob.lam * zu) + prob.robin_source(w, w_top)
    x, piv = gaussian_elimination(prob.operator.toarray(), rhs)
    y = FieldFunction.from_unknowns(g, x)
    return (y, piv) if return_pivots else y


@dataclass(frozen=True)
class Manufactured:
    """Exact field with its Laplacian and its x2-derivative (all vectorised)."""

    name: str
    value: Callable
    laplacian: Callable
    d2: Callable


def sine_product(ell: float, L: float) -> Manufactured:
    a, b = np.pi / (2 * ell), np.pi / L
    return Manufactured(
        "sin-sin",
        lambda x1, x2: np.sin(a * (x1 + ell)) * np.sin(b * x2),
        lambda x1, x2: -(a * a + b * b) * np.sin(a * (x1 + ell)) * np.sin(b * x2),
        lambda x1, x2: b * np.sin(a * (x1 + ell)) * np.cos(b * x2),
    )


def sine_parabola(ell: float, L: float) -> Manufactured:
    a = np.pi / (2 * ell)
    return Manufactured(
        "sin-parabola",
        lambda x1, x2: np.sin(a * (x1 + ell)) * (L - x2) * x2,
        lambda x1, x2: np.sin(a * (x1 + ell)) * (-(a * a) * (L - x2) * x2 - 2.0),
        lambda x1, x2: np.sin(a * (x1 + ell)) * (L - 2 * x2),
    )


def sine_cosine(ell: float, L: float) -> Manufactured:
    """Nonzero on the road, so the Robin term is exercised."""
    a, b = np.pi / (2 * ell), np.pi / (2 * L)
    return Manufactured(
        "sin-cos",
        lambda x1, x2: np.sin(a * (x1 + ell)) * np.cos(b * x2),
        lambda x1, x2: -(a * a + b * b) * np.sin(a * (x1 + ell)) * np.cos(b * x2),
        lambda x1, x2: -b * np.sin(a * (x1 + ell)) * np.sin(b * x2),
    )


def quadratic_linear(ell: float, L: float) -> Manufactured:
    """(ell^2 - x1^2)(L - x2): reproduced exactly by the stencils."""
    return Manufactured(
        "quadratic-linear",
        lambda x1, x2: (ell ** 2 - x1 ** 2) * (L - x2),
        lambda x1, x2: -2.0 * (L - x2) + 0.0 * x1,
        lambda x1, x2: -(ell ** 2 - x1 ** 2) + 0.0 * x2,
    )


def manufactured_error(exact: Manufactured, grid: FieldGrid, p: ModelParams, lam: float = 1.0,
                       cg_tol: float = 1e-13) -> float:
    """Sup error of the linear field solve against ``exact``.

    Source ``-D Lap v* + lam v*`` inside; road data w from
    ``mu w = -D dv*/dx2 + nu v*`` at x2 = 0.
    """
    prob = FieldProblem(p, zero_reaction("field", 1.0), grid, lam=lam, solve_opts=SolveOptions(rel_tol=cg_tol))
    X1, X2 = grid.meshgrid()
    mask = grid.unknown_mask
    src = (-p.D * exact.laplacian(X1, X2) + lam * exact.value(X1, X2))[mask]
    x1 = grid.x1
    zero = np.zeros_like(x1)
    w = (-p.D * exact.d2(x1, zero) + p.nu * exact.value(x1, zero)) / p.mu
    y = solve_linear(prob, src, RoadFunction(grid, w))
    return float(np.max(np.abs(y.values - np.where(mask, exact.value(X1, X2), 0.0))))


def observed_orders(hs, errors) -> list[float]:
    hs, errors = np.asarray(hs, float), np.asarray(errors, float)
    return [float(x) for x in np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:])]


def manufactured_convergence(grids, p: ModelParams, exact: Manufactured | None = None, lam: float = 1.0) -> dict:
    """Errors and observed orders over a refinement chain of (nx, ny) pairs."""
    if len(grids) < 3:
        raise ValueError("need at least three grids")
    exact = exact or sine_product(p.ell, p.L)
    errs, hs = [], []
    for nx, ny in grids:
        grid = build_field_grid(p.ell, p.L, nx, ny)
        errs.append(manufactured_error(exact, grid, p, lam))
        hs.append(max(grid.h1, grid.h2))
    return {"exact": exact.name, "h": hs, "errors": errs, "orders": observed_orders(hs, errs)}
