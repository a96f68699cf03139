"""Five-point discretisation of the field equation with Robin road rows.

Every equation is written per unit cell area (h1*h2).  Interior rows carry the
usual ``-D Lap_h v + lam v``.  On a road row the flux condition
``D dv/dn = mu*u - nu*v`` is folded in through a ghost node and the row is
halved, which makes the matrix symmetric and equal to the trapezoid-rule
weak form: half-weight volume terms plus ``nu/h2`` on the diagonal and
``mu/h2 * u`` on the right.
"""

from __future__ import annotations

import warnings
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .grid import DIRICHLET, INTERIOR, ROAD, ROAD_TOP, FieldFunction, FieldGrid, RoadFunction
from .linsolve import SolveOptions, SparseOperator, assert_m_matrix, solve_spd
from .model import ModelParams, Reaction, box_cap

BOX_SLACK = 1e-8


class FieldProblem:
    """Field equation data plus the shift ``lam`` of the linearised map S.

    With ``mu_p``/``nu_p`` given the grid must be in two-road mode and the top
    row becomes a second Robin road.
    """

    def __init__(self, params: ModelParams, f: Reaction, grid: FieldGrid, lam: float | None = None,
                 mu_p: float | None = None, nu_p: float | None = None,
                 solve_opts: SolveOptions = SolveOptions()):
        two = mu_p is not None or nu_p is not None
        if two and (mu_p is None or nu_p is None):
            raise ValueError("two-road mode needs both mu_p and nu_p")
        if (grid.mode == "two") != two:
            raise ValueError(f"grid mode {grid.mode!r} does not match the problem's road count")
        self.params = params
        self.f = f
        self.grid = grid
        self.lam = f.lipschitz if lam is None else float(lam)
        if self.lam < f.lipschitz:
            raise ValueError(f"shift lam={self.lam} is below the Lipschitz bound {f.lipschitz}")
        self.mu_p = mu_p
        self.nu_p = nu_p
        self.solve_opts = solve_opts

    @property
    def mode(self) -> str:
        return self.grid.mode

    @property
    def k(self) -> float:
        return box_cap(self.params)

    @cached_property
    def operator(self) -> SparseOperator:
        return assemble_field_operator(self)

    @cached_property
    def stiffness(self) -> SparseOperator:
        """The operator with lam = 0 (diffusion plus Robin diagonal)."""
        return assemble_field_operator(self, lam=0.0)

    @cached_property
    def _tag_unknowns(self) -> np.ndarray:
        return self.grid.tags[self.grid.unknown_mask]

    def robin_source(self, w: RoadFunction, w_top: RoadFunction | None = None) -> np.ndarray:
        """Right-hand side contribution mu/h2 * w on the road rows."""
        g = self.grid
        out = np.zeros(g.n_unknowns)
        t = self._tag_unknowns
        out[t == ROAD] = self.params.mu / g.h2 * _road_vals(w, g)
        if self.mode == "two":
            if w_top is None:
                raise ValueError("two-road problem needs the top road function")
            out[t == ROAD_TOP] = self.mu_p / g.h2 * _road_vals(w_top, g)
        return out


def _road_vals(w, grid: FieldGrid) -> np.ndarray:
    if isinstance(w, RoadFunction):
        return w.interior()
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.nx - 1, float(arr))
    if arr.shape == (grid.nx + 1,):
        return arr[1:-1]
    if arr.shape == (grid.nx - 1,):
        return arr
    raise ValueError(f"road data has shape {arr.shape}")


def assemble_field_operator(prob: FieldProblem, lam: float | None = None) -> SparseOperator:
    """Symmetric M-matrix over the unknown nodes (interior plus road rows)."""
    g = prob.grid
    D = prob.params.D
    lam = prob.lam if lam is None else lam
    idx = np.full(g.shape, -1, dtype=np.int64)
    idx[g.unknown_mask] = np.arange(g.n_unknowns)
    tags = g.tags
    road_rows = [0, g.ny] if prob.mode == "two" else [0]
    diag = np.zeros(g.shape)
    rows, cols, vals = [], [], []

    def couple(a_idx, b_idx, c):
        # edge between node sets a and b with conductance c
        np.add.at(diag, a_idx, c)
        np.add.at(diag, b_idx, c)
        ia, ib = idx[a_idx], idx[b_idx]
        both = (ia >= 0) & (ib >= 0)
        rows.extend([ia[both], ib[both]])
        cols.extend([ib[both], ia[both]])
        vals.extend([-c[both], -c[both]])

    # horizontal edges, halved on the road rows
    ii, jj = np.meshgrid(np.arange(g.nx), np.arange(g.ny + 1), indexing="ij")
    cx = D / g.h1 ** 2 * np.where(np.isin(jj, road_rows), 0.5, 1.0)
    keep = (tags[ii, jj] != DIRICHLET) | (tags[ii + 1, jj] != DIRICHLET)
    couple((ii[keep], jj[keep]), (ii[keep] + 1, jj[keep]), cx[keep])
    # vertical edges
    ii, jj = np.meshgrid(np.arange(g.nx + 1), np.arange(g.ny), indexing="ij")
    keep = (tags[ii, jj] != DIRICHLET) | (tags[ii, jj + 1] != DIRICHLET)
    cy = np.full(keep.sum(), D / g.h2 ** 2)
    couple((ii[keep], jj[keep]), (ii[keep], jj[keep] + 1), cy)

    weight = np.where(tags == INTERIOR, 1.0, 0.5)
    diag += lam * weight
    diag[tags == ROAD] += prob.params.nu / g.h2
    if prob.mode == "two":
        diag[tags == ROAD_TOP] += prob.nu_p / g.h2

    n = g.n_unknowns
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag[g.unknown_mask])
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    op = SparseOperator(A)
    assert_m_matrix(op)
    return op


def _check_box(prob: FieldProblem, z: np.ndarray, what: str) -> None:
    k = prob.k
    if z.size and (z.min() < -BOX_SLACK or z.max() > k + BOX_SLACK):
        warnings.warn(f"{what} leaves the box [0, {k:g}]: range [{z.min():.3e}, {z.max():.3e}]",
                      RuntimeWarning, stacklevel=3)


def solve_linear(prob: FieldProblem, source: np.ndarray, w, w_top=None, x0=None) -> FieldFunction:
    """Solve ``(K + lam*W) y = W*source + robin terms`` on the unknowns.

    ``source`` is given per unknown node (the pointwise right-hand side of
    the strong equation); W holds the row weights.
    """
    g = prob.grid
    rhs = g.row_weight * source + prob.robin_source(w, w_top)
    y = solve_spd(prob.operator, rhs, prob.solve_opts, x0=x0)
    return FieldFunction.from_unknowns(g, y)


def apply_S(prob: FieldProblem, z: FieldFunction, w, w_top=None, x0=None) -> FieldFunction:
    """One application of the monotone map: solve with source f(z) + lam*z."""
    zu = z.unknowns()
    _check_box(prob, zu, "iterate z")
    wv = _road_vals(w, prob.grid)
    if wv.size and (wv.min() < -BOX_SLACK or wv.max() > prob.params.m + BOX_SLACK):
        warnings.warn("road data w leaves [0, m]", RuntimeWarning, stacklevel=2)
    src = prob.f(zu) + prob.lam * zu
    guess = x0.unknowns() if isinstance(x0, FieldFunction) else x0
    return solve_linear(prob, src, w, w_top, x0=guess)


def semilinear_defect(prob: FieldProblem, v: FieldFunction, w, w_top=None) -> np.ndarray:
    """Per-unknown defect ``K v - W f(v) - robin source`` (row-scaled form)."""
    vu = v.unknowns()
    return prob.stiffness @ vu - prob.grid.row_weight * prob.f(vu) - prob.robin_source(w, w_top)


def field_residual(prob: FieldProblem, v: FieldFunction, w, w_top=None) -> float:
    """Sup-norm residual of the discrete semilinear field problem."""
    d = semilinear_defect(prob, v, w, w_top)
    return float(np.max(np.abs(d))) if d.size else 0.0
