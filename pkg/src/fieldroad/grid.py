"""Node-centred grid on the field (-ell, ell) x (0, L) and its road rows.

Field functions are stored as full nodal arrays of shape ``(nx+1, ny+1)``
indexed ``[i, j]`` with ``x1 = -ell + i*h1`` and ``x2 = j*h2``.  Solver output
is zero on the Dirichlet part of the boundary; a restricted function keeps
whatever its parent had on the new lateral edges.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

INTERIOR, ROAD, ROAD_TOP, DIRICHLET = 0, 1, 2, 3
MODES = ("one", "two")


@dataclass(frozen=True)
class FieldGrid:
    ell: float
    L: float
    nx: int
    ny: int
    mode: str = "one"

    def __post_init__(self):
        if not (self.ell > 0 and self.L > 0):
            raise ValueError(f"domain sizes must be positive, got ell={self.ell}, L={self.L}")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need nx, ny >= 4, got nx={self.nx}, ny={self.ny}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def h1(self) -> float:
        return 2.0 * self.ell / self.nx

    @property
    def h2(self) -> float:
        return self.L / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @cached_property
    def x1(self) -> np.ndarray:
        return -self.ell + self.h1 * np.arange(self.nx + 1)

    @cached_property
    def x2(self) -> np.ndarray:
        return self.h2 * np.arange(self.ny + 1)

    @cached_property
    def tags(self) -> np.ndarray:
        t = np.full(self.shape, DIRICHLET, dtype=np.int8)
        t[1:-1, 1:-1] = INTERIOR
        t[1:-1, 0] = ROAD
        if self.mode == "two":
            t[1:-1, -1] = ROAD_TOP
        t.setflags(write=False)
        return t

    @cached_property
    def unknown_mask(self) -> np.ndarray:
        m = self.tags != DIRICHLET
        m.setflags(write=False)
        return m

    @property
    def n_unknowns(self) -> int:
        return int(self.unknown_mask.sum())

    @cached_property
    def row_weight(self) -> np.ndarray:
        """Quadrature weight of each unknown: 1 inside, 1/2 on a road row."""
        t = self.tags[self.unknown_mask]
        return np.where(t == INTERIOR, 1.0, 0.5)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def node_index(self, x1: float, x2: float) -> tuple[int, int]:
        """Indices of the node at (x1, x2); raises if it is not a grid node."""
        fi = (x1 + self.ell) / self.h1
        fj = x2 / self.h2
        i, j = int(round(fi)), int(round(fj))
        if abs(fi - i) > 1e-9 or abs(fj - j) > 1e-9 or not (0 <= i <= self.nx and 0 <= j <= self.ny):
            raise ValueError(f"({x1}, {x2}) is not a node of this grid")
        return i, j

    def with_mode(self, mode: str) -> "FieldGrid":
        return FieldGrid(self.ell, self.L, self.nx, self.ny, mode)


def build_field_grid(ell: float, L: float, nx: int, ny: int, mode: str = "one") -> FieldGrid:
    return FieldGrid(float(ell), float(L), int(nx), int(ny), mode)


@dataclass
class FieldFunction:
    grid: FieldGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values have shape {self.values.shape}, grid needs {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @classmethod
    def zeros(cls, grid: FieldGrid) -> "FieldFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: FieldGrid, c: float) -> "FieldFunction":
        """c on every unknown node, 0 on the Dirichlet boundary."""
        return cls(grid, np.where(grid.unknown_mask, float(c), 0.0))

    @classmethod
    def from_unknowns(cls, grid: FieldGrid, vec: np.ndarray) -> "FieldFunction":
        vals = np.zeros(grid.shape)
        vals[grid.unknown_mask] = vec
        return cls(grid, vals)

    def unknowns(self) -> np.ndarray:
        return self.values[self.grid.unknown_mask]

    def copy(self) -> "FieldFunction":
        return FieldFunction(self.grid, self.values.copy())


@dataclass
class RoadFunction:
    """Nodal values on a road; ``values`` has length nx+1 including both endpoints."""

    grid: FieldGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx + 1,):
            raise ValueError(f"road values have shape {self.values.shape}, need ({self.grid.nx + 1},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("road values must be finite")

    @classmethod
    def zeros(cls, grid: FieldGrid) -> "RoadFunction":
        return cls(grid, np.zeros(grid.nx + 1))

    @classmethod
    def constant(cls, grid: FieldGrid, c: float) -> "RoadFunction":
        vals = np.full(grid.nx + 1, float(c))
        vals[0] = vals[-1] = 0.0
        return cls(grid, vals)

    @classmethod
    def from_interior(cls, grid: FieldGrid, vec: np.ndarray) -> "RoadFunction":
        vals = np.zeros(grid.nx + 1)
        vals[1:-1] = vec
        return cls(grid, vals)

    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def copy(self) -> "RoadFunction":
        return RoadFunction(self.grid, self.values.copy())


def trace_to_road(v: FieldFunction, side: str = "bottom") -> RoadFunction:
    """Values of v on the bottom road row (or the top one in two-road mode)."""
    if side == "bottom":
        j = 0
    elif side == "top":
        if v.grid.mode != "two":
            raise ValueError("the top road exists only in two-road mode")
        j = v.grid.ny
    else:
        raise ValueError(f"side must be 'bottom' or 'top', got {side!r}")
    return RoadFunction(v.grid, v.values[:, j].copy())


def _subgrid_offset(grid: FieldGrid, ell0: float) -> tuple[FieldGrid, int]:
    if ell0 > grid.ell + 1e-12 or ell0 <= 0:
        raise ValueError(f"cannot restrict from ell={grid.ell} to ell0={ell0}")
    off = (grid.ell - ell0) / grid.h1
    ioff = int(round(off))
    nx0 = grid.nx - 2 * ioff
    if abs(off - ioff) > 1e-9 or nx0 < 4:
        raise ValueError(f"ell0={ell0} is not aligned with grid spacing h1={grid.h1}")
    return FieldGrid(ell0, grid.L, nx0, grid.ny, grid.mode), ioff


def restrict(v: FieldFunction, ell0: float) -> FieldFunction:
    """Copy of v on the aligned sub-field (-ell0, ell0) x (0, L)."""
    sub, ioff = _subgrid_offset(v.grid, ell0)
    return FieldFunction(sub, v.values[ioff:ioff + sub.nx + 1, :].copy())


def restrict_road(u: RoadFunction, ell0: float) -> RoadFunction:
    sub, ioff = _subgrid_offset(u.grid, ell0)
    return RoadFunction(sub, u.values[ioff:ioff + sub.nx + 1].copy())


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def gradient_energy(vals: np.ndarray, h1: float, h2: float, rho: np.ndarray | None = None) -> float:
    """Discrete integral of rho(x1)^2 |grad v|^2.

    Edge differences are weighted with the trapezoid rule in the transverse
    direction, so for v vanishing on the boundary this equals v^T K v with K
    the five-point stiffness matrix (boundary rows at half weight).
    ``rho`` is sampled on the x1 nodes; edges use the mean of rho^2 at their ends.
    """
    nx, ny = vals.shape[0] - 1, vals.shape[1] - 1
    r2 = np.ones(nx + 1) if rho is None else np.asarray(rho, dtype=float) ** 2
    wy = _trapezoid_weights(ny, h2)
    wx = _trapezoid_weights(nx, h1)
    dx = np.diff(vals, axis=0) / h1
    dy = np.diff(vals, axis=1) / h2
    r2_edge = 0.5 * (r2[:-1] + r2[1:])
    ex = float(np.sum((dx ** 2) * r2_edge[:, None] * wy[None, :]) * h1)
    ey = float(np.sum((dy ** 2) * (r2 * wx)[:, None]) * h2)
    return ex + ey


def norms(v: FieldFunction) -> dict:
    """sup, L2 (trapezoid) and H1 seminorm of a field function."""
    g = v.grid
    w = np.outer(_trapezoid_weights(g.nx, g.h1), _trapezoid_weights(g.ny, g.h2))
    return {
        "sup": float(np.max(np.abs(v.values))),
        "L2": float(np.sqrt(np.sum(w * v.values ** 2))),
        "H1_semi": float(np.sqrt(gradient_energy(v.values, g.h1, g.h2))),
    }


def road_norms(u: RoadFunction) -> dict:
    g = u.grid
    l2sq = float(np.sum(_trapezoid_weights(g.nx, g.h1) * u.values ** 2))
    semi = float(np.sum(np.diff(u.values) ** 2) / g.h1)
    return {
        "sup": float(np.max(np.abs(u.values))),
        "L2": float(np.sqrt(l2sq)),
        "H1": float(np.sqrt(l2sq + semi)),
    }


def write_field_csv(v: FieldFunction, path: str | Path) -> None:
    """Row-major CSV ``x1,x2,value`` (rows of constant x2), 17 significant digits."""
    g = v.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "value"])
        for j in range(g.ny + 1):
            for i in range(g.nx + 1):
                w.writerow([f"{g.x1[i]:.17g}", f"{g.x2[j]:.17g}", f"{v.values[i, j]:.17g}"])


def write_road_csv(u: RoadFunction, path: str | Path) -> None:
    g = u.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "value"])
        for i in range(g.nx + 1):
            w.writerow([f"{g.x1[i]:.17g}", f"{u.values[i]:.17g}"])


def read_field_csv(grid: FieldGrid, path: str | Path) -> FieldFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    vals = data[:, 2].reshape(grid.ny + 1, grid.nx + 1).T
    return FieldFunction(grid, vals)


def read_road_csv(grid: FieldGrid, path: str | Path) -> RoadFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return RoadFunction(grid, data[:, 1])
