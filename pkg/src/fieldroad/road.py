"""Road equation: -Dr U'' + (mu + eta) U = nu * trace + g(u) + eta * u, U(+-ell) = 0."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FieldGrid, RoadFunction
from .linsolve import solve_tridiag
from .model import ModelParams, Reaction


@dataclass(frozen=True)
class RoadProblem:
    """One road: diffusivity, exchange rates, reaction and shift ``eta``.

    ``cap`` is the road bound (m, or m' for the second road).
    """

    Dr: float
    mu: float
    nu: float
    g: Reaction
    grid: FieldGrid
    eta: float
    cap: float

    def __post_init__(self):
        if self.eta < self.g.lipschitz:
            raise ValueError(f"shift eta={self.eta} is below the Lipschitz bound {self.g.lipschitz}")

    @classmethod
    def bottom(cls, p: ModelParams, g: Reaction, grid: FieldGrid, eta: float | None = None) -> "RoadProblem":
        return cls(p.Dp, p.mu, p.nu, g, grid, g.lipschitz if eta is None else float(eta), p.m)

    def _stencil(self, shift: float):
        n = self.grid.nx - 1
        c = self.Dr / self.grid.h1 ** 2
        off = np.full(n - 1, -c)
        return off, np.full(n, 2 * c + self.mu + shift), off


def _vals(x, grid: FieldGrid) -> np.ndarray:
    return x.interior() if isinstance(x, RoadFunction) else np.asarray(x, dtype=float)[1:-1]


def apply_T_road(prob: RoadProblem, trace: RoadFunction, u: RoadFunction) -> RoadFunction:
    """One road solve of the outer map with the field trace frozen."""
    t, uv = _vals(trace, prob.grid), _vals(u, prob.grid)
    lo, d, up = prob._stencil(prob.eta)
    rhs = prob.nu * t + prob.g(uv) + prob.eta * uv
    return RoadFunction.from_interior(prob.grid, solve_tridiag(lo, d, up, rhs))


def road_defect(prob: RoadProblem, u: RoadFunction, trace: RoadFunction) -> np.ndarray:
    uu = u.values
    h = prob.grid.h1
    lap = (uu[:-2] - 2 * uu[1:-1] + uu[2:]) / h ** 2
    return -prob.Dr * lap + prob.mu * uu[1:-1] - prob.g(uu[1:-1]) - prob.nu * _vals(trace, prob.grid)


def road_residual(prob: RoadProblem, u: RoadFunction, trace: RoadFunction) -> float:
    return float(np.max(np.abs(road_defect(prob, u, trace))))
