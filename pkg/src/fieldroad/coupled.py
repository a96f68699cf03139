"""Outer fixed-point iteration on the road density.

T(u) = road solve fed by the trace of the maximal field solution for w = u.
T is monotone and maps [0, m] into itself, so iterating from 0 and from m
gives a nondecreasing and a nonincreasing sequence of road densities whose
limits are fixed points, i.e. solutions of the coupled system.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .eigen import kpp_condition, phi1_exact
from .field import FieldProblem, field_residual
from .grid import FieldFunction, FieldGrid, RoadFunction, trace_to_road
from .linsolve import SolveOptions
from .model import ModelParams, Reaction, require_valid, validate_params
from .monotone import IterationLimitError, IterationOptions, MonotonicityError, maximal_solution
from .road import RoadProblem, apply_T_road, road_residual

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoupledOptions:
    outer_tol: float = 1e-8
    max_outer: int = 2000
    sup_tol: float = 1e-10
    max_sweeps: int = 10_000
    cg_tol: float = 1e-12
    violation_tol: float = 1e-8
    warm_start: bool = True

    def inner(self) -> IterationOptions:
        return IterationOptions(sup_tol=self.sup_tol, max_sweeps=self.max_sweeps)


@dataclass
class OuterReport:
    bracket: str
    iterations: int = 0
    final_step: float = float("inf")
    inner_sweeps: list[int] = field(default_factory=list)
    violations: list[float] = field(default_factory=list)
    u_min: float = float("inf")
    u_max: float = float("-inf")
    v_min: float = float("inf")
    v_max: float = float("-inf")

    def as_dict(self) -> dict:
        return {
            "bracket": self.bracket,
            "outer_iterations": self.iterations,
            "final_step": self.final_step,
            "inner_sweeps_total": int(sum(self.inner_sweeps)),
            "worst_violation": min(self.violations) if self.violations else 0.0,
            "u_range": [self.u_min, self.u_max],
            "v_range": [self.v_min, self.v_max],
        }


@dataclass
class CoupledSolution:
    u: RoadFunction
    v: FieldFunction
    report: OuterReport
    field_residual: float
    road_residual: float

    @property
    def bracket(self) -> str:
        return self.report.bracket


class CoupledProblem:
    """Field and road sub-problems sharing one grid."""

    def __init__(self, p: ModelParams, f: Reaction, g: Reaction, grid: FieldGrid,
                 opts: CoupledOptions = CoupledOptions(), lam: float | None = None, eta: float | None = None):
        require_valid(validate_params(p, f, g))
        self.params = p
        self.grid = grid
        self.opts = opts
        self.field = FieldProblem(p, f, grid, lam=lam, solve_opts=SolveOptions(rel_tol=opts.cg_tol))
        self.road = RoadProblem.bottom(p, g, grid, eta=eta)

    def maximal_field(self, u: RoadFunction, start: FieldFunction | None = None):
        return maximal_solution(self.field, u, self.opts.inner(), start=start)


def outer_T(prob: CoupledProblem, u: RoadFunction, v_start: FieldFunction | None = None):
    """One application of T.  Returns ``(U, v_bar, inner_report)``.

    ``v_start`` must be a supersolution for w = u (e.g. the maximal field of a
    larger road density); by default the iteration starts at k.
    """
    vbar, rep = prob.maximal_field(u, start=v_start)
    U = apply_T_road(prob.road, trace_to_road(vbar), u)
    return U, vbar, rep


def _outer(prob: CoupledProblem, u0: RoadFunction, direction: int, name: str) -> CoupledSolution:
    opts = prob.opts
    rep = OuterReport(name)
    u = u0.copy()
    vbar = None
    confirming = False
    while True:
        if rep.iterations >= opts.max_outer:
            raise IterationLimitError(f"{name} outer iteration exceeded {opts.max_outer} steps "
                                      f"(last step {rep.final_step:.3e})")
        # warm start is only valid going down: the previous field is then a supersolution
        start = vbar if (opts.warm_start and direction < 0) else None
        U, vbar, inner = outer_T(prob, u, start)
        rep.iterations += 1
        rep.inner_sweeps.append(inner.sweeps)
        diff = U.values - u.values
        rep.final_step = float(np.max(np.abs(diff)))
        viol = float(np.min(direction * diff))
        rep.violations.append(viol)
        rep.u_min, rep.u_max = min(rep.u_min, float(U.values.min())), max(rep.u_max, float(U.values.max()))
        rep.v_min = min(rep.v_min, inner.min_value)
        rep.v_max = max(rep.v_max, inner.max_value)
        if viol < -opts.violation_tol:
            raise MonotonicityError(f"{name} outer step {rep.iterations}: monotonicity violated by {-viol:.3e}")
        u = U
        log.debug("%s outer %d: step %.3e, inner sweeps %d", name, rep.iterations, rep.final_step, inner.sweeps)
        if rep.final_step < opts.outer_tol:
            if confirming:
                break
            confirming = True
        else:
            confirming = False
    # the field that matches the final road density
    vbar, inner = prob.maximal_field(u, start=vbar if direction < 0 else None)
    rep.inner_sweeps.append(inner.sweeps)
    return CoupledSolution(
        u=u, v=vbar, report=rep,
        field_residual=field_residual(prob.field, vbar, u),
        road_residual=road_residual(prob.road, u, trace_to_road(vbar)),
    )


def solve_coupled(p: ModelParams, f: Reaction, g: Reaction, grid: FieldGrid,
                  opts: CoupledOptions = CoupledOptions(), lam=None, eta=None):
    """Both outer brackets: from u = 0 (lower) and from u = m (upper)."""
    prob = CoupledProblem(p, f, g, grid, opts, lam=lam, eta=eta)
    if not kpp_condition(p, f):
        warnings.warn("KPP condition fails: the constructed solution may be trivial", RuntimeWarning, stacklevel=2)
    lower = _outer(prob, RoadFunction.zeros(grid), +1, "lower")
    upper = _outer(prob, RoadFunction.constant(grid, p.m), -1, "upper")
    gap = float(np.min(upper.u.values - lower.u.values))
    if gap < -opts.violation_tol:
        raise MonotonicityError(f"lower road bracket exceeds the upper one by {-gap:.3e}")
    return lower, upper


def nontriviality_check(sol: CoupledSolution, eps_bound: float, tol: float = 1e-8,
                        sup_tol: float = 1e-10, phi1: FieldFunction | None = None) -> dict:
    """v above eps*phi_1 (or merely nonzero when eps_bound = 0) and u not identically 0."""
    grid = sol.v.grid
    vmax = float(sol.v.values.max())
    if eps_bound > 0:
        phi = phi1_exact(grid.with_mode("one")).phi1 if phi1 is None else phi1
        above = bool(np.all(sol.v.values >= eps_bound * phi.values - tol))
        v_flag = above and vmax > 100 * sup_tol
    else:
        v_flag = vmax > 100 * sup_tol
    return {"v_nontrivial": v_flag, "u_nontrivial": bool(sol.u.values.max() > 100 * sup_tol)}
