"""Field between two roads: bottom road (D', mu, nu, g) and top road (D'', mu', nu', h).

The top cap is m' = (nu'/mu') (mu/nu) m so that both roads share the field
cap k = (mu/nu) m = (mu'/nu') m'.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coupled import CoupledOptions, OuterReport
from .eigen import phi1_exact
from .field import FieldProblem, apply_S, field_residual
from .grid import FieldFunction, FieldGrid, RoadFunction, trace_to_road
from .linsolve import SolveOptions
from .model import (Check, ModelParams, Reaction, ValidationReport, check_lipschitz, check_road_reaction,
                    require_valid, validate_params)
from .monotone import IterationLimitError, MonotonicityError, maximal_solution
from .road import RoadProblem, apply_T_road, road_residual


@dataclass(frozen=True)
class TwoRoadParams:
    base: ModelParams
    Dpp: float
    mu_p: float
    nu_p: float

    @property
    def m_p(self) -> float:
        b = self.base
        return self.nu_p / self.mu_p * (b.mu / b.nu) * b.m

    @property
    def box_cap(self) -> float:
        return self.base.box_cap


def validate_two_road(p2: TwoRoadParams, f: Reaction, g: Reaction, h: Reaction) -> ValidationReport:
    rep = validate_params(p2.base, f, g)
    extra = {"Dpp": p2.Dpp, "mu_p": p2.mu_p, "nu_p": p2.nu_p}
    bad = [k for k, v in extra.items() if not (np.isfinite(v) and v > 0)]
    rep.checks.append(Check("positive_top_constants", not bad, float(min(extra.values())),
                            "nonpositive: " + ", ".join(bad) if bad else ""))
    if bad:
        return rep
    b = p2.base
    margin = b.mu / b.nu - p2.mu_p / p2.nu_p
    rep.checks.append(Check("road_ordering", margin >= 0, margin, "mu/nu >= mu'/nu' required"))
    mp = p2.m_p
    ident = abs(p2.mu_p / p2.nu_p * mp - b.mu / b.nu * b.m)
    rep.checks.append(Check("cap_identity", ident <= 1e-12 * max(1.0, b.m), ident, f"m'={mp:.6g}"))
    rep.checks += check_lipschitz(h, (0.0, mp), "h")
    rep.checks += check_road_reaction(h, mp, "h")
    return rep


class TwoRoadProblem:
    def __init__(self, p2: TwoRoadParams, f: Reaction, g: Reaction, h: Reaction, grid: FieldGrid,
                 opts: CoupledOptions = CoupledOptions(), lam=None, eta=None, xi=None):
        require_valid(validate_two_road(p2, f, g, h))
        if grid.mode != "two":
            grid = grid.with_mode("two")
        b = p2.base
        self.p2 = p2
        self.grid = grid
        self.opts = opts
        self.field = FieldProblem(b, f, grid, lam=lam, mu_p=p2.mu_p, nu_p=p2.nu_p,
                                  solve_opts=SolveOptions(rel_tol=opts.cg_tol))
        self.bottom = RoadProblem.bottom(b, g, grid, eta=eta)
        self.top = RoadProblem(p2.Dpp, p2.mu_p, p2.nu_p, h, grid,
                               h.lipschitz if xi is None else float(xi), p2.m_p)


def apply_S2(prob: TwoRoadProblem, z: FieldFunction, u_t, w_t) -> FieldFunction:
    return apply_S(prob.field, z, u_t, w_t)


@dataclass
class TwoRoadSolution:
    u: RoadFunction
    v: FieldFunction
    w: RoadFunction
    report: OuterReport
    residuals: dict = field(default_factory=dict)
    w_range: list = field(default_factory=list)


def _outer2(prob: TwoRoadProblem, u0: RoadFunction, w0: RoadFunction, direction: int, name: str) -> TwoRoadSolution:
    opts = prob.opts
    rep = OuterReport(name)
    u, w = u0.copy(), w0.copy()
    vbar = None
    confirming = False
    w_range = [float("inf"), float("-inf")]
    while True:
        if rep.iterations >= opts.max_outer:
            raise IterationLimitError(f"{name} two-road outer iteration exceeded {opts.max_outer} steps")
        start = vbar if (opts.warm_start and direction < 0) else None
        vbar, inner = maximal_solution(prob.field, u, opts.inner(), w_top=w, start=start)
        U = apply_T_road(prob.bottom, trace_to_road(vbar, "bottom"), u)
        W = apply_T_road(prob.top, trace_to_road(vbar, "top"), w)
        rep.iterations += 1
        rep.inner_sweeps.append(inner.sweeps)
        du, dw = U.values - u.values, W.values - w.values
        rep.final_step = float(max(np.abs(du).max(), np.abs(dw).max()))
        viol = float(min(np.min(direction * du), np.min(direction * dw)))
        rep.violations.append(viol)
        rep.u_min = min(rep.u_min, float(U.values.min()))
        rep.u_max = max(rep.u_max, float(U.values.max()))
        w_range = [min(w_range[0], float(W.values.min())), max(w_range[1], float(W.values.max()))]
        rep.v_min = min(rep.v_min, inner.min_value)
        rep.v_max = max(rep.v_max, inner.max_value)
        if viol < -opts.violation_tol:
            raise MonotonicityError(f"{name} two-road outer step {rep.iterations}: violation {-viol:.3e}")
        u, w = U, W
        if rep.final_step < opts.outer_tol:
            if confirming:
                break
            confirming = True
        else:
            confirming = False
    vbar, inner = maximal_solution(prob.field, u, opts.inner(), w_top=w,
                                   start=vbar if direction < 0 else None)
    rep.inner_sweeps.append(inner.sweeps)
    res = {
        "field": field_residual(prob.field, vbar, u, w),
        "road_bottom": road_residual(prob.bottom, u, trace_to_road(vbar, "bottom")),
        "road_top": road_residual(prob.top, w, trace_to_road(vbar, "top")),
    }
    return TwoRoadSolution(u, vbar, w, rep, res, w_range)


def solve_two_road(p2: TwoRoadParams, f: Reaction, g: Reaction, h: Reaction, grid: FieldGrid,
                   opts: CoupledOptions = CoupledOptions(), lam=None, eta=None, xi=None):
    """Upper bracket (from (m, m')) and lower bracket (from (0, 0)) of the two-road system.

    Returns ``(upper, lower)``.
    """
    prob = TwoRoadProblem(p2, f, g, h, grid, opts, lam=lam, eta=eta, xi=xi)
    g2 = prob.grid
    upper = _outer2(prob, RoadFunction.constant(g2, p2.base.m), RoadFunction.constant(g2, p2.m_p), -1, "upper")
    lower = _outer2(prob, RoadFunction.zeros(g2), RoadFunction.zeros(g2), +1, "lower")
    return upper, lower


def nontriviality_check2(sol: TwoRoadSolution, eps_bound: float, tol: float = 1e-8, sup_tol: float = 1e-10) -> dict:
    grid = sol.v.grid
    vmax = float(sol.v.values.max())
    if eps_bound > 0:
        phi = phi1_exact(grid.with_mode("one")).phi1
        v_flag = bool(np.all(sol.v.values >= eps_bound * phi.values - tol)) and vmax > 100 * sup_tol
    else:
        v_flag = vmax > 100 * sup_tol
    return {
        "v_nontrivial": v_flag,
        "u_nontrivial": bool(sol.u.values.max() > 100 * sup_tol),
        "w_nontrivial": bool(sol.w.values.max() > 100 * sup_tol),
    }
