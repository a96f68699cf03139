"""Domain-growth study: solve on growing rectangles and watch a fixed window.

For each half-width ell the coupled upper solution is computed on
(-ell, ell) x (0, L) with the same mesh spacing, then restricted to the
window (-ell0, ell0) x (0, L).  Uniform bounds on the window, a positive
interior floor and shrinking differences between successive restrictions are
what a limit on the whole strip needs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .coupled import CoupledOptions, solve_coupled
from .eigen import choose_epsilon, phi1_exact
from .field import FieldProblem, semilinear_defect
from .grid import FieldFunction, FieldGrid, RoadFunction, build_field_grid, gradient_energy, restrict, restrict_road, road_norms
from .model import ModelParams, Reaction, require_valid, validate_params

PLATEAU_TOL = 0.05
CSV_COLUMNS = ("ell", "h1_field", "h1_road", "interior_min", "diff_prev")


@dataclass(frozen=True)
class GrowthStudyConfig:
    ell0: float
    ells: tuple[float, ...]
    h: float = 0.25
    ny: int | None = None
    opts: CoupledOptions = CoupledOptions()
    floor_tol: float = 1e-6

    def __post_init__(self):
        ells = tuple(float(e) for e in self.ells)
        object.__setattr__(self, "ells", ells)
        if not ells:
            raise ValueError("ells must not be empty")
        if any(b <= a for a, b in zip(ells, ells[1:])):
            raise ValueError(f"ells must be strictly increasing, got {ells}")
        for e in ells:
            if e < self.ell0 + 1:
                raise ValueError(f"ell={e:g} leaves no room for the cutoff: need ell >= ell0 + 1 = {self.ell0 + 1:g}")
        if not self.h > 0:
            raise ValueError("h must be positive")
        for e in (self.ell0,) + ells:
            n = 2 * e / self.h
            if abs(n - round(n)) > 1e-9:
                raise ValueError(f"2*{e:g} is not a multiple of h={self.h:g}")

    def grid(self, ell: float, L: float) -> FieldGrid:
        ny = self.ny if self.ny is not None else int(round(L / self.h))
        return build_field_grid(ell, L, int(round(2 * ell / self.h)), ny)


@dataclass
class GrowthRow:
    ell: float
    h1_field: float
    h1_road: float
    interior_min: float
    diff_prev: float | None
    localized_energy: float
    eps_defect: float


@dataclass
class GrowthReport:
    ell0: float
    eps: float
    floor: float
    rows: list[GrowthRow] = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            d = "" if r.diff_prev is None else f"{r.diff_prev:.17g}"
            w.writerow([f"{r.ell:.17g}", f"{r.h1_field:.17g}", f"{r.h1_road:.17g}", f"{r.interior_min:.17g}", d])
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            "ell0": self.ell0,
            "eps": self.eps,
            "interior_floor": self.floor,
            "rows": [r.__dict__.copy() for r in self.rows],
            "checks": self.checks,
            "failures": list(self.failures),
            "ok": self.ok,
        }


def cutoff_rho(grid: FieldGrid, ell0: float) -> np.ndarray:
    """Trapezoid in x1: 1 on [-ell0, ell0], linear ramps of width 1, 0 beyond ell0 + 1."""
    if grid.ell < ell0 + 1 - 1e-12:
        raise ValueError(f"ell={grid.ell:g} < ell0 + 1 = {ell0 + 1:g}: no room for the cutoff")
    return np.clip(ell0 + 1 - np.abs(grid.x1), 0.0, 1.0)


def localized_energy(v: FieldFunction, rho: np.ndarray) -> float:
    g = v.grid
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (g.nx + 1,):
        raise ValueError(f"rho has shape {rho.shape}, expected ({g.nx + 1},)")
    return gradient_energy(v.values, g.h1, g.h2, rho)


def interior_block_min(v: FieldFunction) -> float:
    """Minimum over the closed block [-ell/2, ell/2] x [L/4, 3L/4]."""
    g = v.grid
    tol = 1e-12 * max(g.ell, g.L)
    ix = np.abs(g.x1) <= g.ell / 2 + tol
    iy = (g.x2 >= g.L / 4 - tol) & (g.x2 <= 3 * g.L / 4 + tol)
    return float(v.values[np.ix_(ix, iy)].min())


def plateau_index(values) -> int | None:
    """Smallest p (not the last entry) with every later value within the plateau tolerance of values[p]."""
    vals = list(values)
    for p in range(max(len(vals) - 1, 1)):
        ref = vals[p]
        tail = vals[p:]
        if all(abs(x - ref) <= PLATEAU_TOL * abs(ref) for x in tail):
            return p
    return None


def domain_growth_study(p_template: ModelParams, f: Reaction, g: Reaction, cfg: GrowthStudyConfig,
                        f_factory=None, g_factory=None) -> GrowthReport:
    """Run the coupled solver for every ell in ``cfg.ells`` and check the window diagnostics.

    ``f_factory``/``g_factory`` rebuild the reactions for each ell when their
    working interval depends on the parameters; by default the given reactions
    are reused.
    """
    ells = cfg.ells
    p_big = p_template.replace(ell=ells[-1])
    require_valid(validate_params(p_big, f, g))
    p_small = p_template.replace(ell=ells[0])
    eps = choose_epsilon(p_small, f, cfg.grid(ells[0], p_template.L))
    floor = eps * math.sin(math.pi / 4) ** 2
    rep = GrowthReport(cfg.ell0, eps, floor)

    prev_v = prev_u = None
    box_ok = True
    for ell in ells:
        p = p_template.replace(ell=ell)
        fr = f_factory(p) if f_factory else f
        gr = g_factory(p) if g_factory else g
        grid = cfg.grid(ell, p.L)
        _, upper = solve_coupled(p, fr, gr, grid, cfg.opts)
        v, u = upper.v, upper.u
        box_ok &= bool(v.values.min() >= -1e-9 and v.values.max() <= p.box_cap + 1e-9
                       and u.values.min() >= -1e-9 and u.values.max() <= p.m + 1e-9)
        vw, uw = restrict(v, cfg.ell0), restrict_road(u, cfg.ell0)
        h1_field = math.sqrt(gradient_energy(vw.values, grid.h1, grid.h2))
        h1_road = road_norms(uw)["H1"]
        loc = localized_energy(v, cutoff_rho(grid, cfg.ell0))
        # the single eps from the smallest domain must give a subsolution here too (road density 0 is the worst case)
        sub = FieldFunction(grid, eps * phi1_exact(grid).phi1.values)
        defect = float(np.max(semilinear_defect(FieldProblem(p, fr, grid), sub, RoadFunction.zeros(grid))))
        diff = None
        if prev_v is not None:
            diff = float(max(np.abs(vw.values - prev_v).max(), np.abs(uw.values - prev_u).max()))
        prev_v, prev_u = vw.values, uw.values
        rep.rows.append(GrowthRow(ell, h1_field, h1_road, interior_block_min(v), diff, loc, defect))

    rep.checks["box"] = box_ok
    if not box_ok:
        rep.failures.append("solution left the invariant box")
    for name in ("h1_field", "h1_road"):
        vals = [getattr(r, name) for r in rep.rows]
        p_idx = plateau_index(vals)
        ok = p_idx is not None and max(vals) <= (1 + PLATEAU_TOL) * vals[p_idx]
        rep.checks[f"{name}_bounded"] = ok
        if not ok:
            rep.failures.append(f"{name} has no plateau within {PLATEAU_TOL:.0%}: values {vals}")
    floor_ok = True
    for r in rep.rows:
        if r.interior_min < floor - cfg.floor_tol:
            floor_ok = False
            rep.failures.append(f"ell={r.ell:g}: interior min {r.interior_min:.6g} below {floor:.6g}")
    rep.checks["interior_floor"] = floor_ok
    eps_ok = True
    for r in rep.rows:
        if r.eps_defect > 1e-9:
            eps_ok = False
            rep.failures.append(f"ell={r.ell:g}: eps*phi_1 is not a subsolution (defect {r.eps_defect:.3e})")
    rep.checks["eps_uniform"] = eps_ok
    diffs = [r.diff_prev for r in rep.rows if r.diff_prev is not None]
    dec_ok = True
    for r_prev, r in zip(rep.rows[1:], rep.rows[2:]):
        if not r.diff_prev < r_prev.diff_prev:
            dec_ok = False
            rep.failures.append(f"ell={r.ell:g}: restriction difference {r.diff_prev:.3e} did not decrease")
    rep.checks["differences_decreasing"] = dec_ok
    rep.checks["n_differences"] = len(diffs)
    return rep
