"""Sub/supersolution iteration for the field problem with a frozen road density.

Starting from the subsolution 0 and the supersolution k = (mu/nu) m, repeated
application of S gives a nondecreasing and a nonincreasing chain squeezed in
[0, k].  Their limits are the minimal and maximal solutions.  Monotonicity is
monitored on every sweep; a violation means lam is below the Lipschitz
constant of f or the operator is not an M-matrix, and the run aborts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .field import FieldProblem, apply_S, field_residual, semilinear_defect
from .grid import FieldFunction

HISTORY_COLUMNS = ("sweep", "sup_step", "min_violation", "residual")


class MonotonicityError(RuntimeError):
    pass


class IterationLimitError(RuntimeError):
    pass


class SubsolutionError(ValueError):
    pass


@dataclass(frozen=True)
class IterationOptions:
    sup_tol: float = 1e-10
    max_sweeps: int = 10_000
    record_history: bool = False
    violation_tol: float = 1e-9

    def __post_init__(self):
        if not self.sup_tol > 0:
            raise ValueError("sup_tol must be positive")


@dataclass
class MonotoneReport:
    sweeps: int = 0
    final_step: float = float("inf")
    violations: list[float] = field(default_factory=list)
    gap: float = float("nan")
    min_value: float = float("inf")
    max_value: float = float("-inf")
    history: list[dict] = field(default_factory=list)

    @property
    def worst_violation(self) -> float:
        return min(self.violations) if self.violations else 0.0

    def as_dict(self) -> dict:
        return {
            "sweeps": self.sweeps,
            "final_step": self.final_step,
            "worst_violation": self.worst_violation,
            "gap": self.gap,
            "min_value": self.min_value,
            "max_value": self.max_value,
        }

    def write_history(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_COLUMNS)
            for row in self.history:
                w.writerow([row["sweep"]] + [f"{row[c]:.17g}" for c in HISTORY_COLUMNS[1:]])


class _Chain:
    def __init__(self, start: FieldFunction, direction: int):
        self.v = start
        self.direction = direction
        self.step = float("inf")
        self.confirming = False
        self.done = False


def _run(prob: FieldProblem, w, w_top, chains: list[_Chain], opts: IterationOptions) -> MonotoneReport:
    rep = MonotoneReport()
    for c in chains:
        vals = c.v.unknowns()
        rep.min_value = min(rep.min_value, float(vals.min()))
        rep.max_value = max(rep.max_value, float(vals.max()))
    while not all(c.done for c in chains):
        if rep.sweeps >= opts.max_sweeps:
            raise IterationLimitError(
                f"monotone iteration did not settle in {opts.max_sweeps} sweeps (last step {rep.final_step:.3e})")
        rep.sweeps += 1
        worst = 0.0
        for c in chains:
            if c.done:
                continue
            new = apply_S(prob, c.v, w, w_top, x0=c.v)
            diff = new.unknowns() - c.v.unknowns()
            c.step = float(np.max(np.abs(diff)))
            worst = min(worst, float(np.min(c.direction * diff)))
            c.v = new
            vals = new.unknowns()
            rep.min_value = min(rep.min_value, float(vals.min()))
            rep.max_value = max(rep.max_value, float(vals.max()))
            if c.step < opts.sup_tol:
                c.done = c.confirming
                c.confirming = True
            else:
                c.confirming = False
        if len(chains) == 2:
            lo, up = chains
            worst = min(worst, float(np.min(up.v.unknowns() - lo.v.unknowns())))
        rep.violations.append(worst)
        rep.final_step = max(c.step for c in chains)
        if opts.record_history:
            res = max(field_residual(prob, c.v, w, w_top) for c in chains)
            rep.history.append({"sweep": rep.sweeps, "sup_step": rep.final_step,
                                "min_violation": worst, "residual": res})
        if worst < -opts.violation_tol:
            raise MonotonicityError(
                f"sweep {rep.sweeps}: ordering violated by {-worst:.3e} "
                f"(is lam={prob.lam:g} below the Lipschitz constant of f?)")
    return rep


def min_max_solutions(prob: FieldProblem, w, opts: IterationOptions = IterationOptions(), w_top=None):
    """Minimal and maximal solutions, iterated in lockstep from 0 and from k.

    Returns ``(v_min, v_max, report)``; the report's ``gap`` is
    ``max |v_max - v_min|``.
    """
    g = prob.grid
    lo = _Chain(FieldFunction.zeros(g), +1)
    up = _Chain(FieldFunction.constant(g, prob.k), -1)
    rep = _run(prob, w, w_top, [lo, up], opts)
    rep.gap = float(np.max(np.abs(up.v.values - lo.v.values)))
    return lo.v, up.v, rep


def maximal_solution(prob: FieldProblem, w, opts: IterationOptions = IterationOptions(), w_top=None,
                     start: FieldFunction | None = None):
    """Nonincreasing chain from a supersolution (default: the constant k)."""
    s = FieldFunction.constant(prob.grid, prob.k) if start is None else start.copy()
    up = _Chain(s, -1)
    rep = _run(prob, w, w_top, [up], opts)
    return up.v, rep


def max_solution_from(prob: FieldProblem, w, v_start: FieldFunction,
                      opts: IterationOptions = IterationOptions(), w_top=None):
    """Nondecreasing chain from a verified subsolution; limit is >= v_start."""
    ok, worst = check_subsolution(prob, v_start, w, w_top, tol=10 * opts.sup_tol)
    if not ok:
        raise SubsolutionError(f"starting function is not a subsolution (defect {worst:.3e})")
    lo = _Chain(v_start.copy(), +1)
    rep = _run(prob, w, w_top, [lo], opts)
    return lo.v, rep


def check_subsolution(prob: FieldProblem, v: FieldFunction, w, w_top=None, tol: float = 1e-9):
    """Test ``K v <= W f(v) + robin`` at every unknown; returns (passed, worst defect)."""
    worst = float(np.max(semilinear_defect(prob, v, w, w_top)))
    return worst <= tol, worst


def check_supersolution(prob: FieldProblem, v: FieldFunction, w, w_top=None, tol: float = 1e-9):
    worst = float(np.max(-semilinear_defect(prob, v, w, w_top)))
    return worst <= tol, worst
