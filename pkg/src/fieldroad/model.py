"""Physical parameters, reaction terms and the standing-assumption checklist.

Nothing here solves anything.  The solvers refuse to run on a parameter set
whose :class:`ValidationReport` is not ``ok`` (see :func:`require_valid`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

N_SAMPLES = 10_000
SIGN_TOL = 1e-12
LIPSCHITZ_SAFETY = 1.1


class AssumptionError(ValueError):
    """Raised when a solver is handed data that fails the assumption checks."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        super().__init__(f"assumption checks failed: {failed}")


@dataclass(frozen=True)
class ModelParams:
    """Constants of the one-road problem.

    ``Dp`` is the road diffusivity D', ``L`` the field height.  Construction
    does not validate; use :func:`validate_params`.
    """

    D: float
    Dp: float
    mu: float
    nu: float
    ell: float
    L: float
    m: float

    @property
    def box_cap(self) -> float:
        return box_cap(self)

    def replace(self, **changes) -> "ModelParams":
        kw = {k: getattr(self, k) for k in ("D", "Dp", "mu", "nu", "ell", "L", "m")}
        kw.update(changes)
        return ModelParams(**kw)


def box_cap(p: ModelParams) -> float:
    """Upper end k = (mu/nu) m of the invariant box for the field."""
    return p.mu / p.nu * p.m


def lipschitz_bound(fn: Callable, interval: tuple[float, float], n_samples: int = N_SAMPLES) -> float:
    """Largest adjacent-sample slope of ``fn`` on ``interval``, inflated by 1.1."""
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    s = np.linspace(a, b, n_samples)
    vals = np.asarray(fn(s), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise ValueError(f"reaction is not finite at s={s[np.argmax(bad)]!r}")
    slopes = np.abs(np.diff(vals)) / np.diff(s)
    return float(slopes.max()) * LIPSCHITZ_SAFETY


@dataclass(frozen=True)
class Reaction:
    """A scalar nonlinearity with a certified Lipschitz bound.

    ``fn`` must accept numpy arrays.  ``kind`` is ``"field"`` or ``"road"``.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    kind: str
    working_interval: tuple[float, float]
    lipschitz: float

    def __call__(self, s):
        return self.fn(s)

    def eval(self, s):
        return self.fn(s)

    @classmethod
    def build(cls, name: str, fn: Callable, kind: str, interval: tuple[float, float]) -> "Reaction":
        if kind not in ("field", "road"):
            raise ValueError(f"unknown reaction kind {kind!r}")
        return cls(name, fn, kind, (float(interval[0]), float(interval[1])), lipschitz_bound(fn, interval))


def _fisher(r: float = 1.0):
    return lambda s: r * s * (1.0 - s)


def _logistic(r: float = 1.0, K: float = 1.0):
    return lambda s: r * s * (1.0 - s / K)


def _decay(a: float = 1.0):
    return lambda s: -a * s


def _zero():
    return lambda s: np.zeros_like(np.asarray(s, dtype=float))


REACTIONS = {
    "fisher": _fisher,
    "logistic": _logistic,
    "decay": _decay,
    "zero": _zero,
}


def make_reaction(name: str, kind: str, interval: tuple[float, float], **coefs) -> Reaction:
    """Build a named built-in reaction (``fisher``, ``logistic``, ``decay``, ``zero``)."""
    try:
        factory = REACTIONS[name]
    except KeyError:
        raise ValueError(f"unknown reaction {name!r}; choose from {sorted(REACTIONS)}") from None
    try:
        fn = factory(**coefs)
    except TypeError as exc:
        raise ValueError(f"bad coefficients for reaction {name!r}: {exc}") from None
    label = name if not coefs else name + "(" + ", ".join(f"{k}={v}" for k, v in sorted(coefs.items())) + ")"
    return Reaction.build(label, fn, kind, interval)


def fisher(p: ModelParams, r: float = 1.0) -> Reaction:
    return make_reaction("fisher", "field", (0.0, max(box_cap(p), 1.0)), **({} if r == 1.0 else {"r": r}))


def road_logistic(p: ModelParams) -> Reaction:
    return make_reaction("logistic", "road", (0.0, p.m))


def zero_reaction(kind: str, upper: float) -> Reaction:
    return make_reaction("zero", kind, (0.0, upper))


def default_m(mu: float, nu: float) -> float:
    return max(1.0, nu / mu)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    worst: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "worst": self.worst, "detail": self.detail}


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_list(self) -> list[dict]:
        return [c.as_dict() for c in self.checks]


def _at(s: np.ndarray, vals: np.ndarray, idx: int) -> str:
    return f"s={s[idx]:.6g}, value={vals[idx]:.6g}"


def _check_positive(values: dict[str, float]) -> Check:
    bad = {k: v for k, v in values.items() if not (np.isfinite(v) and v > 0)}
    worst = min(values.values()) if values else 0.0
    detail = "" if not bad else "nonpositive: " + ", ".join(f"{k}={v}" for k, v in bad.items())
    return Check("positive_constants", not bad, float(worst), detail)


def check_field_reaction(f: Reaction, k_max: float, n: int = N_SAMPLES) -> list[Check]:
    """Sampled checks f(0)=f(1)=0, f>0 on (0,1), f<=0 on (1, k_max]."""
    checks = []
    f0, f1 = float(f(np.array([0.0]))[0]), float(f(np.array([1.0]))[0])
    worst = max(abs(f0), abs(f1))
    checks.append(Check("f_zeros", worst <= SIGN_TOL, worst, f"f(0)={f0:.6g}, f(1)={f1:.6g}"))
    s = np.linspace(0.0, 1.0, n)[1:-1]
    vals = f(s)
    i = int(np.argmin(vals))
    checks.append(Check("f_positive_on_unit", bool(vals[i] > 0), float(vals[i]), _at(s, vals, i)))
    if k_max > 1.0:
        s = np.linspace(1.0, k_max, n)[1:]
        vals = f(s)
        i = int(np.argmax(vals))
        checks.append(Check("f_nonpositive_above_one", bool(vals[i] <= SIGN_TOL), float(vals[i]), _at(s, vals, i)))
    else:
        checks.append(Check("f_nonpositive_above_one", True, 0.0, "empty range"))
    return checks


def check_road_reaction(g: Reaction, cap: float, label: str = "g") -> list[Check]:
    g0 = float(g(np.array([0.0]))[0])
    gc = float(g(np.array([cap]))[0])
    return [
        Check(f"{label}_zero", abs(g0) <= SIGN_TOL, abs(g0), f"{label}(0)={g0:.6g}"),
        Check(f"{label}_at_cap", gc <= SIGN_TOL, gc, f"{label}({cap:.6g})={gc:.6g}"),
    ]


def check_lipschitz(r: Reaction, interval: tuple[float, float], label: str, n: int = N_SAMPLES) -> list[Check]:
    """Lipschitz bound consistency and monotonicity of s -> lipschitz*s - r(s)."""
    a, b = interval
    s = np.linspace(a, b, n)
    vals = r(s)
    slopes = np.abs(np.diff(vals)) / np.diff(s)
    excess = float(slopes.max() - r.lipschitz)
    out = [Check(f"{label}_lipschitz", bool(np.isfinite(excess) and excess <= SIGN_TOL), excess,
                 f"L={r.lipschitz:.6g} on [{a:.6g}, {b:.6g}]")]
    shifted = r.lipschitz * s - vals
    drop = float(-np.diff(shifted).min())
    out.append(Check(f"{label}_shift_monotone", drop <= SIGN_TOL, drop, "max decrease of L*s - r(s)"))
    return out


def check_ratio_decreasing(f: Reaction, k_max: float, n: int = N_SAMPLES) -> Check:
    """f(s)/s nonincreasing on (0, k_max], sampled."""
    s = np.linspace(0.0, k_max, n + 1)[1:]
    ratio = f(s) / s
    rise = float(np.diff(ratio).max())
    return Check("f_ratio_decreasing", rise <= SIGN_TOL, rise, "max increase of f(s)/s")


def validate_params(p: ModelParams, f: Reaction, g: Reaction) -> ValidationReport:
    """Run every standing assumption of the one-road problem; never raises."""
    checks = [_check_positive({k: getattr(p, k) for k in ("D", "Dp", "mu", "nu", "ell", "L", "m")})]
    if not checks[0].passed:
        return ValidationReport(checks)
    need = p.nu / p.mu
    checks.append(Check("m_lower_bound", p.m >= need, p.m - need, f"m={p.m:.6g}, nu/mu={need:.6g}"))
    k = box_cap(p)
    checks.append(Check("box_cap_at_least_one", k >= 1.0, k - 1.0, f"k={k:.6g}"))
    k_max = max(k, 1.0)
    checks += check_lipschitz(f, (0.0, k_max), "f")
    checks += check_field_reaction(f, k_max)
    checks.append(check_ratio_decreasing(f, k_max))
    checks += check_lipschitz(g, (0.0, p.m), "g")
    checks += check_road_reaction(g, p.m)
    return ValidationReport(checks)


def require_valid(report: ValidationReport) -> None:
    if not report.ok:
        raise AssumptionError(report)
