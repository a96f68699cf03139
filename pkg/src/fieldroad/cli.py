"""Command-line front end: ``fieldroad {solve,field-only,eigen,grow,validate}``.

Exit codes: 0 success, 1 a verification check failed (grow, validate),
2 bad config or failed assumption check, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coupled import CoupledOptions, nontriviality_check, solve_coupled
from .eigen import choose_epsilon, discrete_lambda1, kpp_condition, lambda1_closed_form
from .exhaust import GrowthStudyConfig, domain_growth_study
from .field import FieldProblem, apply_S
from .grid import (FieldFunction, RoadFunction, build_field_grid, norms, read_road_csv, road_norms, write_field_csv,
                   write_road_csv)
from .linsolve import ConvergenceError, SolveOptions
from .model import AssumptionError, ModelParams, box_cap, make_reaction, validate_params
from .monotone import IterationLimitError, IterationOptions, MonotonicityError, min_max_solutions
from .oracle import (dense_reference_solve, manufactured_convergence, manufactured_error, parabolic_relax,
                     quadratic_linear)
from .tworoad import TwoRoadParams, nontriviality_check2, solve_two_road, validate_two_road

log = logging.getLogger("fieldroad")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

PARAM_KEYS = {"D": "D", "Dprime": "Dp", "mu": "mu", "nu": "nu", "ell": "ell", "L": "L", "m": "m"}
TWO_ROAD_KEYS = ("Dsecond", "mu_p", "nu_p")
SOLVER_KEYS = {"sup_tol", "outer_tol", "cg_tol", "max_sweeps", "max_outer"}
TOP_KEYS = {"params", "reactions", "grid", "solver", "mode", "output"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    reactions: dict
    nx: int
    ny: int
    opts: CoupledOptions
    mode: str = "one"
    two: TwoRoadParams | None = None
    output: Path | None = None

    def field_reaction(self):
        return _reaction(self.reactions["f"], "field", (0.0, max(box_cap(self.params), 1.0)), "reactions.f")

    def road_reaction(self):
        return _reaction(self.reactions["g"], "road", (0.0, self.params.m), "reactions.g")

    def top_reaction(self):
        return _reaction(self.reactions["h"], "road", (0.0, self.two.m_p), "reactions.h")

    def grid(self):
        return build_field_grid(self.params.ell, self.params.L, self.nx, self.ny)


def _reaction(spec, kind, interval, where):
    if isinstance(spec, str):
        name, coefs = spec, {}
    elif isinstance(spec, dict):
        if "name" not in spec:
            raise ConfigError(f"missing key '{where}.name'")
        coefs = {k: v for k, v in spec.items() if k != "name"}
        name = spec["name"]
    else:
        raise ConfigError(f"'{where}' must be a name or an object")
    try:
        return make_reaction(name, kind, interval, **coefs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _block(cfg: dict, key: str, required: bool = True) -> dict:
    if key not in cfg:
        if required:
            raise ConfigError(f"missing key '{key}'")
        return {}
    val = cfg[key]
    if not isinstance(val, dict):
        raise ConfigError(f"'{key}' must be an object")
    return val


def _reject_unknown(block: dict, allowed, where: str) -> None:
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _number(block: dict, key: str, where: str, kind=float):
    if key not in block:
        raise ConfigError(f"missing key '{key}' in {where}")
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"'{where}.{key}' must be a number, got {val!r}")
    if kind is int and (not float(val).is_integer()):
        raise ConfigError(f"'{where}.{key}' must be an integer, got {val!r}")
    return kind(val)


def parse_config(cfg: dict, force_two: bool = False) -> RunConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(cfg, TOP_KEYS, "config")
    mode = cfg.get("mode", "one")
    if force_two:
        mode = "two"
    if mode not in ("one", "two"):
        raise ConfigError(f"mode must be 'one' or 'two', got {mode!r}")

    pb = _block(cfg, "params")
    allowed = set(PARAM_KEYS) | (set(TWO_ROAD_KEYS) if mode == "two" else set())
    _reject_unknown(pb, allowed, "params")
    params = ModelParams(**{attr: _number(pb, key, "params") for key, attr in PARAM_KEYS.items()})
    two = None
    if mode == "two":
        two = TwoRoadParams(params, *(_number(pb, k, "params") for k in TWO_ROAD_KEYS))

    rb = _block(cfg, "reactions")
    names = ("f", "g", "h") if mode == "two" else ("f", "g")
    _reject_unknown(rb, names, "reactions")
    for n in names:
        if n not in rb:
            raise ConfigError(f"missing key '{n}' in reactions")

    gb = _block(cfg, "grid")
    _reject_unknown(gb, {"nx", "ny"}, "grid")
    nx, ny = _number(gb, "nx", "grid", int), _number(gb, "ny", "grid", int)

    sb = _block(cfg, "solver", required=False)
    _reject_unknown(sb, SOLVER_KEYS, "solver")
    kw = {}
    for k in ("sup_tol", "outer_tol", "cg_tol"):
        if k in sb:
            kw[k] = _number(sb, k, "solver")
    for k in ("max_sweeps", "max_outer"):
        if k in sb:
            kw[k] = _number(sb, k, "solver", int)
    opts = CoupledOptions(**kw)

    ob = _block(cfg, "output", required=False)
    _reject_unknown(ob, {"dir"}, "output")
    out = Path(ob["dir"]) if "dir" in ob else None
    return RunConfig(params, dict(rb), nx, ny, opts, mode, two, out)


def load_config(path: str | Path, force_two: bool = False) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw, force_two)


def _dump(obj, path: Path | None = None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        path.write_text(text)
    return text


def _out_dir(arg, rc: RunConfig | None) -> Path:
    out = Path(arg) if arg else (rc.output if rc and rc.output else Path("."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _params_dict(rc: RunConfig) -> dict:
    d = {key: getattr(rc.params, attr) for key, attr in PARAM_KEYS.items()}
    d["k"] = box_cap(rc.params)
    if rc.two is not None:
        d.update(Dsecond=rc.two.Dpp, mu_p=rc.two.mu_p, nu_p=rc.two.nu_p, m_p=rc.two.m_p)
    return d


def _eps_info(p: ModelParams, f, grid) -> dict:
    info = {"kpp_condition": kpp_condition(p, f), "lambda1": lambda1_closed_form(p.ell, p.L)}
    try:
        info["eps"] = choose_epsilon(p, f, grid)
    except ValueError:
        info["eps"] = 0.0
    return info


def _bracket_dict(sol, extra_residuals: dict) -> dict:
    d = sol.report.as_dict()
    d["residuals"] = extra_residuals
    d["norms"] = {"u": road_norms(sol.u), "v": norms(sol.v)}
    return d


def cmd_solve(args) -> int:
    rc = load_config(args.config, force_two=args.two_road)
    if rc.mode == "two":
        return _solve_two(rc, args)
    p, f, g = rc.params, rc.field_reaction(), rc.road_reaction()
    out = _out_dir(args.out, rc)
    report = validate_params(p, f, g)
    summary = {"mode": "one", "params": _params_dict(rc), "reactions": {"f": f.name, "g": g.name},
               "grid": {"nx": rc.nx, "ny": rc.ny}, "assumptions": report.as_list(), "assumptions_ok": report.ok}
    if not report.ok:
        summary["status"] = "assumption_failure"
        _dump(summary, out / "summary.json")
        log.error("assumption check failed: %s", ", ".join(c.name for c in report.failed()))
        return EXIT_CONFIG
    grid = rc.grid()
    info = _eps_info(p, f, grid)
    lower, upper = solve_coupled(p, f, g, grid, rc.opts)
    flags = nontriviality_check(upper, info["eps"], sup_tol=rc.opts.sup_tol)
    write_road_csv(upper.u, out / "u.csv")
    write_field_csv(upper.v, out / "v.csv")
    summary.update(info)
    summary.update(flags)
    summary["status"] = "ok"
    summary["brackets"] = {
        s.bracket: _bracket_dict(s, {"field": s.field_residual, "road": s.road_residual}) for s in (lower, upper)}
    summary["bracket_gap"] = {"u": float(np.max(np.abs(upper.u.values - lower.u.values))),
                              "v": float(np.max(np.abs(upper.v.values - lower.v.values)))}
    summary["norms"] = summary["brackets"]["upper"]["norms"]
    summary["residuals"] = summary["brackets"]["upper"]["residuals"]
    summary["iterations"] = {s.bracket: {"outer": s.report.iterations, "inner_total": int(sum(s.report.inner_sweeps))}
                             for s in (lower, upper)}
    _dump(summary, out / "summary.json")
    log.info("solve: wrote u.csv, v.csv, summary.json to %s", out)
    return EXIT_OK


def _solve_two(rc: RunConfig, args) -> int:
    p, f, g = rc.params, rc.field_reaction(), rc.road_reaction()
    h = rc.top_reaction()
    out = _out_dir(args.out, rc)
    report = validate_two_road(rc.two, f, g, h)
    summary = {"mode": "two", "params": _params_dict(rc), "reactions": {"f": f.name, "g": g.name, "h": h.name},
               "grid": {"nx": rc.nx, "ny": rc.ny}, "assumptions": report.as_list(), "assumptions_ok": report.ok}
    if not report.ok:
        summary["status"] = "assumption_failure"
        _dump(summary, out / "summary.json")
        log.error("assumption check failed: %s", ", ".join(c.name for c in report.failed()))
        return EXIT_CONFIG
    grid = rc.grid()
    info = _eps_info(p, f, grid)
    upper, lower = solve_two_road(rc.two, f, g, h, grid, rc.opts)
    flags = nontriviality_check2(upper, info["eps"], sup_tol=rc.opts.sup_tol)
    write_road_csv(upper.u, out / "u.csv")
    write_field_csv(upper.v, out / "v.csv")
    write_road_csv(upper.w, out / "w.csv")
    summary.update(info)
    summary.update(flags)
    summary["status"] = "ok"
    brackets = {}
    for s in (lower, upper):
        d = _bracket_dict(s, s.residuals)
        d["norms"]["w"] = road_norms(s.w)
        d["w_range"] = s.w_range
        brackets[s.report.bracket] = d
    summary["brackets"] = brackets
    summary["norms"] = brackets["upper"]["norms"]
    summary["residuals"] = brackets["upper"]["residuals"]
    summary["iterations"] = {s.report.bracket: {"outer": s.report.iterations,
                                                "inner_total": int(sum(s.report.inner_sweeps))} for s in (lower, upper)}
    _dump(summary, out / "summary.json")
    return EXIT_OK


def cmd_field_only(args) -> int:
    rc = load_config(args.config)
    p, f, g = rc.params, rc.field_reaction(), rc.road_reaction()
    out = _out_dir(args.out, rc)
    report = validate_params(p, f, g)
    summary = {"mode": "field-only", "params": _params_dict(rc), "assumptions": report.as_list(),
               "assumptions_ok": report.ok}
    if not report.ok:
        summary["status"] = "assumption_failure"
        _dump(summary, out / "summary.json")
        return EXIT_CONFIG
    grid = rc.grid()
    if args.w_csv:
        w = read_road_csv(grid, args.w_csv)
    else:
        w = RoadFunction.constant(grid, p.m if args.w is None else args.w)
    prob = FieldProblem(p, f, grid, solve_opts=SolveOptions(rel_tol=rc.opts.cg_tol))
    iopts = IterationOptions(sup_tol=rc.opts.sup_tol, max_sweeps=rc.opts.max_sweeps, record_history=args.history)
    v_min, v_max, rep = min_max_solutions(prob, w, iopts)
    write_field_csv(v_min, out / "v_min.csv")
    write_field_csv(v_max, out / "v_max.csv")
    if args.history:
        rep.write_history(out / "history.csv")
    summary.update(status="ok", iteration=rep.as_dict(),
                   norms={"v_min": norms(v_min), "v_max": norms(v_max)},
                   w_norms=road_norms(w))
    _dump(summary, out / "summary.json")
    return EXIT_OK


def cmd_eigen(args) -> int:
    res = {"ell": args.ell, "L": args.L, "lambda1_closed": lambda1_closed_form(args.ell, args.L)}
    if args.nx:
        grid = build_field_grid(args.ell, args.L, args.nx, args.ny or args.nx)
        res.update(nx=grid.nx, ny=grid.ny, lambda1_discrete=discrete_lambda1(grid))
    if args.D is not None:
        res["D"] = args.D
        res["kpp_threshold"] = args.D * res["lambda1_closed"]
    sys.stdout.write(_dump(res))
    return EXIT_OK


def cmd_grow(args) -> int:
    rc = load_config(args.config)
    out = _out_dir(args.out, rc)
    cfg = GrowthStudyConfig(args.ell0, tuple(args.ells), h=args.h, opts=rc.opts)
    template = rc.params

    def ff(p):
        return _reaction(rc.reactions["f"], "field", (0.0, max(box_cap(p), 1.0)), "reactions.f")

    def gf(p):
        return _reaction(rc.reactions["g"], "road", (0.0, p.m), "reactions.g")

    p_big = template.replace(ell=cfg.ells[-1])
    report = validate_params(p_big, ff(p_big), gf(p_big))
    if not report.ok:
        _dump({"status": "assumption_failure", "assumptions": report.as_list()}, out / "growth.json")
        return EXIT_CONFIG
    rep = domain_growth_study(template, ff(p_big), gf(p_big), cfg, f_factory=ff, g_factory=gf)
    (out / "growth.csv").write_text(rep.to_csv())
    res = rep.as_dict()
    res["status"] = "ok" if rep.ok else "check_failed"
    _dump(res, out / "growth.json")
    for msg in rep.failures:
        log.error("grow: %s", msg)
    return EXIT_OK if rep.ok else EXIT_CHECK


def run_validation(nx: int = 32, ny: int = 16) -> dict:
    """Small oracle suite: dense solve, stencil exactness, manufactured order, parabolic agreement."""
    from .model import fisher, road_logistic
    results = {}
    p = ModelParams(D=0.1, Dp=1.0, mu=1.0, nu=1.0, ell=10.0, L=10.0, m=1.0)
    f, g = fisher(p), road_logistic(p)

    g6 = build_field_grid(p.ell, p.L, 6, 6)
    prob = FieldProblem(p, f, g6, solve_opts=SolveOptions(rel_tol=1e-14))
    rng = np.random.default_rng(12345)
    z = FieldFunction(g6, np.where(g6.unknown_mask, rng.random(g6.shape), 0.0))
    w = RoadFunction(g6, np.concatenate([[0.0], rng.random(g6.nx - 1), [0.0]]))
    y_dense, piv = dense_reference_solve(prob, z, w, return_pivots=True)
    err = float(np.max(np.abs(apply_S(prob, z, w).values - y_dense.values)))
    results["dense_vs_cg"] = {"error": err, "min_pivot": float(piv.min()), "passed": bool(err <= 1e-10 and piv.min() > 0)}

    p1 = p.replace(ell=1.0, L=1.0)
    ex = manufactured_error(quadratic_linear(1.0, 1.0), build_field_grid(1.0, 1.0, 8, 8), p1)
    results["stencil_exactness"] = {"error": ex, "passed": bool(ex <= 1e-12)}

    mc = manufactured_convergence([(16, 16), (32, 32), (64, 64)], p)
    results["manufactured_order"] = {**mc, "passed": bool(min(mc["orders"]) >= 1.8)}

    grid = build_field_grid(p.ell, p.L, nx, ny)
    _, upper = solve_coupled(p, f, g, grid)
    u, v, steps = parabolic_relax(p, f, g, RoadFunction.constant(grid, p.m), FieldFunction.constant(grid, box_cap(p)))
    dist = float(max(np.abs(u.values - upper.u.values).max(), np.abs(v.values - upper.v.values).max()))
    results["parabolic_vs_coupled"] = {"distance": dist, "steps": steps, "passed": bool(dist <= 1e-6)}

    results["passed"] = bool(all(r["passed"] for r in results.values()))
    return results


def cmd_validate(args) -> int:
    res = run_validation(args.nx, args.ny)
    text = _dump(res)
    if args.out:
        _dump(res, _out_dir(args.out, None) / "validate.json")
    sys.stdout.write(text)
    return EXIT_OK if res["passed"] else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fieldroad", description="Steady states of the field-road system")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--log-file", help="also write the run log here")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="coupled field-road solve")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (overrides output.dir)")
    s.add_argument("--two-road", action="store_true", help="force the two-road model")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("field-only", help="minimal and maximal field solutions for a fixed road density")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    grp = s.add_mutually_exclusive_group()
    grp.add_argument("--w", type=float, help="constant road density (default m)")
    grp.add_argument("--w-csv", help="road density CSV (x1,value)")
    s.add_argument("--history", action="store_true", help="write per-sweep history.csv")
    s.set_defaults(func=cmd_field_only)

    s = sub.add_parser("eigen", help="principal Dirichlet eigenvalue of the rectangle")
    s.add_argument("--ell", type=float, required=True)
    s.add_argument("--L", type=float, required=True)
    s.add_argument("--nx", type=int, help="also compute the discrete eigenvalue on this grid")
    s.add_argument("--ny", type=int)
    s.add_argument("--D", type=float)
    s.set_defaults(func=cmd_eigen)

    s = sub.add_parser("grow", help="domain-growth study")
    s.add_argument("--config", required=True)
    s.add_argument("--ell0", type=float, default=2.0)
    s.add_argument("--ells", type=float, nargs="+", default=[4.0, 8.0, 16.0])
    s.add_argument("--h", type=float, default=0.25)
    s.add_argument("--out")
    s.set_defaults(func=cmd_grow)

    s = sub.add_parser("validate", help="run the oracle suite")
    s.add_argument("--nx", type=int, default=32)
    s.add_argument("--ny", type=int, default=16)
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)
    return ap


def _setup_logging(verbose: int, log_file: str | None) -> None:
    level = logging.WARNING - 10 * min(verbose, 2)
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode="w"))
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", handlers=handlers, force=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose, args.log_file)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (ConfigError, AssumptionError, FileNotFoundError) as exc:
        sys.stderr.write(f"fieldroad: error: {exc}\n")
        return EXIT_CONFIG
    except (IterationLimitError, MonotonicityError, ConvergenceError) as exc:
        sys.stderr.write(f"fieldroad: solver failed: {exc}\n")
        return EXIT_SOLVER
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    return code
