"""Command-line entry point: ``ma-eigen {eigen, ma-solve, oracle, check}``.

Exit codes: 0 success, 1 failed invariant check, 2 non-convergence,
3 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import checks
from .geometry import Domain, domain_from_dict
from .grid import GridError, build_grid, dump_field_csv, read_field_csv
from .iteration import (
    CONVERGED,
    IterationParams,
    build_initial_paraboloid,
    run_inverse_iteration,
)
from .ma_core import DiscreteRHS, NonConvergence, SolverParams, solve_ma_dirichlet
from .oracles import exact_1d_eigenpair, radial_eigenvalue

log = logging.getLogger("ma_eigen")

EXIT_OK, EXIT_CHECK, EXIT_NONCONV, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    domain: Domain
    h: float
    W: int = 2
    margin: float = 0.05
    iteration: IterationParams = field(default_factory=IterationParams)
    solver: SolverParams = field(default_factory=SolverParams)
    out: str = "."
    seed: int = 0
    rhs: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})


_ITER_KEYS = {
    "tol_rayleigh": float, "tol_field": float, "max_iter": int,
    "renormalize_each_step": bool, "slack_mono": float,
}
_SOLVER_KEYS = {
    "tol_residual": float, "max_sweeps": int, "per_node_tol": float,
    "relaxation": float, "parallel": bool, "check_every": int,
}
_TOP_KEYS = {"domain", "h", "W", "margin", "iteration", "solver", "out", "seed", "rhs"}


def _typed(key: str, value: Any, kind: type):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return float(value)


def _section(doc: dict, name: str, schema: dict) -> dict:
    sub = doc.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(name, "must be a JSON object")
    for key in sub:
        if key not in schema:
            raise ConfigError(f"{name}.{key}", "unknown key")
    return {k: _typed(f"{name}.{k}", v, schema[k]) for k, v in sub.items() if v is not None}


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run configuration, filling documented defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a JSON object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown key")
    if "domain" not in doc:
        raise ConfigError("domain", "missing")
    try:
        domain = domain_from_dict(doc["domain"])
    except (ValueError, TypeError) as exc:
        raise ConfigError("domain", str(exc)) from None
    if "h" not in doc:
        raise ConfigError("h", "missing")
    h = _typed("h", doc["h"], float)
    if not h > 0:
        raise ConfigError("h", f"must be positive, got {h}")
    if h > domain.diameter / 8:
        raise ConfigError("h", f"must not exceed diam/8 = {domain.diameter / 8:g}")
    W = _typed("W", doc.get("W", 2), int)
    if domain.dim == 2 and not 1 <= W <= 4:
        raise ConfigError("W", f"must lie in [1, 4], got {W}")
    margin = _typed("margin", doc.get("margin", 0.05), float)
    if margin < 0:
        raise ConfigError("margin", "must be nonnegative")
    seed = _typed("seed", doc.get("seed", 0), int)
    out = doc.get("out", ".")
    if not isinstance(out, str):
        raise ConfigError("out", "must be a path string")

    try:
        solver = SolverParams(**_section(doc, "solver", _SOLVER_KEYS))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("solver", str(exc)) from None
    try:
        iteration = IterationParams(solver=solver, **_section(doc, "iteration", _ITER_KEYS))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("iteration", str(exc)) from None

    rhs = doc.get("rhs", {"kind": "constant", "value": 1.0})
    if not isinstance(rhs, dict) or rhs.get("kind") not in ("constant", "file"):
        raise ConfigError("rhs", 'expected {"kind": "constant", "value": v} or {"kind": "file", "path": p}')
    if rhs["kind"] == "constant":
        if set(rhs) - {"kind", "value"}:
            raise ConfigError("rhs", f"unknown key(s) {sorted(set(rhs) - {'kind', 'value'})}")
        value = _typed("rhs.value", rhs.get("value", 1.0), float)
        if value < 0:
            raise ConfigError("rhs.value", "must be nonnegative")
        rhs = {"kind": "constant", "value": value}
    else:
        if set(rhs) != {"kind", "path"} or not isinstance(rhs["path"], str):
            raise ConfigError("rhs.path", "file preset needs exactly a string 'path'")

    return RunConfig(
        domain=domain, h=h, W=W, margin=margin, iteration=iteration,
        solver=solver, out=out, seed=seed, rhs=rhs,
    )


def _fmt_json(obj: Any, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits so reruns are byte-identical."""
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_fmt_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_fmt_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return f"{x:.17g}" if math.isfinite(x) else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return json.dumps(obj)


def _load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "out", None):
        cfg = replace(cfg, out=args.out)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "parallel", None) is not None:
        solver = replace(cfg.solver, parallel=args.parallel == "on")
        cfg = replace(cfg, solver=solver, iteration=replace(cfg.iteration, solver=solver))
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out", f"cannot create {out}: {exc.strerror}") from None
    return out


def cmd_eigen(args) -> int:
    cfg = _apply_flags(_load_config(args.config), args)
    out = _out_dir(cfg)
    grid = build_grid(cfg.domain, cfg.h, cfg.W)
    u0 = build_initial_paraboloid(grid, cfg.margin)
    result = run_inverse_iteration(grid, u0, cfg.iteration)
    (out / "history.csv").write_text(result.history.to_csv())
    dump_field_csv(result.eigenfunction, out / "eigenfunction.csv")
    payload = {
        "lambda": result.lambda_estimate,
        "status": result.status,
        "iterations": result.iterations,
        "grid_h": cfg.h,
        "domain": cfg.domain.to_dict(),
        "W": grid.width,
        "lambda_aitken": result.aitken_estimate(),
        "notes": list(result.notes),
    }
    (out / "result.json").write_text(_fmt_json(payload) + "\n")
    print(f"lambda = {result.lambda_estimate:.12g} ({result.status}, {result.iterations} iterations)")
    if result.status != CONVERGED:
        print(f"error: inverse iteration ended with status {result.status}", file=sys.stderr)
        return EXIT_NONCONV
    return EXIT_OK


def cmd_ma_solve(args) -> int:
    cfg = _apply_flags(_load_config(args.config), args)
    out = _out_dir(cfg)
    grid = build_grid(cfg.domain, cfg.h, cfg.W)
    if cfg.rhs["kind"] == "constant":
        rhs = DiscreteRHS.constant(grid, cfg.rhs["value"])
    else:
        path = Path(cfg.rhs["path"])
        if not path.is_absolute() and args.config:
            path = Path(args.config).parent / path
        try:
            rhs = DiscreteRHS(grid, read_field_csv(grid, path.read_text()).values)
        except (OSError, ValueError) as exc:
            raise ConfigError("rhs.path", str(exc)) from None
    try:
        u = solve_ma_dirichlet(grid, rhs, cfg.solver)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    dump_field_csv(u, out / "solution.csv")
    print(f"solved on {grid.size} nodes, min u = {u.values.min():.12g}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.which == "1d":
        if not args.length > 0:
            raise ConfigError("--length", "must be positive")
        lam, _ = exact_1d_eigenpair(args.length)
        payload = {"length": args.length, "lambda": lam}
    else:
        payload = {"n": args.n, "lambda_unit_ball": radial_eigenvalue(args.n)}
    print(_fmt_json(payload))
    return EXIT_OK


def run_check_suite(seed: int = 0, h_disk: float = 1 / 32, h_line: float = 1 / 128) -> list[checks.CheckResult]:
    """Invariant suite at small default sizes."""
    results = []
    for domain, h in ((Domain.interval(0, 1), h_line), (Domain.disk((0, 0), 1), h_disk)):
        grid = build_grid(domain, h, 2)
        tag = f"[{domain.kind}, h={h:g}]"
        params = IterationParams(max_iter=6)
        run = run_inverse_iteration(grid, build_initial_paraboloid(grid), params)
        eig = run.eigenfunction
        outputs = [run.final_iterate, eig]
        batch = [
            checks.scale_invariance(grid, eig),
            checks.norm_equivalence_check(grid, outputs),
            checks.degenerate_ellipticity(grid, eig, trials=100, seed=seed),
            checks.comparison_trials(grid, trials=20, seed=seed),
            checks.gradient_estimate(grid, outputs),
            checks.step_homogeneity(grid, eig),
            checks.monotone_decay(run.history),
        ]
        results += [replace(r, name=f"{r.name} {tag}") for r in batch]
    return results


def cmd_check(args) -> int:
    start = time.perf_counter()
    results = run_check_suite(seed=args.seed or 0)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {time.perf_counter() - start:.1f} s")
    if failed:
        print(f"error: {len(failed)} invariant check(s) failed", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ma-eigen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--parallel", choices=("on", "off"))

    p = sub.add_parser("eigen", help="run the inverse iteration")
    common(p)
    p.set_defaults(func=cmd_eigen)
    p = sub.add_parser("ma-solve", help="one Dirichlet solve for a preset right-hand side")
    common(p)
    p.set_defaults(func=cmd_ma_solve)
    p = sub.add_parser("oracle", help="print a reference eigenvalue as JSON")
    p.add_argument("which", choices=("1d", "radial"))
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--n", type=int, choices=(1, 2), default=2)
    p.set_defaults(func=cmd_oracle)
    p = sub.add_parser("check", help="run the invariant suite")
    common(p, config_required=False)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
