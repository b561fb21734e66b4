"""Command line entry point: ``kirchhoff-gs <command> [--config FILE] [flags]``.

Commands: ``solve``, ``sweep``, ``fiber-scan``, ``limit-profile``, ``check``.

Config files hold one ``key = value`` per line; ``#`` starts a comment and
lists are comma separated.  Command line flags override file keys.  The
output directory defaults to ``$KIRCHHOFF_GS_OUT`` or ``./out``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.  Every
failure writes ``<name>_error.json`` with ``stage``, ``key`` or
``diagnostic``, and ``message``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import CSV_HEADER, SweepOptions, sweep
from .fiber import FiberError, fiber_scan
from .limit_profiles import ShootingError, solve_limit_profile
from .nonlinearity import NonlinearitySpec, SpecError, check_assumptions
from .radial_grid import Field, GridError, RadialGrid, mass, read_snapshot, write_snapshot
from .solver import AssumptionError, ConvergenceError, SolverOptions, solve_ground_state

COMMANDS = ("solve", "sweep", "fiber-scan", "limit-profile", "check")
OUT_ENV = "KIRCHHOFF_GS_OUT"

# key -> (type, default); None default means "required by some commands"
KEYS = {
    "command": (str, None),
    "N": (int, 3),
    "a": (float, None),
    "b": (float, None),
    "family": (str, "power"),
    "p": (float, None),
    "A": (float, None),
    "alpha": (float, None),
    "B": (float, None),
    "beta": (float, None),
    "c": ("floats", None),
    "c_min": (float, None),
    "c_max": (float, None),
    "c_count": (int, None),
    "R": (float, 10.0),
    "M": (int, 4096),
    "tol": (float, 1e-5),
    "pohozaev_tol": (float, 1e-6),
    "nehari_tol": (float, 1e-6),
    "max_iter": (int, 50_000),
    "seed": (int, None),
    "workers": (int, 1),
    "factor": (float, 100.0),
    "continuity_c": (float, None),
    "continuity_bound": (float, 0.05),
    "distance_ceiling": (float, 0.05),
    "band": (float, 50.0),
    "split": (float, 1.0),
    "field": (str, None),
    "t_min": (float, 0.25),
    "t_max": (float, 4.0),
    "samples": (int, 41),
    "m": (float, None),
    "K": (float, None),
    "q": (float, None),
    "out": (str, None),
    "name": (str, None),
}
SPEC_KEYS = ("a", "b", "family", "p", "A", "alpha", "B", "beta")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


class NumericalFailure(RuntimeError):
    def __init__(self, stage: str, message: str, diagnostic=None):
        super().__init__(message)
        self.stage = stage
        self.diagnostic = diagnostic or {}


# --------------------------------------------------------------------------
# configuration


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into raw strings."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"line {n}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val.strip("'\"")
    return out


def _convert(key: str, raw):
    kind = KEYS[key][0]
    if raw is None:
        return None
    if isinstance(raw, (list, tuple)):
        raw = ",".join(str(x) for x in raw)
    try:
        if kind == "floats":
            vals = [float(x) for x in str(raw).split(",") if x.strip()]
            if not vals:
                raise ValueError
            return vals
        if kind is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        if kind is float:
            return float(raw)
        return str(raw)
    except ValueError:
        name = "list of numbers" if kind == "floats" else kind.__name__
        raise ConfigError(key, f"{key}={raw!r} is not a valid {name}") from None


def resolve_config(raw: dict) -> dict:
    """Check keys and types and fill defaults."""
    for key in raw:
        if key not in KEYS:
            raise ConfigError(key, f"unknown key {key!r}")
    cfg = {k: _convert(k, raw[k]) if k in raw else d for k, (_, d) in KEYS.items()}
    if cfg["command"] not in COMMANDS:
        raise ConfigError("command", f"command must be one of {COMMANDS}")
    if cfg["N"] not in (1, 2, 3):
        raise ConfigError("N", "N must be 1, 2 or 3")
    for key in ("R", "tol", "pohozaev_tol", "nehari_tol", "t_min", "t_max"):
        if not cfg[key] > 0:
            raise ConfigError(key, f"{key} must be positive")
    for key in ("M", "max_iter", "workers", "samples"):
        if not cfg[key] >= 1:
            raise ConfigError(key, f"{key} must be at least 1")
    if cfg["M"] < 64:
        raise ConfigError("M", "M must be at least 64")
    if cfg["out"] is None:
        cfg["out"] = os.environ.get(OUT_ENV, "out")
    if cfg["name"] is None:
        cfg["name"] = cfg["command"].replace("-", "_")
    cmd = cfg["command"]
    if cmd == "sweep" and cfg["c"] is None:
        if None in (cfg["c_min"], cfg["c_max"], cfg["c_count"]):
            raise ConfigError("c", "sweep needs c (list) or c_min, c_max, c_count")
        if not 0 < cfg["c_min"] < cfg["c_max"] or cfg["c_count"] < 2:
            raise ConfigError("c_min", "need 0 < c_min < c_max and c_count >= 2")
        cfg["c"] = [float(x) for x in np.geomspace(cfg["c_min"], cfg["c_max"], cfg["c_count"])]
    if cmd in ("solve", "fiber-scan") and cfg["c"] is None and not (cmd == "fiber-scan" and cfg["field"]):
        raise ConfigError("c", f"{cmd} needs the mass c")
    if cfg["c"] is not None:
        if any(not x > 0 for x in cfg["c"]):
            raise ConfigError("c", "masses must be positive")
        if cmd in ("solve", "fiber-scan") and len(cfg["c"]) != 1:
            raise ConfigError("c", f"{cmd} takes a single mass")
        if cmd == "sweep" and any(y <= x for x, y in zip(cfg["c"], cfg["c"][1:])):
            raise ConfigError("c", "sweep masses must be strictly increasing")
    if cmd == "limit-profile":
        for key in ("m", "K", "q"):
            if cfg[key] is None:
                raise ConfigError(key, f"limit-profile needs {key}")
    else:
        cfg["spec"] = _spec(cfg)
    return cfg


def _spec(cfg) -> NonlinearitySpec:
    try:
        return NonlinearitySpec.from_config({k: cfg[k] for k in SPEC_KEYS if cfg[k] is not None})
    except SpecError as exc:
        raise ConfigError(exc.key, str(exc)) from None


def _echo(cfg: dict) -> dict:
    """The resolved config as plain JSON data (output location excluded)."""
    return {k: cfg[k] for k in KEYS if cfg[k] is not None and k not in ("out",)}


# --------------------------------------------------------------------------
# output


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable, allow_nan=True) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _snapshot(path: Path, u: Field, cfg: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    write_snapshot(path, u, {"config": json.dumps(_echo(cfg), sort_keys=True)})


def _error(out: Path, name: str, stage: str, message: str, key=None, diagnostic=None,
           cfg=None) -> None:
    body = {"stage": stage, "message": message}
    if key is not None:
        body["key"] = key
    if diagnostic is not None:
        body["diagnostic"] = diagnostic
    if cfg is not None:
        body["config"] = _echo(cfg)
    _write(out / f"{name}_error.json", _dump(body))


# --------------------------------------------------------------------------
# commands


def _solver_options(cfg) -> SolverOptions:
    return SolverOptions(pde_tol=cfg["tol"], pohozaev_tol=cfg["pohozaev_tol"],
                         nehari_tol=cfg["nehari_tol"], max_iter=cfg["max_iter"], seed=cfg["seed"])


def _check_assumptions(cfg):
    rep = check_assumptions(cfg["spec"], cfg["N"])
    if not rep.passed:
        fail = rep.first_failure
        raise ConfigError(fail.name, f"({fail.name}) {fail.message}")
    return rep


def cmd_solve(cfg, out: Path) -> int:
    _check_assumptions(cfg)
    c = cfg["c"][0]
    try:
        gs = solve_ground_state(RadialGrid(cfg["N"], cfg["R"], cfg["M"]), cfg["spec"], c,
                                _solver_options(cfg))
    except ConvergenceError as exc:
        raise NumericalFailure("solve", str(exc), exc.diagnostics) from None
    name = cfg["name"]
    _snapshot(out / f"{name}.snapshot", gs.u, cfg)
    dg = gs.diagnostics
    side = {
        "config": _echo(cfg),
        "lambda": gs.lam,
        "M": gs.energy,
        "c": gs.c,
        "d": gs.d,
        "u0": gs.u0,
        "residuals": {k: getattr(dg, k) for k in
                      ("pohozaev", "nehari", "pde", "multiplier_gap", "decay")},
        "iterations": dg.iterations,
        "newton_iterations": dg.newton_iterations,
        "R": dg.R,
        "nodes": dg.M,
    }
    _write(out / f"{name}.json", _dump(side))
    return 0


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_sweep(cfg, out: Path) -> int:
    _check_assumptions(cfg)
    opts = SweepOptions(M=cfg["M"], R=cfg["R"], solver=_solver_options(cfg),
                        workers=cfg["workers"], factor=cfg["factor"],
                        continuity_c=cfg["continuity_c"],
                        continuity_bound=cfg["continuity_bound"],
                        distance_ceiling=cfg["distance_ceiling"], band=cfg["band"],
                        split=cfg["split"])
    try:
        res = sweep(cfg["spec"], cfg["N"], cfg["c"], opts)
    except ShootingError as exc:
        raise NumericalFailure("limit-profile", str(exc)) from None
    name = cfg["name"]
    lines = [CSV_HEADER]
    for r in res.records:
        lines.append(",".join(_fmt(x) for x in r.csv_row()))
    for r in res.failed:  # failed rows are all-NaN; name them and the cause
        lines.append(f"# failed c={_fmt(r.c)}: " + " ".join(r.error.split()))
    lines.append("# config=" + json.dumps(_echo(cfg), sort_keys=True))
    _write(out / f"{name}.csv", "\n".join(lines) + "\n")
    report = {
        "config": _echo(cfg),
        "passed": res.passed,
        "trends": [{"name": t.name, "passed": t.passed, "value": t.value,
                    "threshold": t.threshold, "note": t.note} for t in res.trends],
        "failures": [{"c": r.c, "message": r.error} for r in res.failed],
        "residuals": [{"c": r.c, "large_mass": r.residual_U, "small_mass": r.residual_V}
                      for r in res.records if r.ok],
    }
    _write(out / f"{name}_trend.json", _dump(report))
    if res.failed:
        raise NumericalFailure("sweep", f"{len(res.failed)} of {len(res.records)} masses failed",
                               {"failed_c": [r.c for r in res.failed]})
    return 0


def cmd_fiber_scan(cfg, out: Path) -> int:
    if cfg["field"]:
        try:
            u = read_snapshot(cfg["field"])
        except (OSError, GridError, ValueError) as exc:
            raise ConfigError("field", str(exc)) from None
        grid = u.grid
    else:
        grid = RadialGrid(cfg["N"], cfg["R"], cfg["M"])
        v = np.exp(-0.5 * grid.r**2)
        v[-1] = 0.0
        u = Field(grid, v * math.sqrt(cfg["c"][0] / mass(grid, v)))
    if not cfg["t_min"] < cfg["t_max"]:
        raise ConfigError("t_max", "need t_min < t_max")
    scan = fiber_scan(grid, cfg["spec"], u, cfg["t_min"], cfg["t_max"], cfg["samples"])
    name = cfg["name"]
    lines = ["t,I_t,P_t"] + [f"{_fmt(t)},{_fmt(i)},{_fmt(p)}"
                             for t, i, p in zip(scan.t, scan.I, scan.P)]
    lines.append("# config=" + json.dumps(_echo(cfg), sort_keys=True))
    _write(out / f"{name}.csv", "\n".join(lines) + "\n")
    _write(out / f"{name}.json", _dump({
        "config": _echo(cfg), "t_u": scan.t_u, "bracketed": scan.bracketed,
        "sign_changes": scan.sign_changes, "argmax_t": float(scan.t[scan.argmax]),
    }))
    return 0


def cmd_limit_profile(cfg, out: Path) -> int:
    try:
        prof = solve_limit_profile(cfg["N"], cfg["m"], cfg["K"], cfg["q"], tol=cfg["tol"])
    except ValueError as exc:
        raise ConfigError("q", str(exc)) from None
    except ShootingError as exc:
        raise NumericalFailure("limit-profile", str(exc)) from None
    name = cfg["name"]
    _snapshot(out / f"{name}.snapshot", prof.profile, cfg)
    _write(out / f"{name}.json", _dump({
        "config": _echo(cfg), "w0": prof.w0, "mass": prof.mass, "kinetic": prof.kinetic,
        "residual": prof.residual, "nehari_gap": prof.nehari_gap(),
        "pohozaev_gap": prof.pohozaev_gap(),
    }))
    return 0


def cmd_check(cfg, out: Path) -> int:
    rep = check_assumptions(cfg["spec"], cfg["N"])
    _write(out / f"{cfg['name']}.json", _dump({
        "config": _echo(cfg), "passed": rep.passed, "checks": rep.as_dict()}))
    if not rep.passed:
        fail = rep.first_failure
        raise ConfigError(fail.name, f"({fail.name}) {fail.message}")
    return 0


HANDLERS = {"solve": cmd_solve, "sweep": cmd_sweep, "fiber-scan": cmd_fiber_scan,
            "limit-profile": cmd_limit_profile, "check": cmd_check}


def execute(raw: dict) -> int:
    """Run one command from raw (string or typed) settings; returns the exit code."""
    fallback_out = Path(raw.get("out") or os.environ.get(OUT_ENV, "out"))
    fallback_name = str(raw.get("name") or str(raw.get("command", "run")).replace("-", "_"))
    try:
        cfg = resolve_config(raw)
    except ConfigError as exc:
        _error(fallback_out, fallback_name, "config", str(exc), key=exc.key)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(cfg["out"])
    try:
        return HANDLERS[cfg["command"]](cfg, out)
    except ConfigError as exc:
        _error(out, cfg["name"], "validation", str(exc), key=exc.key, cfg=cfg)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        _error(out, cfg["name"], exc.stage, str(exc), diagnostic=exc.diagnostic, cfg=cfg)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FiberError, AssumptionError) as exc:
        _error(out, cfg["name"], cfg["command"], str(exc), cfg=cfg)
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run(config_path, overrides: dict | None = None) -> int:
    """Execute the command named in a config file."""
    try:
        text = Path(config_path).read_text(encoding="utf-8")
        raw = parse_config_text(text)
    except (OSError, ConfigError) as exc:
        out = Path((overrides or {}).get("out") or os.environ.get(OUT_ENV, "out"))
        _error(out, "run", "config", str(exc), key=getattr(exc, "key", "config"))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raw.update(overrides or {})
    return execute(raw)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kirchhoff-gs", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="key = value config file")
        for key, (kind, _) in KEYS.items():
            if key == "command":
                continue
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None,
                           help="comma-separated list" if kind == "floats" else None)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="any config key (repeatable)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items()
             if k in KEYS and k != "command" and v is not None}
    for item in args.set:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 1
        k, v = item.split("=", 1)
        flags[k.strip()] = v.strip()
    flags["command"] = args.command
    if args.config:
        return run(args.config, flags)
    return execute(flags)


if __name__ == "__main__":
    sys.exit(main())
