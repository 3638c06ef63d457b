"""Experiment runner: config parsing, subcommands, reproducible artifacts.

Subcommands (each takes a config file plus an optional --out override):

  run            integrate one initial condition, write snapshots/diagnostics
  verify         inequality suite over a seeded corpus, write JSONL reports
  continuation   decreasing-eps ladder from one initial state
  steady         stationary power-law residuals over a grid-refinement table
  sweep          cartesian parameter sweep of `run` cells with a worker pool

Configs are declarative INI files; all floats in emitted CSV/JSON are written
with 17 significant digits so artifacts are byte-identical across reruns of
the same config with the same code version.  Wall-clock timing lives in
run_info.json, which is deliberately excluded from the deterministic set.

Exit codes: 0 ok, 1 experiment failure, 2 config/validation error.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, functionals, lab, model, stepper
from . import grid as gridmod
from .errors import DomainError, ValidationError
from .params import Params, RawParams, validate

SCHEMA_VERSION = 1

DIAG_COLUMNS = (
    "t", "mass_beta", "grad_energy", "diss1", "diss2", "diss3", "diss4", "diss5",
    "sup_u", "sup_bound", "holder_C", "deadcore", "energy", "entropy",
)


def fmt(x: float) -> str:
    """Float to text with round-trip precision."""
    return f"{float(x):.17g}"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def load_config(path: str | Path) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (L vs n, N vs p)
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    return {s: dict(cp[s]) for s in cp.sections()}


def _get(cfg, section, key, default=None, cast=str):
    try:
        raw = cfg[section][key]
    except KeyError:
        if default is None:
            raise ConfigError(f"missing config key [{section}] {key}") from None
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from None


def _get_floats(cfg, section, key, default=None):
    raw = _get(cfg, section, key, default="" if default is not None else None)
    if raw == "":
        return list(default)
    try:
        return [float(tok) for tok in str(raw).split()]
    except ValueError as exc:
        raise ConfigError(f"bad list for [{section}] {key}: {raw!r} ({exc})") from None


def parse_params(cfg) -> Params:
    eps_star = _get(cfg, "params", "eps_star", default="", cast=str)
    raw = RawParams(
        n=_get(cfg, "params", "n", 2.0, float),
        alpha=_get(cfg, "params", "alpha", 6.5, float),
        beta=_get(cfg, "params", "beta", 0.5, float),
        gamma=_get(cfg, "params", "gamma", 0.0, float),
        L=_get(cfg, "params", "L", 1.0, float),
        eps=_get(cfg, "params", "eps", 0.05, float),
        k=_get(cfg, "params", "k", 4.0, float),
        N=_get(cfg, "grid", "N", 128, int),
        eps_star=float(eps_star) if eps_star != "" else None,
    )
    return validate(raw)


def parse_grid(cfg, params: Params) -> gridmod.Grid:
    p = _get(cfg, "grid", "p", 2.0, float)
    return gridmod.build(params.N, params.L, p)


def parse_control(cfg) -> stepper.StepControl:
    floor_raw = _get(cfg, "control", "u_floor", default="auto", cast=str)
    return stepper.StepControl(
        dt_init=_get(cfg, "control", "dt_init", 1e-7, float),
        dt_min=_get(cfg, "control", "dt_min", 1e-14, float),
        dt_max=_get(cfg, "control", "dt_max", 1e-4, float),
        newton_tol=_get(cfg, "control", "newton_tol", 1e-11, float),
        newton_max_iter=_get(cfg, "control", "newton_max_iter", 12, int),
        safety=_get(cfg, "control", "safety", 1.3, float),
        u_floor=None if floor_raw == "auto" else float(floor_raw),
        u_ceil=_get(cfg, "control", "u_ceil", 1e6, float),
    )


def build_initial_condition(cfg, params: Params, g: gridmod.Grid) -> np.ndarray:
    preset = _get(cfg, "ic", "preset", "cosine", str)
    if preset == "constant":
        value = _get(cfg, "ic", "value", 1.0, float)
        if value <= 0.0:
            raise ConfigError("constant initial condition must be positive")
        return np.full(g.nnodes, value)
    if preset == "cosine":
        value = _get(cfg, "ic", "value", 1.0, float)
        amp = _get(cfg, "ic", "amplitude", 0.1, float)
        mode = _get(cfg, "ic", "mode", 1, int)
        if value - abs(amp) <= 0.0:
            raise ConfigError("cosine initial condition dips below zero")
        return value + amp * np.cos(mode * np.pi * g.x / params.L)
    if preset == "powerlaw":
        sigma = _get(cfg, "ic", "sigma", 1.5, float)
        with np.errstate(divide="ignore"):
            u = np.power(g.x, -sigma) if sigma > 0 else np.ones(g.nnodes)
        return np.clip(u, 1.0 / params.k, params.k)
    if preset == "file":
        path = _get(cfg, "ic", "path", None, str)
        u = np.loadtxt(path, dtype=float)
        if u.shape != (g.nnodes,):
            raise ConfigError(f"initial-condition file has shape {u.shape}, need ({g.nnodes},)")
        return u
    raise ConfigError(f"unknown initial-condition preset {preset!r}")


def _config_echo(cfg) -> dict:
    echo = {s: dict(kv) for s, kv in sorted(cfg.items())}
    # the output directory may legitimately differ between reruns
    echo.get("output", {}).pop("dir", None)
    return echo


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def write_json(path: Path, payload: dict) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def write_snapshots(path: Path, traj: stepper.Trajectory, g: gridmod.Grid) -> None:
    rows = []
    for t, u in zip(traj.times, traj.states):
        for x, v in zip(g.x, u):
            rows.append((float(t), float(x), float(v)))
    write_csv(path, ("t", "x", "u"), rows)


def write_diagnostics(path: Path, traj: stepper.Trajectory) -> None:
    rows = []
    for r in traj.records:
        rows.append(
            (r.t, r.mass_beta, r.grad_energy, *r.dissipation, r.sup_u, r.sup_bound,
             r.holder_C, r.deadcore, r.energy, r.entropy)
        )
    write_csv(path, DIAG_COLUMNS, rows)


RUN_SCHEMA = """# Run artifacts

- `snapshots.csv`: columns `t,x,u`; one row per (snapshot time, grid node).
- `diagnostics.csv`: one row per snapshot; columns
  `t,mass_beta,grad_energy,diss1,diss2,diss3,diss4,diss5,sup_u,sup_bound,holder_C,deadcore,energy,entropy`.
  `diss1..diss5` are the five dissipation integrals (third-derivative,
  mixed, sextic-gradient, curvature, quartic-gradient); `deadcore` is the
  integral of u^-2; `energy`/`entropy` are the physical pair.
- `summary.json`: stop event, step counts, conserved-mass drift, config echo
  (minus the output directory), code version, and an optional comparison-ODE
  fit. Deterministic for a fixed config and code version.
- `run_info.json`: wall-clock timing. Not deterministic; excluded from
  reproducibility comparisons.

All floats carry 17 significant digits and round-trip exactly.
"""

CONT_SCHEMA = RUN_SCHEMA + """
# Continuation artifacts

- `eps_XXX/`: one run directory per regularization strength (files above).
- `index.csv`: columns `pair,eps_high,eps_low,sup_distance,holder_high,holder_low`;
  `sup_distance` is the max over shared snapshot times of the sup-norm gap
  between consecutive-eps solutions.
- `summary.json`: eps ladder, distances, Cauchy flag, per-run stop events.
"""

STEADY_SCHEMA = """# Steady-residual artifacts

- `index.csv`: columns `sigma,N,residual,is_member,closed_form_fxx`;
  `residual` is the sup-norm of the discrete flux curvature of u = x^-sigma
  on [x_cut, L]; `is_member` marks the stationary power-law family.
- `summary.json`: exceptional sigma set, per-sigma residual decay ratios
  between successive grids, config echo.

All floats carry 17 significant digits and round-trip exactly.
"""

VERIFY_SCHEMA = """# Verification artifacts

- `inequalities.jsonl`: one JSON object per (function, inequality, eta):
  `seed, inequality, eta, lhs, rhs, margin, passed` (eta is null for the
  pointwise `holder`/`sup` checks).
- `summary.json`: corpus description, report/failure counts, and the
  smallest margin/rhs ratio seen per inequality.

All floats round-trip exactly (JSON repr).
"""

SWEEP_SCHEMA = RUN_SCHEMA + """
# Sweep artifacts

- `cell_XXX/`: one run directory per parameter-grid cell (files above).
- `index.csv`: columns `cell,<override keys...>,stop_kind,exit_code`.
- `summary.json`: the override grid and per-cell outcomes.
"""


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _prepare_out(outdir: str | Path) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_once(cfg, out: Path) -> stepper.Trajectory:
    params = parse_params(cfg)
    g = parse_grid(cfg, params)
    control = parse_control(cfg)
    u0 = build_initial_condition(cfg, params, g)
    t_end = _get(cfg, "run", "t_end", 1e-4, float)
    stride = _get(cfg, "output", "snapshot_stride", 10, int)
    tables = model.tables_for(params, g)
    traj = stepper.run(
        u0, params, control, t_end, grid=g, tables=tables, snapshot_stride=stride
    )

    write_snapshots(out / "snapshots.csv", traj, g)
    write_diagnostics(out / "diagnostics.csv", traj)
    masses = [r.mass_beta for r in traj.records]
    drift = max(abs(m - masses[0]) for m in masses) / abs(masses[0]) if masses[0] else 0.0
    ode_fit = None
    if len(traj.records) >= 3:
        ts = np.array([r.t for r in traj.records])
        ys = np.array([r.grad_energy for r in traj.records])
        if np.all(np.isfinite(ys)):
            c5, c6 = functionals.fit_ode_constants(ts, ys, params.n)
            ode_fit = {
                "c5": c5, "c6": c6,
                "T0": functionals.ode_bound(float(ys[0]), c5, c6, params.n).T0,
            }
    write_json(
        out / "summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "run",
            "code_version": __version__,
            "config": _config_echo(cfg),
            "stop": {
                "kind": traj.event.kind,
                "t_event": traj.event.t_event,
                "detail": traj.event.detail,
            },
            "steps": {"accepted": traj.steps_accepted, "rejected": traj.steps_rejected},
            "t_final": traj.times[-1],
            "mass": {"initial": masses[0], "final": masses[-1], "max_rel_drift": drift},
            "regularization": {
                "eps": params.eps,
                "eps0": params.eps0,
                "eps_star": params.eps_star,
                "lambda": tables.lam,
            },
            "ode_fit": ode_fit,
        },
    )
    _write_text(out / "schema.md", RUN_SCHEMA)
    return traj


def cmd_run(cfg, outdir) -> int:
    out = _prepare_out(outdir)
    start = time.perf_counter()
    traj = _run_once(cfg, out)
    write_json(out / "run_info.json", {"wall_time_s": time.perf_counter() - start})
    return 1 if traj.event.kind == stepper.STEP_FAILURE else 0


def cmd_verify(cfg, outdir) -> int:
    out = _prepare_out(outdir)
    start = time.perf_counter()
    params = parse_params(cfg)
    size = _get(cfg, "verify", "corpus", 1000, int)
    seed = _get(cfg, "verify", "seed", 20260808, int)
    modes = _get(cfg, "verify", "modes", 8, int)
    floor = _get(cfg, "verify", "floor", 0.1, float)
    eps = _get(cfg, "verify", "eps", 0.0, float)
    etas = _get_floats(cfg, "verify", "etas", (0.1, 0.5, 0.9))
    names = _get(cfg, "verify", "inequalities", " ".join(lab.INEQUALITIES) + " pointwise", str).split()

    integral_names = [n for n in names if n != "pointwise"]
    for name in integral_names:
        if name not in lab.INEQUALITIES:
            raise ConfigError(f"unknown inequality {name!r}")
    pointwise = "pointwise" in names

    ws = lab.Workspace(params, eps=eps)
    lines = []
    failures = 0
    worst: dict[str, float] = {}

    def push(fn_seed: int, rep: lab.InequalityReport):
        nonlocal failures
        if not rep.passed:
            failures += 1
        if rep.rhs > 0.0:
            ratio = rep.margin / rep.rhs
            worst[rep.inequality] = min(worst.get(rep.inequality, np.inf), ratio)
        lines.append(
            json.dumps(
                {
                    "seed": fn_seed,
                    "inequality": rep.inequality,
                    "eta": rep.eta,
                    "lhs": rep.lhs,
                    "rhs": rep.rhs,
                    "margin": rep.margin,
                    "passed": rep.passed,
                },
                sort_keys=True,
            )
        )

    for i in range(size):
        fn_seed = seed + i
        tf = lab.random_test_function(fn_seed, M=modes, floor=floor)
        if integral_names:
            for rep in lab.check_inequalities(tf, params, etas, integral_names, workspace=ws):
                push(fn_seed, rep)
        if pointwise:
            for rep in lab.check_pointwise_bounds(tf, params, workspace=ws):
                push(fn_seed, rep)

    _write_text(out / "inequalities.jsonl", "\n".join(lines) + ("\n" if lines else ""))
    write_json(
        out / "summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "verify",
            "code_version": __version__,
            "config": _config_echo(cfg),
            "corpus": {"size": size, "seed": seed, "modes": modes, "floor": floor, "eps": eps},
            "etas": list(etas),
            "inequalities": names,
            "reports": len(lines),
            "failures": failures,
            "min_margin_over_rhs": {k: worst[k] for k in sorted(worst)},
        },
    )
    _write_text(out / "schema.md", VERIFY_SCHEMA)
    write_json(out / "run_info.json", {"wall_time_s": time.perf_counter() - start})
    return 0 if failures == 0 else 1


def cmd_continuation(cfg, outdir) -> int:
    out = _prepare_out(outdir)
    start = time.perf_counter()
    params = parse_params(cfg)
    g = parse_grid(cfg, params)
    control = parse_control(cfg)
    u0 = build_initial_condition(cfg, params, g)
    eps_list = _get_floats(cfg, "continuation", "eps_list", (0.2, 0.1, 0.05, 0.025))
    t_end = _get(cfg, "continuation", "t_end", 1e-4, float)
    n_snap = _get(cfg, "continuation", "n_snap", 9, int)

    report = stepper.continuation(
        u0, params, eps_list, control, t_end, grid=g, n_snap=n_snap,
        keep_trajectories=True,
    )

    for j, (eps, traj) in enumerate(zip(report.eps_list, report.trajectories)):
        sub = _prepare_out(out / f"eps_{j:03d}")
        write_snapshots(sub / "snapshots.csv", traj, g)
        write_diagnostics(sub / "diagnostics.csv", traj)
        write_json(
            sub / "summary.json",
            {
                "schema_version": SCHEMA_VERSION,
                "command": "continuation-member",
                "code_version": __version__,
                "eps": eps,
                "stop": {"kind": traj.event.kind, "t_event": traj.event.t_event,
                         "detail": traj.event.detail},
            },
        )

    rows = []
    for j, d in enumerate(report.distances):
        rows.append(
            (j, float(report.eps_list[j]), float(report.eps_list[j + 1]), float(d),
             float(report.holder_moduli[j]), float(report.holder_moduli[j + 1]))
        )
    write_csv(out / "index.csv",
              ("pair", "eps_high", "eps_low", "sup_distance", "holder_high", "holder_low"),
              rows)
    write_json(
        out / "summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "continuation",
            "code_version": __version__,
            "config": _config_echo(cfg),
            "eps_list": list(report.eps_list),
            "snap_times": list(report.snap_times),
            "distances": list(report.distances),
            "holder_moduli": list(report.holder_moduli),
            "cauchy": report.cauchy,
            "events": [
                {"kind": e.kind, "t_event": e.t_event, "detail": e.detail}
                for e in report.events
            ],
        },
    )
    _write_text(out / "schema.md", CONT_SCHEMA)
    write_json(out / "run_info.json", {"wall_time_s": time.perf_counter() - start})
    if any(e.kind == stepper.STEP_FAILURE for e in report.events):
        return 1
    return 0


def cmd_steady(cfg, outdir) -> int:
    out = _prepare_out(outdir)
    start = time.perf_counter()
    params = parse_params(cfg)
    p_grade = _get(cfg, "grid", "p", 1.0, float)
    sigmas = _get_floats(cfg, "steady", "sigmas", lab.exceptional_sigmas(params.alpha, params.n))
    grids = [int(v) for v in _get_floats(cfg, "steady", "grids", (128, 256, 512))]
    x_cut = _get(cfg, "steady", "x_cut", params.L / 10.0, float)

    rows = []
    ratios: dict[str, list[float]] = {}
    for sigma in sigmas:
        residuals = []
        for N in grids:
            g = gridmod.build(N, params.L, p_grade)
            rep = lab.steady_residual(sigma, params, g, x_cut=x_cut)
            rows.append((float(sigma), N, rep.residual_norm, rep.is_member,
                         rep.closed_form_fxx_norm))
            residuals.append(rep.residual_norm)
        ratios[fmt(sigma)] = [
            (a / b) if b > 0.0 else np.inf for a, b in zip(residuals, residuals[1:])
        ]
    write_csv(out / "index.csv", ("sigma", "N", "residual", "is_member", "closed_form_fxx"), rows)
    write_json(
        out / "summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "steady",
            "code_version": __version__,
            "config": _config_echo(cfg),
            "exceptional_sigmas": list(lab.exceptional_sigmas(params.alpha, params.n)),
            "grids": grids,
            "x_cut": x_cut,
            "decay_ratios": {k: [None if np.isinf(r) else r for r in v] for k, v in ratios.items()},
        },
    )
    _write_text(out / "schema.md", STEADY_SCHEMA)
    write_json(out / "run_info.json", {"wall_time_s": time.perf_counter() - start})
    return 0


def _sweep_cell(args) -> tuple[int, str, int]:
    index, cfg, outdir = args
    try:
        traj_code = cmd_run(cfg, outdir)
        summary = json.loads((Path(outdir) / "summary.json").read_text())
        return index, summary["stop"]["kind"], traj_code
    except (ConfigError, ValidationError, DomainError) as exc:
        _prepare_out(outdir)
        write_json(Path(outdir) / "error.json", {"error": _error_payload(exc)})
        return index, "ConfigError", 2
    except Exception as exc:  # cell isolation: a bad cell must not kill the sweep
        _prepare_out(outdir)
        write_json(Path(outdir) / "error.json", {"error": _error_payload(exc)})
        return index, "Error", 1


def cmd_sweep(cfg, outdir) -> int:
    out = _prepare_out(outdir)
    start = time.perf_counter()
    sweep_cfg = dict(cfg.get("sweep", {}))
    max_workers = int(sweep_cfg.pop("max_workers", "1"))
    overrides = {key: str(val).split() for key, val in sorted(sweep_cfg.items())}
    if not overrides:
        raise ConfigError("sweep config needs at least one dotted override key")
    for key in overrides:
        if "." not in key:
            raise ConfigError(f"sweep key {key!r} must be section.key")

    keys = list(overrides)
    cells = list(itertools.product(*(overrides[k] for k in keys)))
    tasks = []
    for idx, combo in enumerate(cells):
        cell_cfg = {s: dict(kv) for s, kv in cfg.items() if s != "sweep"}
        for key, value in zip(keys, combo):
            section, name = key.split(".", 1)
            cell_cfg.setdefault(section, {})[name] = value
        tasks.append((idx, cell_cfg, str(out / f"cell_{idx:03d}")))

    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_sweep_cell, tasks))
    else:
        results = [_sweep_cell(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    rows = []
    for (idx, combo), (_, kind, code) in zip(enumerate(cells), results):
        rows.append((f"cell_{idx:03d}", *cells[idx], kind, code))
    write_csv(out / "index.csv", ("cell", *keys, "stop_kind", "exit_code"), rows)
    write_json(
        out / "summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "sweep",
            "code_version": __version__,
            "config": _config_echo(cfg),
            "overrides": overrides,
            "cells": len(cells),
            "failures": sum(1 for _, _, code in results if code != 0),
        },
    )
    _write_text(out / "schema.md", SWEEP_SCHEMA)
    write_json(out / "run_info.json", {"wall_time_s": time.perf_counter() - start})
    return 1 if any(code != 0 for _, _, code in results) else 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _error_payload(exc: Exception) -> dict:
    payload = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ValidationError):
        payload["violations"] = exc.violations
    return payload


COMMANDS = {
    "run": cmd_run,
    "verify": cmd_verify,
    "continuation": cmd_continuation,
    "steady": cmd_steady,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="becpde",
        description="Simulator and verification lab for a degenerate fourth-order condensation model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the INI experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        outdir = args.out or cfg.get("output", {}).get("dir", "out")
        return COMMANDS[args.command](cfg, outdir)
    except (ConfigError, ValidationError, DomainError) as exc:
        print(json.dumps({"error": _error_payload(exc)}, sort_keys=True))
        return 2
    except OSError as exc:
        print(json.dumps({"error": _error_payload(exc)}, sort_keys=True))
        return 2


if __name__ == "__main__":
    sys.exit(main())
