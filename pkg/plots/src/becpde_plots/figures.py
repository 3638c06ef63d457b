"""The four figure kinds and their schema-checked CSV readers."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("snapshots", "diagnostics", "continuation", "convergence")

DIAG_REQUIRED = (
    "t", "mass_beta", "grad_energy", "diss1", "diss2", "diss3", "diss4", "diss5",
    "sup_u", "sup_bound", "holder_C", "deadcore", "energy", "entropy",
)


class SchemaError(ValueError):
    """Input file missing or lacking a documented column."""


def read_columns(path: Path, required: tuple[str, ...]) -> dict[str, list[str]]:
    if not path.exists():
        raise SchemaError(f"missing input file: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{path.name}: missing column {col!r}")
        rows = list(reader)
    return {col: [row[col] for row in rows] for col in header}


def _floats(cols: dict[str, list[str]], name: str) -> np.ndarray:
    return np.array([float(v) for v in cols[name]])


def plot_snapshots(run_dir: Path, out: Path) -> None:
    cols = read_columns(run_dir / "snapshots.csv", ("t", "x", "u"))
    t = _floats(cols, "t")
    x = _floats(cols, "x")
    u = _floats(cols, "u")
    times = sorted(set(t.tolist()))
    cmap = plt.get_cmap("viridis")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, ti in enumerate(times):
        sel = t == ti
        color = cmap(i / max(len(times) - 1, 1))
        ax.plot(x[sel], u[sel], color=color, lw=1.2, label=f"t = {ti:.3g}")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title("solution snapshots")
    if len(times) <= 10:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_diagnostics(run_dir: Path, out: Path, log_scale: bool = False) -> None:
    cols = read_columns(run_dir / "diagnostics.csv", DIAG_REQUIRED)
    t = _floats(cols, "t")
    fig, axes = plt.subplots(2, 3, figsize=(12, 6.5), sharex=True)

    mass = _floats(cols, "mass_beta")
    drift = np.max(np.abs(mass - mass[0])) / abs(mass[0]) if mass[0] else 0.0
    axes[0, 0].plot(t, mass, color="tab:blue")
    axes[0, 0].set_title(f"weighted mass (max rel drift {drift:.2e})")

    axes[0, 1].plot(t, _floats(cols, "grad_energy"), color="tab:orange")
    axes[0, 1].set_title("gradient energy")

    sup = _floats(cols, "sup_u")
    axes[0, 2].plot(t, sup, color="tab:red", label="sup u")
    axes[0, 2].plot(t, _floats(cols, "sup_bound"), color="tab:red", ls="--", label="bound")
    axes[0, 2].set_title("sup norm vs a priori bound")
    axes[0, 2].legend(fontsize=8)
    if log_scale and np.all(sup > 0):
        axes[0, 2].set_yscale("log")

    dead = _floats(cols, "deadcore")
    axes[1, 0].plot(t, dead, color="tab:purple")
    axes[1, 0].set_title("dead-core functional")
    if log_scale and np.all(dead > 0):
        axes[1, 0].set_yscale("log")

    for i in range(5):
        axes[1, 1].plot(t, _floats(cols, f"diss{i + 1}"), lw=1.0, label=f"diss{i + 1}")
    axes[1, 1].set_title("dissipation integrals")
    axes[1, 1].legend(fontsize=7)

    axes[1, 2].plot(t, _floats(cols, "energy"), label="energy", color="tab:green")
    axes[1, 2].plot(t, _floats(cols, "entropy"), label="entropy", color="tab:gray")
    axes[1, 2].set_title("physical diagnostics")
    axes[1, 2].legend(fontsize=8)

    for ax in axes[1]:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_continuation(run_dir: Path, out: Path) -> None:
    cols = read_columns(run_dir / "index.csv", ("pair", "eps_high", "eps_low", "sup_distance"))
    eps = _floats(cols, "eps_high")
    dist = _floats(cols, "sup_distance")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(eps, dist, "o-", color="tab:blue")
    ax.set_xlabel("regularization eps (upper of pair)")
    ax.set_ylabel("sup-norm distance to next-smaller eps")
    ax.set_title("continuation Cauchy trend")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_convergence(run_dir: Path, out: Path) -> None:
    cols = read_columns(run_dir / "index.csv", ("sigma", "N", "residual"))
    sigma = _floats(cols, "sigma")
    n = _floats(cols, "N")
    res = _floats(cols, "residual")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    drew_guide = False
    for s in sorted(set(sigma.tolist())):
        sel = sigma == s
        ns, rs = n[sel], res[sel]
        order = np.argsort(ns)
        ns, rs = ns[order], rs[order]
        positive = rs > 0
        if not np.any(positive):
            continue  # exactly stationary rates sit at zero residual
        ax.loglog(ns[positive], rs[positive], "o-", label=f"sigma = {s:g}")
        if not drew_guide:
            ref = rs[positive][0] * (ns[positive][0] / ns[positive]) ** 2
            ax.loglog(ns[positive], ref, "k:", lw=1.0, label="N^-2 guide")
            drew_guide = True
    ax.set_xlabel("grid intervals N")
    ax.set_ylabel("stationarity residual (sup norm)")
    ax.set_title("steady-state residual convergence")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def render(kind: str, run_dir: str | Path, out: str | Path | None = None, log_scale: bool = False) -> Path:
    """Render one figure kind from a run directory; returns the output path."""
    run_dir = Path(run_dir)
    if kind not in FIGURE_KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS}")
    out_path = Path(out) if out is not None else run_dir / f"{kind}.png"
    if kind == "snapshots":
        plot_snapshots(run_dir, out_path)
    elif kind == "diagnostics":
        plot_diagnostics(run_dir, out_path, log_scale=log_scale)
    elif kind == "continuation":
        plot_continuation(run_dir, out_path)
    else:
        plot_convergence(run_dir, out_path)
    return out_path
