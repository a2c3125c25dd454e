"""Deterministic figure rendering from solver artifacts.

Three kinds:
    timeseries  conservation drift, gradient product vs threshold with a
                blow-up marker, virial traces, spectral tail
    heatmap     |u|^2 density with a phase inset from an RNLS1 snapshot
    sweep       generic x/y curves from an aggregate CSV

No numerics beyond unit conversions happen here; the solver output is the
single source of truth.  Output bytes are reproducible: fixed hash salt,
stripped dates, pinned fonts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schema import (SchemaError, read_report, read_snapshot, read_sweep_csv,
                     read_trajectory)

matplotlib.rcParams.update({
    "svg.hashsalt": "rnlsplots",
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
})

FIGURE_KINDS = ("timeseries", "heatmap", "sweep")


@dataclass
class FigureSpec:
    kind: str
    inputs: dict
    output: str
    style: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "FigureSpec":
        kind = d.get("kind")
        if kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {kind!r}")
        if "output" not in d or "inputs" not in d:
            raise SchemaError("figure spec needs 'inputs' and 'output'")
        return cls(kind=kind, inputs=dict(d["inputs"]), output=d["output"],
                   style=dict(d.get("style", {})))


def _save(fig, output):
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if out.suffix == ".svg" else {}
    fig.savefig(out, metadata=meta)
    plt.close(fig)
    return [str(out)]


def render_timeseries(spec: FigureSpec):
    traj = read_trajectory(spec.inputs["trajectory"])
    t = traj.col("t")
    classification = None
    if "classification" in spec.inputs:
        classification = read_report(spec.inputs["classification"])
    evolution = None
    if "evolution" in spec.inputs:
        evolution = read_report(spec.inputs["evolution"])

    fig, axes = plt.subplots(2, 2, figsize=(10, 7), constrained_layout=True)
    ax = axes[0, 0]
    mass = traj.col("mass")
    energy = traj.col("energy")
    ax.plot(t, np.abs(mass / mass[0] - 1.0), label="mass drift")
    scale = max(abs(energy[0]), 1e-300)
    ax.plot(t, np.abs(energy - energy[0]) / scale, label="energy drift")
    ax.set_yscale("log")
    ax.set_ylim(bottom=1e-17)
    ax.set_xlabel("t")
    ax.set_title("conservation drift (relative)")
    ax.legend()

    ax = axes[0, 1]
    grad = traj.col("grad_norm")
    ax.plot(t, grad, label="grad norm")
    if classification is not None and classification.get("me_product") is not None:
        sc = classification["s_c"]
        product = traj.col("kinetic") ** (sc / 2) * traj.col("mass") ** ((1 - sc) / 2)
        ax.plot(t, product, label="gradient product")
        ax.axhline(classification["grad_threshold"], color="k", ls="--",
                   label="threshold")
    if evolution is not None and evolution.get("termination") == "blowup_detected":
        ax.axvline(t[-1], color="r", ls=":", label="blow-up flagged")
    ax.set_xlabel("t")
    ax.set_title("gradient growth")
    ax.legend()

    ax = axes[1, 0]
    ax.plot(t, traj.col("J"), label="J")
    ax.plot(t, traj.col("Jp"), label="J'")
    ax.plot(t, traj.col("Jpp_vfm"), label="J'' (functional)")
    ax.set_xlabel("t")
    ax.set_title("virial traces")
    ax.legend()

    ax = axes[1, 1]
    ax.plot(t, traj.col("tail_fraction"))
    ax.set_yscale("log")
    ax.set_ylim(bottom=1e-18)
    ax.set_xlabel("t")
    ax.set_title("spectral tail fraction")

    return _save(fig, spec.output)


def render_heatmap(spec: FigureSpec):
    snap = read_snapshot(spec.inputs["snapshot"])
    vals = snap.values
    if snap.dim == 3:
        vals = vals[:, :, vals.shape[2] // 2]   # central slice
    density = np.abs(vals) ** 2
    x, y = snap.axis(0), snap.axis(1)

    fig, ax = plt.subplots(figsize=(7.2, 6), constrained_layout=True)
    pm = ax.pcolormesh(x, y, density.T, shading="auto", cmap="viridis")
    fig.colorbar(pm, ax=ax, label="|u|^2")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"density at t = {snap.t:g} (Omega = {snap.omega_rot:g}, "
                 f"p = {snap.p:g})")
    ax.set_aspect("equal")
    ax.grid(False)

    inset = ax.inset_axes([0.72, 0.72, 0.26, 0.26])
    inset.pcolormesh(x, y, np.angle(vals).T, shading="auto", cmap="twilight",
                     vmin=-np.pi, vmax=np.pi)
    inset.set_xticks([])
    inset.set_yticks([])
    inset.set_title("phase", fontsize=8)
    inset.grid(False)
    return _save(fig, spec.output)


def render_sweep(spec: FigureSpec):
    cols, data = read_sweep_csv(spec.inputs["csv"])
    x_name = spec.style.get("x", cols[0])
    y_names = spec.style.get("y", [cols[1]])
    if isinstance(y_names, str):
        y_names = [y_names]
    for name in [x_name, *y_names]:
        if name not in cols:
            raise SchemaError(f"column {name!r} not in {cols}")
    x = data[:, cols.index(x_name)]
    order = np.argsort(x)

    fig, ax = plt.subplots(figsize=(7, 5), constrained_layout=True)
    for name in y_names:
        ax.plot(x[order], data[order, cols.index(name)], marker="o", label=name)
    if spec.style.get("logx"):
        ax.set_xscale("log")
    if spec.style.get("logy"):
        ax.set_yscale("log")
    ax.set_xlabel(x_name)
    ax.legend()
    ax.set_title(spec.style.get("title", "parameter sweep"))
    return _save(fig, spec.output)


def render(spec: FigureSpec):
    """Render one spec; returns the list of files written."""
    if spec.kind == "timeseries":
        return render_timeseries(spec)
    if spec.kind == "heatmap":
        return render_heatmap(spec)
    if spec.kind == "sweep":
        return render_sweep(spec)
    raise SchemaError(f"unknown figure kind {spec.kind!r}")
