"""On-disk formats: RNLS1 field snapshots, trajectory CSV, JSON helpers.

RNLS1 layout (little-endian, bit-exact):
    magic   6 bytes  b"RNLS1\\0"
    version u16      (currently 1)
    dim     u8
    n_j     u32 * dim
    L_j     f64 * dim
    gamma_j f64 * dim
    Omega   f64
    p       f64
    t       f64
    samples f64 * (2 * prod n_j), row-major interleaved (re, im)

The rotation sign convention is not part of the wire format; loaders apply
the package default unless told otherwise.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from . import grid as g
from .functionals import PhysicsParams

MAGIC = b"RNLS1\x00"
VERSION = 1


def save_snapshot(path, field: g.ComplexField, params: PhysicsParams, t: float) -> None:
    gr = field.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HB", VERSION, gr.dim))
        fh.write(struct.pack(f"<{gr.dim}I", *gr.points))
        fh.write(struct.pack(f"<{gr.dim}d", *gr.half_widths))
        fh.write(struct.pack(f"<{gr.dim}d", *params.gammas))
        fh.write(struct.pack("<ddd", params.omega_rot, params.p, t))
        inter = np.empty(gr.shape + (2,), dtype="<f8")
        inter[..., 0] = field.values.real
        inter[..., 1] = field.values.imag
        fh.write(inter.tobytes(order="C"))


def load_snapshot(path, lomega_sign: int = -1):
    """Returns (ComplexField, PhysicsParams, t)."""
    with open(path, "rb") as fh:
        if fh.read(6) != MAGIC:
            raise ValueError(f"{path}: not an RNLS1 snapshot")
        version, dim = struct.unpack("<HB", fh.read(3))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported RNLS1 version {version}")
        points = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        half_widths = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        gammas = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        omega_rot, p, t = struct.unpack("<ddd", fh.read(24))
        count = 2 * int(np.prod(points))
        raw = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(points + (2,))
    gr = g.make_grid(dim, half_widths, points)
    values = raw[..., 0] + 1j * raw[..., 1]
    params = PhysicsParams(dim=dim, p=p, gammas=gammas, omega_rot=omega_rot,
                           lomega_sign=lomega_sign)
    return g.ComplexField(gr, values.astype(np.complex128)), params, t


# Trajectory CSV columns: the FunctionalReport row followed by the virial and
# monitoring diagnostics.  This exact order is a published interface.
TRAJECTORY_COLUMNS = ("t", "mass", "kinetic", "potential", "lp1", "ang_mom",
                      "quad_form", "energy", "sigma_norm2", "J", "Jp", "Jpp_vfm",
                      "grad_norm", "tail_fraction", "l_running_min")


def format_float(x: float) -> str:
    return repr(float(x))


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def write_json(path, obj) -> None:
    """Deterministic JSON: sorted keys, repr floats via native serialization."""
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def trajectory_to_csv(path, trajectory) -> None:
    write_csv(path, TRAJECTORY_COLUMNS, (row.csv_row() for row in trajectory.rows))


def trajectory_metadata(trajectory) -> dict:
    gr = trajectory.final_state.field.grid
    params = trajectory.final_state.params
    md = {
        "dt": trajectory.dt,
        "termination": trajectory.termination.value,
        "steps": trajectory.steps,
        "t_final": trajectory.times[-1] if trajectory.times else 0.0,
        "mass_drift_rel": trajectory.mass_drift_rel,
        "energy_drift_rel": trajectory.energy_drift_rel,
        "ang_mom_drift": trajectory.ang_mom_drift,
        "grid": {"dim": gr.dim, "half_widths": list(gr.half_widths),
                 "points": list(gr.points)},
        "params": {"p": params.p, "gammas": list(params.gammas),
                   "omega_rot": params.omega_rot,
                   "lomega_sign": params.lomega_sign},
        "box_note": ("periodic truncation of a whole-space problem; half-widths should "
                     "exceed 1.5x the classical turning radius implied by the energy"),
    }
    return md


def save_ground_state(prefix, gs, params: PhysicsParams) -> None:
    """RNLS1 snapshot plus JSON sidecar with multipliers and residuals."""
    prefix = Path(prefix)
    save_snapshot(prefix.with_suffix(".rnls1"), gs.field, params, 0.0)
    side = {
        "omega": gs.omega,
        "source": gs.source,
        "mass": gs.mass,
        "energy": gs.energy,
        "action": gs.action,
        "d_omega": gs.d_omega,
        "residual": gs.residual,
        "nehari_residual": gs.nehari_residual,
        "iterations": gs.iterations,
    }
    if gs.certification is not None:
        side["certification"] = gs.certification.to_dict()
    write_json(prefix.with_suffix(".json"), side)
