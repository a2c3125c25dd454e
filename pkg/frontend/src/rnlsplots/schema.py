"""Readers for the solver's published file formats.

This package is a read-only consumer: it re-implements the documented wire
formats (trajectory CSV column order, RNLS1 snapshot layout, report JSONs)
and never imports the solver.  Any mismatch against the documented schemas
raises SchemaError rather than guessing.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

TRAJECTORY_COLUMNS = ("t", "mass", "kinetic", "potential", "lp1", "ang_mom",
                      "quad_form", "energy", "sigma_norm2", "J", "Jp", "Jpp_vfm",
                      "grad_norm", "tail_fraction", "l_running_min")

RNLS1_MAGIC = b"RNLS1\x00"


class SchemaError(ValueError):
    """Input file does not match the documented solver schema."""


@dataclass
class Trajectory:
    columns: tuple
    data: np.ndarray            # shape (n_samples, n_columns)

    def col(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


def read_trajectory(path) -> Trajectory:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    cols = tuple(lines[0].split(","))
    if cols != TRAJECTORY_COLUMNS:
        raise SchemaError(
            f"{path}: trajectory columns {cols} do not match the documented "
            f"order {TRAJECTORY_COLUMNS}")
    if len(lines) < 2:
        raise SchemaError(f"{path}: trajectory holds no samples")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0 or data.shape[0] == 0:
        raise SchemaError(f"{path}: trajectory holds no samples")
    if data.shape[1] != len(cols):
        raise SchemaError(f"{path}: ragged trajectory rows")
    return Trajectory(columns=cols, data=data)


@dataclass
class Snapshot:
    dim: int
    points: tuple
    half_widths: tuple
    gammas: tuple
    omega_rot: float
    p: float
    t: float
    values: np.ndarray          # complex samples, row-major

    def axis(self, j: int) -> np.ndarray:
        n = self.points[j]
        L = self.half_widths[j]
        return -L + (2.0 * L / n) * np.arange(n)


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        if fh.read(6) != RNLS1_MAGIC:
            raise SchemaError(f"{path}: missing RNLS1 magic")
        version, dim = struct.unpack("<HB", fh.read(3))
        if version != 1:
            raise SchemaError(f"{path}: unsupported RNLS1 version {version}")
        if dim not in (2, 3):
            raise SchemaError(f"{path}: bad dimension {dim}")
        points = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        half_widths = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        gammas = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        omega_rot, p, t = struct.unpack("<ddd", fh.read(24))
        count = 2 * int(np.prod(points))
        raw = fh.read(8 * count)
        if len(raw) != 8 * count:
            raise SchemaError(f"{path}: truncated sample payload")
    inter = np.frombuffer(raw, dtype="<f8").reshape(points + (2,))
    return Snapshot(dim=dim, points=points, half_widths=half_widths,
                    gammas=gammas, omega_rot=omega_rot, p=p, t=t,
                    values=inter[..., 0] + 1j * inter[..., 1])


def read_report(path) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: report JSON must be an object")
    return obj


def read_sweep_csv(path):
    """Generic numeric CSV with a header row; returns (columns, array)."""
    with open(path) as fh:
        header = fh.readline().strip()
    cols = tuple(header.split(","))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise SchemaError(f"{path}: no data rows")
    if data.shape[1] != len(cols):
        raise SchemaError(f"{path}: ragged rows")
    return cols, data
