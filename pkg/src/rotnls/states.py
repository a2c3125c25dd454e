"""Constructors for initial fields used by tests, experiments and the CLI."""

from __future__ import annotations

import numpy as np

from . import grid as g


def gaussian(gr: g.Grid, amplitude: float = 1.0, width: float = 1.0,
             center=None, phase_winding: int = 0) -> g.ComplexField:
    """amplitude * exp(-|x-c|^2 / (2 width^2)), optionally with a phase vortex."""
    if center is None:
        center = (0.0,) * gr.dim
    r2 = sum((x - c) ** 2 for x, c in zip(gr.coords, center))
    vals = amplitude * np.exp(-r2 / (2.0 * width ** 2)).astype(np.complex128)
    vals = np.broadcast_to(vals, gr.shape).copy()
    if phase_winding:
        z = (gr.coords[0] - center[0]) + 1j * (gr.coords[1] - center[1])
        theta = np.angle(np.broadcast_to(z, gr.shape))
        vals = vals * np.exp(1j * phase_winding * theta)
    return g.ComplexField(gr, vals)


def normalized_gaussian(gr: g.Grid) -> g.ComplexField:
    """pi^{-N/4}-normalized unit-mass Gaussian exp(-|x|^2/2)."""
    vals = np.exp(-gr.radius2 / 2.0) * np.pi ** (-gr.dim / 4.0)
    return g.ComplexField(gr, vals.astype(np.complex128))


def vortex(gr: g.Grid, charge: int = 1) -> g.ComplexField:
    """Unit-mass single-ring vortex (x1 + i sgn x2)^|m| e^{-|x|^2/2}, 2D or 3D."""
    z = gr.coords[0] + 1j * np.sign(charge) * gr.coords[1]
    vals = np.broadcast_to(z ** abs(charge) * np.exp(-gr.radius2 / 2.0), gr.shape).copy()
    vals = vals.astype(np.complex128)
    vals /= np.sqrt(g.l2_norm2(g.ComplexField(gr, vals)))
    return g.ComplexField(gr, vals)


def scaled_state(f: g.ComplexField, mass: float) -> g.ComplexField:
    """Rescale amplitude so the field carries the requested mass."""
    m0 = g.l2_norm2(f)
    if m0 == 0:
        raise ValueError("cannot rescale the zero field")
    return g.ComplexField(f.grid, f.values * np.sqrt(mass / m0))


def random_smooth(gr: g.Grid, rng: np.random.Generator, scale: float = 1.0,
                  n_bumps: int = 6, vortex_mix: float = 0.0) -> g.ComplexField:
    """Trap-confined superposition of random Gaussians; always well resolved."""
    vals = np.zeros(gr.shape, dtype=np.complex128)
    for _ in range(n_bumps):
        c = [rng.uniform(-0.3 * L, 0.3 * L) for L in gr.half_widths]
        w = rng.uniform(0.7, 1.6)
        amp = (rng.normal() + 1j * rng.normal()) / np.sqrt(2 * n_bumps)
        r2 = sum((x - cc) ** 2 for x, cc in zip(gr.coords, c))
        vals = vals + amp * np.exp(-r2 / (2.0 * w ** 2))
    if vortex_mix:
        z = gr.coords[0] + 1j * gr.coords[1]
        vals = vals + vortex_mix * np.broadcast_to(z * np.exp(-gr.radius2 / 2.0), gr.shape)
    f = g.ComplexField(gr, vals)
    m = g.l2_norm2(f)
    if m > 0:
        f.values *= scale / np.sqrt(m)
    return f


def sigma_normalized(f: g.ComplexField) -> g.ComplexField:
    """Scale a field to unit Sigma-norm (H^1 plus trap moment)."""
    spec = g.fftn(f.values)
    kin = sum(
        np.vdot(d, d).real
        for d in (g.ifftn(spec * f.grid.deriv_mult[ax]) for ax in range(f.grid.dim))
    ) * f.grid.cell_volume
    absu2 = np.abs(f.values) ** 2
    s2 = kin + ((f.grid.radius2 + 1.0) * absu2).sum() * f.grid.cell_volume
    return g.ComplexField(f.grid, f.values / np.sqrt(s2))
