"""Time evolution by second-order Strang splitting with ADI rotation factors.

One step of size dt is the palindrome

    N(dt/2) o B(dt/2) o A(dt) o B(dt/2) o N(dt/2)

where every factor is the exact flow of its own piece of the equation
i u_t = -1/2 Lap u + 1/2 V u - |u|^{p-1} u + L_rot u:

    N: i u_t = (1/2 V - |u|^{p-1}) u          pointwise phase, |u| invariant
    A: i u_t = -1/2 d11 u + i s|O| x2 d1 u    diagonal in (xi1, x2[, x3])
    B: i u_t = -1/2 d22 u - i s|O| x1 d2 u    diagonal in (x1, xi2[, xi3])
       (plus -1/2 d33 u in 3D, rotation axis fixed to the third coordinate)

with s the angular-momentum sign convention.  Every factor multiplies by a
unit-modulus phase in its own diagonal representation, so the discrete mass
is conserved to rounding and stepping with -dt inverts a step exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dfield
from enum import Enum

import numpy as np

from . import grid as g
from .errors import CorruptFieldError
from .functionals import PhysicsParams, potential_field


class Termination(Enum):
    HORIZON_REACHED = "horizon_reached"
    BLOWUP_DETECTED = "blowup_detected"
    RESOLUTION_LOST = "resolution_lost"


@dataclass
class SimState:
    field: g.ComplexField
    t: float
    params: PhysicsParams
    step_count: int = 0


@dataclass
class MonitorReport:
    """Blow-up and resolution flags relative to a t=0 baseline."""

    grad_norm: float
    grad_growth: float
    tail_fraction: float
    l_running_min: float
    blowup: bool
    resolution_lost: bool


@dataclass
class BlowupMonitor:
    """Gradient-growth plus spectral-tail detector.

    Thresholds are desk-scale configuration, not statements about the PDE:
    a finite run can only ever observe trends.  grad_factor and tail_fraction
    are both configurable.
    """

    baseline_grad: float
    grad_factor: float = 50.0
    tail_fraction: float = 0.01
    l_running_min: float = np.inf

    def check(self, state: SimState, diag) -> MonitorReport:
        self.l_running_min = min(self.l_running_min, diag.ang_mom)
        growth = diag.grad_norm / self.baseline_grad if self.baseline_grad > 0 else 1.0
        big_tail = diag.tail_fraction > self.tail_fraction
        blow = big_tail and growth > self.grad_factor
        lost = big_tail and not blow
        return MonitorReport(grad_norm=diag.grad_norm, grad_growth=growth,
                             tail_fraction=diag.tail_fraction,
                             l_running_min=self.l_running_min,
                             blowup=blow, resolution_lost=lost)


class _StepKernel:
    """Precomputed phase factors for a fixed (grid, params, dt)."""

    def __init__(self, gr: g.Grid, params: PhysicsParams, dt: float,
                 nonlinearity: bool = True):
        self.grid = gr
        self.params = params
        self.dt = dt
        self.nonlinearity = nonlinearity
        self.V = potential_field(gr, params).values
        s = params.lomega_sign
        om = params.omega_rot
        xi1 = gr.wavenumber_grids[0]
        xi2 = gr.wavenumber_grids[1]
        x1 = gr.coords[0]
        x2 = gr.coords[1]
        phase_a = 0.5 * xi1 ** 2 - s * om * x2 * xi1
        phase_b = 0.5 * xi2 ** 2 + s * om * x1 * xi2
        if gr.dim == 3:
            phase_b = phase_b + 0.5 * gr.wavenumber_grids[2] ** 2
        self.expA = np.exp(-1j * dt * np.broadcast_to(phase_a, gr.shape))
        self.expB_half = np.exp(-1j * (dt / 2.0) * np.broadcast_to(phase_b, gr.shape))
        self.b_axes = (1,) if gr.dim == 2 else (1, 2)

    def nonlinear_phase(self, u: np.ndarray, dt: float) -> np.ndarray:
        pot = 0.5 * self.V
        if self.nonlinearity:
            pot = pot - np.abs(u) ** (self.params.p - 1.0)
        return np.exp(-1j * dt * pot)

    def apply(self, u: np.ndarray) -> np.ndarray:
        dt = self.dt
        u = u * self.nonlinear_phase(u, dt / 2.0)
        for ax in self.b_axes:
            u = g.fft_axis(u, ax)
        u *= self.expB_half
        for ax in self.b_axes:
            u = g.ifft_axis(u, ax)
        u = g.fft_axis(u, 0)
        u *= self.expA
        u = g.ifft_axis(u, 0)
        for ax in self.b_axes:
            u = g.fft_axis(u, ax)
        u *= self.expB_half
        for ax in self.b_axes:
            u = g.ifft_axis(u, ax)
        u = u * self.nonlinear_phase(u, dt / 2.0)
        return u


def step(state: SimState, dt: float, nonlinearity: bool = True) -> SimState:
    """Advance one Strang step; NaN aborts with a CorruptFieldError."""
    kern = _StepKernel(state.field.grid, state.params, dt, nonlinearity)
    u = kern.apply(state.field.values)
    if not np.isfinite(u.sum()):
        raise CorruptFieldError(f"non-finite state after step at t={state.t + dt}")
    return SimState(field=g.ComplexField(state.field.grid, u),
                    t=state.t + dt, params=state.params,
                    step_count=state.step_count + 1)


@dataclass
class Trajectory:
    times: list[float]
    rows: list                       # DiagnosticsRow entries
    termination: Termination
    dt: float
    steps: int
    mass_drift_rel: float
    energy_drift_rel: float
    ang_mom_drift: float
    amf_integral: list[float]        # cumulative angular-momentum flux at samples
    final_state: SimState
    snapshots: list = dfield(default_factory=list)


def l_omega_rate_values(u: np.ndarray, gr: g.Grid, params: PhysicsParams) -> float:
    """Instantaneous d/dt of the angular momentum under the flow.

    Only the trap anisotropy drives it:
        d/dt ang_mom = -(s |Omega| / 2) int (x1 d2 - x2 d1)(V) |u|^2
                     = -s |Omega| (g2^2 - g1^2) int x1 x2 |u|^2.
    Verified against the evolved flow to the splitting accuracy.
    """
    if params.omega_rot == 0.0:
        return 0.0
    g1, g2 = params.gammas[0], params.gammas[1]
    if g1 == g2:
        return 0.0
    x1x2 = gr.coords[0] * gr.coords[1]
    mom = float((x1x2 * (np.abs(u) ** 2)).sum() * gr.cell_volume)
    return -params.lomega_sign * params.omega_rot * (g2 ** 2 - g1 ** 2) * mom


def evolve(state: SimState, horizon: float, dt: float, sample_every: int = 10,
           monitor: BlowupMonitor | None = None, nonlinearity: bool = True,
           snapshot_every: int = 0, dt_shrink: bool = False,
           dt_shrink_trigger: float = 5.0, dt_shrink_factor: float = 0.5) -> Trajectory:
    """Run to the horizon, a blow-up flag or resolution loss.

    Samples diagnostics every sample_every steps; accumulates the
    angular-momentum flux once per step (trapezoid in time) so anisotropic
    drift can be checked against its quadrature.

    dt_shrink is an optional mode for blow-up hunts (off by default): each
    time the gradient norm grows past another factor of dt_shrink_trigger,
    the step size is multiplied by dt_shrink_factor.
    """
    from .classify import diagnostics

    if horizon <= 0 or dt == 0:
        raise ValueError("horizon must be positive and dt nonzero")
    gr = state.field.grid
    params = state.params
    kern = _StepKernel(gr, params, dt, nonlinearity)

    # Phase-wrap hygiene (soft check).
    amp = np.abs(state.field.values)
    phase_span = float(np.max(np.abs(0.5 * kern.V - amp ** (params.p - 1.0))) * abs(dt))
    if phase_span >= np.pi:
        warnings.warn(
            f"dt*max|V/2 - |u|^(p-1)| = {phase_span:.2f} >= pi; the pointwise "
            "phase may wrap", stacklevel=2)

    n_steps = int(round(horizon / abs(dt)))
    u = state.field.values.copy()
    t = state.t

    row0 = diagnostics(SimState(g.ComplexField(gr, u), t, params, 0))
    if monitor is None:
        monitor = BlowupMonitor(baseline_grad=row0.grad_norm)
    elif monitor.baseline_grad <= 0:
        monitor.baseline_grad = row0.grad_norm
    monitor.l_running_min = min(monitor.l_running_min, row0.ang_mom)
    row0 = row0.with_running_min(monitor.l_running_min)
    rows = [row0]
    times = [t]
    snapshots = []
    flux = l_omega_rate_values(u, gr, params)
    amf_cum = [0.0]
    amf_running = 0.0
    termination = Termination.HORIZON_REACHED

    mass0 = row0.mass
    energy0 = row0.energy
    lom0 = row0.ang_mom
    mass_worst = 0.0
    energy_worst = 0.0
    lom_worst = 0.0

    steps_done = 0
    dt_cur = dt
    shrink_count = 0
    elapsed = 0.0
    seg_base_elapsed = 0.0
    seg_base_k = 0
    k = 0
    while k < n_steps:
        u_prev = u
        u = kern.apply(u)
        k += 1
        steps_done = k
        elapsed = seg_base_elapsed + (k - seg_base_k) * abs(dt_cur)
        t = state.t + np.sign(dt) * elapsed
        if not np.isfinite(u.sum()):
            exc = CorruptFieldError(f"non-finite state at t={t}")
            # Diagnostic snapshot: the last finite iterate, one step back.
            exc.state = SimState(g.ComplexField(gr, u_prev), t - dt_cur, params,
                                 state.step_count + k - 1)
            raise exc
        new_flux = l_omega_rate_values(u, gr, params)
        amf_running += 0.5 * (flux + new_flux) * dt_cur
        flux = new_flux
        if k % sample_every == 0 or k == n_steps:
            st = SimState(g.ComplexField(gr, u), t, params, state.step_count + k)
            row = diagnostics(st)
            rep = monitor.check(st, row)
            row = row.with_running_min(monitor.l_running_min)
            rows.append(row)
            times.append(t)
            amf_cum.append(amf_running)
            mass_worst = max(mass_worst, abs(row.mass - mass0) / mass0)
            energy_worst = max(energy_worst, abs(row.energy - energy0) / max(abs(energy0), 1e-300))
            lom_worst = max(lom_worst, abs(row.ang_mom - lom0))
            if snapshot_every and (len(rows) - 1) % snapshot_every == 0:
                snapshots.append(st)
            if rep.blowup:
                termination = Termination.BLOWUP_DETECTED
                break
            if rep.resolution_lost:
                termination = Termination.RESOLUTION_LOST
                break
            if (dt_shrink and
                    rep.grad_growth > dt_shrink_trigger * 2.0 ** shrink_count):
                shrink_count += 1
                dt_cur *= dt_shrink_factor
                kern = _StepKernel(gr, params, dt_cur, nonlinearity)
                seg_base_elapsed = elapsed
                seg_base_k = k
                remaining = int(round((horizon - elapsed) / abs(dt_cur)))
                n_steps = k + max(remaining, 0)

    final = SimState(g.ComplexField(gr, u), t, params, state.step_count + steps_done)
    return Trajectory(times=times, rows=rows, termination=termination, dt=dt,
                      steps=steps_done, mass_drift_rel=mass_worst,
                      energy_drift_rel=energy_worst, ang_mom_drift=lom_worst,
                      amf_integral=amf_cum, final_state=final, snapshots=snapshots)
