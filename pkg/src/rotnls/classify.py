"""Per-sample diagnostics, virial machinery, dichotomy classification and
stability experiments.

The classification compares the mass-energy product (E - l)^{s_c} M^{1-s_c}
and the gradient product ||grad u||^{s_c} ||u||^{1-s_c} against the same
products of the free ground state; verdicts follow the global-existence /
blow-up dichotomy for mass-supercritical exponents.  l is the infimum of the
angular momentum along the flow: exact for isotropic traps (conserved),
a sampled upper bound for anisotropic runs, or a small-data certificate.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import grid as g
from .errors import CorruptFieldError, RegimeError
from .functionals import PhysicsParams, evaluate
from .qprofile import QProfile, thresholds


@dataclass(frozen=True)
class DiagnosticsRow:
    """One sampled instant of a trajectory: functionals plus virial data."""

    t: float
    mass: float
    kinetic: float
    potential: float
    lp1: float
    ang_mom: float
    quad_form: float
    energy: float
    sigma_norm2: float
    J: float                  # second moment int |x|^2 |u|^2
    Jp: float                 # 2 Im int (grad u . x) conj(u)
    Jpp_vfm: float            # second virial derivative from the functionals
    grad_norm: float
    tail_fraction: float
    l_running_min: float

    def csv_row(self) -> list[float]:
        return [self.t, self.mass, self.kinetic, self.potential, self.lp1,
                self.ang_mom, self.quad_form, self.energy, self.sigma_norm2,
                self.J, self.Jp, self.Jpp_vfm, self.grad_norm,
                self.tail_fraction, self.l_running_min]

    def with_running_min(self, lmin: float) -> "DiagnosticsRow":
        return dataclasses.replace(self, l_running_min=lmin)


def virial_second_derivative(report, params: PhysicsParams) -> float:
    """J'' from the conserved functionals:
    ((4-N(p-1))/2) kinetic - ((N(p-1)+4)/2) potential + N(p-1)(E - ang_mom);
    algebraically identical to 4 P(u).
    """
    N, p = params.dim, params.p
    a = N * (p - 1.0)
    return ((4.0 - a) / 2.0 * report.kinetic - (a + 4.0) / 2.0 * report.potential
            + a * (report.energy - report.ang_mom))


def diagnostics(state) -> DiagnosticsRow:
    """All DiagnosticsRow fields for one state (spectral derivatives)."""
    f = state.field
    params = state.params
    gr = f.grid
    dv = gr.cell_volume
    rep = evaluate(f, params)

    absu2 = np.abs(f.values) ** 2
    J = float((gr.radius2 * absu2).sum() * dv)

    spec = g.fftn(f.values)
    Jp = 0.0
    for ax in range(gr.dim):
        d = g.ifftn(spec * gr.deriv_mult[ax])
        Jp += 2.0 * float(np.sum(gr.coords[ax] * d * np.conj(f.values)).imag * dv)

    power = np.abs(spec) ** 2
    total = power.sum()
    tail = float(power[gr.tail_mask].sum() / total) if total > 0 else 0.0

    return DiagnosticsRow(
        t=state.t, mass=rep.mass, kinetic=rep.kinetic, potential=rep.potential,
        lp1=rep.lp1, ang_mom=rep.ang_mom, quad_form=rep.quad_form,
        energy=rep.energy, sigma_norm2=rep.sigma_norm2, J=J, Jp=Jp,
        Jpp_vfm=virial_second_derivative(rep, params),
        grad_norm=float(np.sqrt(rep.kinetic)), tail_fraction=tail,
        l_running_min=rep.ang_mom)


class Verdict(Enum):
    K_PLUS = "K_plus"
    K_MINUS = "K_minus"
    NEGATIVE_ENERGY_BLOWUP = "negative_energy_blowup"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class ClassificationReport:
    s_c: float
    l_estimate: float
    l_mode: str                      # isotropic_exact | trajectory_min | smalldata_bound
    me_product: float | None
    me_threshold: float
    grad_product: float
    grad_threshold: float
    verdict: Verdict
    lower_bound_constant: float | None
    trajectory_conditional: bool

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["verdict"] = self.verdict.value
        return d


def estimate_l(params: PhysicsParams, u0: g.ComplexField | None = None,
               trajectory=None, mode: str = "auto",
               smallness_threshold: float = 0.1) -> tuple[float, str]:
    """Infimum of the angular momentum along the flow, with its provenance.

    isotropic_exact: conserved, so l = ang_mom(u0); requires equal gammas.
    trajectory_min: running minimum over the sampled trajectory (an upper
        bound for the true infimum, tagged as such in reports).
    smalldata_bound: certificate lower bound -max(|Omega|^2, 1)(2||u0||_S)^2,
        valid under the documented uniform bound ||u(t)||_S <= 2||u0||_S for
        small data.
    """
    isotropic = len(set(params.gammas)) == 1
    if mode == "auto":
        mode = "isotropic_exact" if isotropic else (
            "trajectory_min" if trajectory is not None else "smalldata_bound")
    if mode == "isotropic_exact":
        if not isotropic:
            raise RegimeError("isotropic_exact mode requires equal trap frequencies")
        rep = evaluate(u0, params)
        return rep.ang_mom, mode
    if mode == "trajectory_min":
        if trajectory is None:
            raise ValueError("trajectory_min mode needs a trajectory")
        return min(row.ang_mom for row in trajectory.rows), mode
    if mode == "smalldata_bound":
        rep = evaluate(u0, params)
        s2 = rep.sigma_norm2
        if s2 > smallness_threshold ** 2:
            raise RegimeError(
                f"||u0||_Sigma^2 = {s2:.3g} exceeds the smallness threshold "
                f"{smallness_threshold ** 2:.3g}")
        return -max(params.omega_rot ** 2, 1.0) * 4.0 * s2, mode
    raise ValueError(f"unknown mode {mode!r}")


def classify(u0: g.ComplexField, params: PhysicsParams, q: QProfile,
             l: float, mode: str) -> ClassificationReport:
    """Dichotomy verdict for one datum given its angular-momentum infimum."""
    if not params.mass_supercritical:
        raise RegimeError("classification defined for 0 < s_c < 1 only")
    if not np.isfinite(l):
        raise ValueError("l must be finite")
    sc = params.s_c
    rep = evaluate(u0, params)
    thr = thresholds(q, rep.mass)
    grad_product = rep.kinetic ** (sc / 2.0) * rep.mass ** ((1.0 - sc) / 2.0)
    excess = rep.energy - l

    lower_const = None
    if excess < 0:
        verdict = Verdict.NEGATIVE_ENERGY_BLOWUP
        me_product = None
        lower_const = (((params.p - 1.0) * params.dim / 4.0)
                       ** (1.0 / (sc * (params.p - 1.0)))
                       * (q.l2_norm / np.sqrt(rep.mass)) ** ((1.0 - sc) / sc)
                       * q.grad_norm)
    else:
        me_product = excess ** sc * rep.mass ** (1.0 - sc)
        if me_product < thr.me_threshold and grad_product < thr.grad_threshold:
            verdict = Verdict.K_PLUS
        elif me_product < thr.me_threshold and grad_product > thr.grad_threshold:
            verdict = Verdict.K_MINUS
        else:
            verdict = Verdict.UNCLASSIFIED
    return ClassificationReport(
        s_c=sc, l_estimate=l, l_mode=mode, me_product=me_product,
        me_threshold=thr.me_threshold, grad_product=grad_product,
        grad_threshold=thr.grad_threshold, verdict=verdict,
        lower_bound_constant=lower_const,
        trajectory_conditional=(mode == "trajectory_min"))


def check_gradient_lowerbound(trajectory, report: ClassificationReport):
    """Per-sample check of the negative-energy gradient lower bound."""
    if report.verdict is not Verdict.NEGATIVE_ENERGY_BLOWUP:
        raise ValueError("gradient lower bound applies to negative-energy data only")
    bound = report.lower_bound_constant
    return [(row.t, row.grad_norm >= bound) for row in trajectory.rows]


def optimal_phase(u: g.ComplexField, phi: g.ComplexField) -> float:
    """Closed-form gauge minimizing the L2 distance ||u - e^{i theta} phi||."""
    ip = complex(np.vdot(phi.values, u.values))
    return float(np.angle(ip)) if ip != 0 else 0.0


def sigma_distance(u: g.ComplexField, phi: g.ComplexField,
                   params: PhysicsParams) -> float:
    """Sigma-norm distance to the phase orbit of phi (L2-optimal gauge)."""
    theta = optimal_phase(u, phi)
    diff = g.ComplexField(u.grid, u.values - np.exp(1j * theta) * phi.values)
    rep = evaluate(diff, params)
    return float(np.sqrt(rep.sigma_norm2))


@dataclass
class StabilityProbe:
    delta: float
    perturbation: str
    sup_distance: float
    distance_over_delta: float
    blowup: bool


@dataclass
class StabilityReport:
    probes: list[StabilityProbe]
    indicator: float | None
    horizon: float

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "indicator": self.indicator,
                "probes": [dataclasses.asdict(p) for p in self.probes]}


def _perturbed_state(gs_field: g.ComplexField, delta: float, kind: str,
                     params: PhysicsParams, rng: np.random.Generator):
    from . import states

    if kind == "random":
        noise = states.random_smooth(gs_field.grid, rng, scale=1.0)
        noise = states.sigma_normalized(noise)
        u0 = g.ComplexField(gs_field.grid, gs_field.values + delta * noise.values)
    elif kind == "scaling":
        s = 1.0 + delta
        dil = g.dilate(gs_field, s, mass_tol=1e-5)
        u0 = g.ComplexField(gs_field.grid, s ** (params.dim / 2.0) * dil.values)
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    # Mass renormalization keeps the comparison on the original sphere.
    m_target = g.l2_norm2(gs_field)
    u0.values *= np.sqrt(m_target / g.l2_norm2(u0))
    return u0


def stability_experiment(gs, deltas, horizon: float, params: PhysicsParams,
                         dt: float = 2e-3, sample_every: int = 20,
                         perturbation: str = "random", seed: int = 1234,
                         grad_factor: float = 10.0,
                         tail_fraction: float = 0.01) -> StabilityReport:
    """Track the sup over time of the orbit distance for a delta sweep.

    Blow-up during a probe is recorded as instability evidence (distance set
    to infinity), never raised as an error.
    """
    from . import dynamics
    from .groundstate import instability_indicator

    phi = gs.field
    indicator = None
    if params.mass_supercritical:
        indicator = instability_indicator(gs, params)

    probes = []
    for delta in deltas:
        if delta == 0.0:
            u0 = phi.copy()
        else:
            u0 = _perturbed_state(phi, delta, perturbation, params,
                                  np.random.default_rng(seed))
        state = dynamics.SimState(field=u0, t=0.0, params=params)
        row0 = diagnostics(state)
        monitor = dynamics.BlowupMonitor(baseline_grad=row0.grad_norm,
                                         grad_factor=grad_factor,
                                         tail_fraction=tail_fraction)
        sup_dist = 0.0
        blowup = False
        n_steps = int(round(horizon / dt))
        kern = dynamics._StepKernel(phi.grid, params, dt)
        u = u0.values.copy()
        try:
            for k in range(1, n_steps + 1):
                u = kern.apply(u)
                if k % sample_every == 0 or k == n_steps:
                    cur = g.ComplexField(phi.grid, u)
                    d = sigma_distance(cur, phi, params)
                    sup_dist = max(sup_dist, d)
                    row = diagnostics(dynamics.SimState(cur, k * dt, params, k))
                    rep = monitor.check(None, row)
                    if rep.blowup or rep.resolution_lost:
                        blowup = True
                        sup_dist = float("inf")
                        break
        except CorruptFieldError:
            blowup = True
            sup_dist = float("inf")
        probes.append(StabilityProbe(
            delta=delta, perturbation=perturbation, sup_distance=sup_dist,
            distance_over_delta=sup_dist / delta if delta > 0 else sup_dist,
            blowup=blowup))
    return StabilityReport(probes=probes, indicator=indicator, horizon=horizon)
