"""Physical functionals of the rotating trapped NLS.

Conventions (all quadrature on the grid):
    V(x)        = sum_j gamma_j^2 x_j^2
    L_rot u     = lomega_sign * (-i)|Omega| (x1 d2 - x2 d1) u
    ang_mom     = Re <L_rot u, u>                    (always real in exact arithmetic)
    quad_form   = ||grad u||^2 + int V|u|^2 + 2 ang_mom
    energy      = 1/2 quad_form - 2/(p+1) int |u|^{p+1}
    sigma_norm2 = ||grad u||^2 + int |x|^2 |u|^2 + ||u||^2

lomega_sign = +1 reproduces the textbook 2D display of the rotation operator;
the default -1 gives ang_mom = -|Omega| * mass for a unit positive vortex.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import grid as g
from .errors import CorruptFieldError, GridError, RegimeError, ResolutionWarning


@dataclass(frozen=True)
class PhysicsParams:
    """Trap frequencies, rotation speed and nonlinearity exponent."""

    dim: int
    p: float
    gammas: tuple[float, ...]
    omega_rot: float = 0.0
    lomega_sign: int = -1

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GridError(f"dim must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "gammas", tuple(float(x) for x in self.gammas))
        if len(self.gammas) != self.dim:
            raise GridError("gammas must have length dim")
        if min(self.gammas) <= 0:
            raise RegimeError("all trap frequencies must be positive")
        pmax = np.inf if self.dim == 2 else 1.0 + 4.0 / (self.dim - 2)
        if not (1.0 < self.p < pmax):
            raise RegimeError(f"exponent p={self.p} outside (1, {pmax})")
        if self.lomega_sign not in (-1, 1):
            raise RegimeError("lomega_sign must be +1 or -1")
        if self.omega_rot < 0:
            raise RegimeError("omega_rot is a magnitude; must be >= 0")

    @property
    def gamma_min(self) -> float:
        return min(self.gammas)

    @property
    def s_c(self) -> float:
        """Scaling index N/2 - 2/(p-1)."""
        return self.dim / 2.0 - 2.0 / (self.p - 1.0)

    @property
    def mass_supercritical(self) -> bool:
        return 0.0 < self.s_c < 1.0

    def require_subrotation(self) -> None:
        if self.omega_rot >= self.gamma_min:
            raise RegimeError(
                f"|Omega|={self.omega_rot} must be < gamma={self.gamma_min} for this operation"
            )


@dataclass(frozen=True)
class FunctionalReport:
    """All scalar functionals of a single field."""

    mass: float
    kinetic: float
    potential: float
    lp1: float
    ang_mom: float
    quad_form: float
    energy: float
    sigma_norm2: float

    CSV_COLUMNS = ("t", "mass", "kinetic", "potential", "lp1", "ang_mom",
                   "quad_form", "energy", "sigma_norm2")

    @property
    def h_norm2(self) -> float:
        return self.quad_form

    def csv_row(self, t: float) -> list[float]:
        return [t, self.mass, self.kinetic, self.potential, self.lp1,
                self.ang_mom, self.quad_form, self.energy, self.sigma_norm2]


def potential_field(gr: g.Grid, params: PhysicsParams) -> g.RealField:
    """Samples of the anisotropic harmonic trap sum_j gamma_j^2 x_j^2."""
    if gr.dim != params.dim:
        raise GridError("grid and params dimension mismatch")
    V = sum(gam ** 2 * x ** 2 for gam, x in zip(params.gammas, gr.coords))
    return g.RealField(gr, np.broadcast_to(V, gr.shape).copy())


def _rotation_values(f: g.ComplexField, params: PhysicsParams) -> np.ndarray:
    """Raw samples of L_rot f (derivatives spectral, coordinates pointwise)."""
    gr = f.grid
    spec = g.fftn(f.values)
    d1 = g.ifftn(spec * gr.deriv_mult[0])
    d2 = g.ifftn(spec * gr.deriv_mult[1])
    x1, x2 = gr.coords[0], gr.coords[1]
    return params.lomega_sign * (-1j) * params.omega_rot * (x1 * d2 - x2 * d1)


def apply_angular_momentum(f: g.ComplexField, params: PhysicsParams) -> g.ComplexField:
    """L_rot f; zero field when the rotation speed vanishes.

    Warns (and still answers) when the field is marginally resolved, since
    the spectral derivatives inside are then unreliable.
    """
    if params.omega_rot == 0.0:
        return g.ComplexField(f.grid, np.zeros(f.grid.shape, dtype=np.complex128))
    if g.spectral_tail_fraction(f) > g.RESOLUTION_WARN_FRACTION:
        warnings.warn("field is marginally resolved; rotation derivative may be "
                      "inaccurate", ResolutionWarning, stacklevel=2)
    return g.ComplexField(f.grid, _rotation_values(f, params))


def evaluate(f: g.ComplexField, params: PhysicsParams,
             ang_mom_imag_tol: float = 1e-10) -> FunctionalReport:
    """Evaluate every functional; rejects corrupt fields.

    The imaginary part of <L_rot u, u> is a pure discretization symmetry
    monitor and must stay below ang_mom_imag_tol * mass.
    """
    g.check_finite(f)
    gr = f.grid
    dv = gr.cell_volume
    u = f.values
    absu2 = np.abs(u) ** 2
    mass = float(absu2.sum() * dv)

    spec = g.fftn(u)
    grads = [g.ifftn(spec * gr.deriv_mult[ax]) for ax in range(gr.dim)]
    kinetic = float(sum(np.vdot(d, d).real for d in grads) * dv)

    V = sum(gam ** 2 * x ** 2 for gam, x in zip(params.gammas, gr.coords))
    potential = float((V * absu2).sum() * dv)

    lp1 = float((np.abs(u) ** (params.p + 1)).sum() * dv)

    if params.omega_rot != 0.0:
        x1, x2 = gr.coords[0], gr.coords[1]
        rot = params.lomega_sign * (-1j) * params.omega_rot * (x1 * grads[1] - x2 * grads[0])
        lraw = complex(np.vdot(u, rot) * dv)
        if mass > 0 and abs(lraw.imag) > ang_mom_imag_tol * mass:
            raise CorruptFieldError(
                f"angular momentum picked up imaginary part {lraw.imag:.3e} "
                f"(tolerance {ang_mom_imag_tol * mass:.3e}); field breaks grid symmetry"
            )
        ang_mom = lraw.real
    else:
        ang_mom = 0.0

    quad_form = kinetic + potential + 2.0 * ang_mom
    energy = 0.5 * quad_form - 2.0 / (params.p + 1.0) * lp1
    sigma_norm2 = kinetic + float((gr.radius2 * absu2).sum() * dv) + mass
    return FunctionalReport(mass, kinetic, potential, lp1, ang_mom,
                            quad_form, energy, sigma_norm2)


def stationary_functionals(f: g.ComplexField, params: PhysicsParams, omega: float):
    """Action S, Nehari functional I and Pohozaev functional P at frequency omega."""
    r = evaluate(f, params)
    S = 0.5 * r.quad_form + 0.5 * omega * r.mass - 2.0 / (params.p + 1.0) * r.lp1
    I = r.quad_form + omega * r.mass - 2.0 * r.lp1
    N, p = params.dim, params.p
    P = 0.5 * r.kinetic - 0.5 * r.potential - N * (p - 1.0) / (2.0 * (p + 1.0)) * r.lp1
    return S, I, P


def pohozaev(report: FunctionalReport, params: PhysicsParams) -> float:
    N, p = params.dim, params.p
    return (0.5 * report.kinetic - 0.5 * report.potential
            - N * (p - 1.0) / (2.0 * (p + 1.0)) * report.lp1)


def gn_ratio(f: g.ComplexField, params: PhysicsParams) -> float:
    """||f||_{p+1}^{p+1} / (||grad f||^a ||f||^b) with a = N(p-1)/2, b = p+1-a."""
    r = evaluate(f, params)
    if r.mass == 0.0:
        raise ValueError("gn_ratio of the zero field is undefined")
    a = params.dim * (params.p - 1.0) / 2.0
    b = params.p + 1.0 - a
    return r.lp1 / (r.kinetic ** (a / 2.0) * r.mass ** (b / 2.0))


def emii_bound_check(f: g.ComplexField, params: PhysicsParams, a: float) -> float:
    """Slack of |ang_mom| <= (|Omega|^2/2a)||x f||^2 + (a/2)||grad f||^2."""
    if a <= 0:
        raise ValueError("parameter a must be positive")
    r = evaluate(f, params)
    xmom = r.sigma_norm2 - r.kinetic - r.mass  # int |x|^2 |f|^2
    return (params.omega_rot ** 2 / (2.0 * a)) * xmom + 0.5 * a * r.kinetic - abs(r.ang_mom)
