"""Lowest eigenvalue of R = -Lap + V + 2 L_rot by projected gradient flow.

Imaginary-time iteration with L2 renormalization: each step moves along the
spectrally preconditioned residual, with the step length (and a momentum
correction) chosen by exact Rayleigh-quotient minimization over the small
subspace span{u, precond residual, previous update} (the locally optimal
block form of preconditioned inverse iteration).  The Rayleigh quotient is
monotone non-increasing by construction.  Only |Omega| < gamma is admissible;
below that the quadratic form is bounded and coercive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid as g
from .errors import ConvergenceError
from .functionals import PhysicsParams, potential_field


@dataclass
class EigenResult:
    mu0: float                 # inf of quad_form[u] / mass(u)
    lambda0: float             # -mu0
    eigenfield: g.ComplexField
    residual: float            # ||R phi - mu0 phi||_2
    iterations: int
    rayleigh_history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"mu0": self.mu0, "lambda0": self.lambda0,
                "residual": self.residual, "iterations": self.iterations}


def apply_quadratic_form_operator(values: np.ndarray, gr: g.Grid,
                                  params: PhysicsParams, V: np.ndarray) -> np.ndarray:
    """R u = -Lap u + V u + 2 L_rot u, all pieces spectral or pointwise."""
    spec = g.fftn(values)
    out = g.ifftn(-gr.laplacian_mult * spec)
    out += V * values
    if params.omega_rot != 0.0:
        d1 = g.ifftn(spec * gr.deriv_mult[0])
        d2 = g.ifftn(spec * gr.deriv_mult[1])
        rot = params.lomega_sign * (-1j) * params.omega_rot * (
            gr.coords[0] * d2 - gr.coords[1] * d1)
        out += 2.0 * rot
    return out


def lowest_eigenpair(gr: g.Grid, params: PhysicsParams, tol: float = 1e-9,
                     max_iter: int = 5000) -> EigenResult:
    """Ground eigenpair of the trap-plus-rotation operator.

    Converged when successive Rayleigh quotients differ by less than tol and
    the eigen-residual is below 10*tol (scaled by max(1, |mu0|)).
    """
    params.require_subrotation()
    V = potential_field(gr, params).values
    dv = gr.cell_volume

    def dot(a, b):
        return complex(np.vdot(b, a) * dv)

    def norm(a):
        return float(np.sqrt(np.vdot(a, a).real * dv))

    # Anisotropic Gaussian matched to the trap, the exact ground state at
    # Omega = 0.
    expo = sum(gam * x ** 2 for gam, x in zip(params.gammas, gr.coords))
    u = np.ascontiguousarray(np.broadcast_to(np.exp(-0.5 * expo), gr.shape))
    u = u.astype(np.complex128) / norm(np.exp(-0.5 * expo))

    shift = sum(params.gammas)
    precond = 1.0 / (np.abs(gr.laplacian_mult) + 2.0 * shift)

    def apply_R(v):
        return apply_quadratic_form_operator(v, gr, params, V)

    Ru = apply_R(u)
    mu = dot(Ru, u).real
    history = [mu]
    prev = None
    prev_R = None
    res_norm = norm(Ru - mu * u)
    it = 0
    for it in range(1, max_iter + 1):
        resid = Ru - mu * u
        res_norm = norm(resid)
        if it > 1 and history[-2] - history[-1] < tol and \
                res_norm < 10.0 * tol * max(1.0, abs(mu)):
            break
        w = g.ifftn(precond * g.fftn(resid))

        # Orthonormal basis of span{u, w, prev} in the L2 inner product.
        basis, basis_R = [u], [Ru]
        for cand, cand_R in ((w, None), (prev, prev_R)):
            if cand is None:
                continue
            v = cand.copy()
            vR = cand_R
            for b in basis:
                v -= dot(v, b) * b
            nv = norm(v)
            if nv < 1e-10:
                continue
            v /= nv
            # Re-orthogonalize once for numerical safety.
            for b in basis:
                v -= dot(v, b) * b
            nv2 = norm(v)
            if nv2 < 1e-10:
                continue
            v /= nv2
            basis.append(v)
            basis_R.append(apply_R(v) if vR is None else None)
        basis_R = [apply_R(v) if rv is None else rv for v, rv in zip(basis, basis_R)]

        k = len(basis)
        H = np.empty((k, k), dtype=complex)
        for i in range(k):
            for j in range(k):
                H[i, j] = dot(basis_R[j], basis[i])
        H = 0.5 * (H + H.conj().T)
        evals, evecs = np.linalg.eigh(H)
        c = evecs[:, 0]
        u_new = sum(ci * v for ci, v in zip(c, basis))
        Ru_new = sum(ci * rv for ci, rv in zip(c, basis_R))
        nrm = norm(u_new)
        u_new /= nrm
        Ru_new /= nrm
        # Momentum part of the update (everything except the old iterate).
        prev = u_new - c[0] / nrm * u
        prev_R = Ru_new - c[0] / nrm * Ru
        pn = norm(prev)
        if pn > 1e-12:
            prev /= pn
            prev_R /= pn
        else:
            prev = prev_R = None
        u, Ru = u_new, Ru_new
        mu = dot(Ru, u).real
        history.append(mu)
    else:
        raise ConvergenceError(
            f"eigen iteration did not converge in {max_iter} steps "
            f"(last mu={mu:.12g}, residual={res_norm:.3e})")

    phi = g.ComplexField(gr, u / norm(u))
    return EigenResult(mu0=mu, lambda0=-mu, eigenfield=phi,
                       residual=res_norm, iterations=it,
                       rayleigh_history=history)
