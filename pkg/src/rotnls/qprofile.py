"""Free ground state of -1/2 Lap Q + Q - Q^p = 0 by radial shooting.

The radial ODE  Q'' + (N-1) Q'/r = 2(Q - Q^p)  is integrated with a
high-order adaptive scheme; the initial height Q(0) is isolated by bisection
between overshoot (Q crosses zero) and undershoot (Q turns back up).  Beyond a
matching radius the numerically computed profile is replaced by the exact
decaying solution of the linearized equation, c * K_{N/2-1}(sqrt(2) r) /
r^{N/2-1}, and all tail integrals use that closed form.  Norms carry the
radial measure |S^{N-1}| r^{N-1} dr.

Certification rests on the two Pohozaev-derived identities

    ||grad Q|| * ||Q||^{(1-s_c)/s_c} = A^{1/2} ||Q||^{1/s_c},
    E00 * M^{(1-s_c)/s_c}            = (s_c/N) A ||Q||^{2/s_c},

with A = 2N(p-1)/(2(p+1)-N(p-1)), and on the sharp constant

    c_GN = A^{(4-N(p-1))/4} (p+1) / (N(p-1) ||Q||^{p-1}).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad, simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import k0, k1

from .errors import CertificationError, ConvergenceError, RegimeError

_SPHERE_AREA = {2: 2.0 * np.pi, 3: 4.0 * np.pi}


def _integrate(a: float, N: int, p: float, r_end: float):
    """Integrate from the series start; classify as overshoot/undershoot/decay."""

    def rhs(r, y):
        q, dq = y
        return (dq, -(N - 1) / r * dq + 2.0 * (q - np.sign(q) * np.abs(q) ** p))

    def cross_zero(r, y):
        return y[0]

    cross_zero.terminal = True
    cross_zero.direction = -1

    def turn_up(r, y):
        # Undershoot signature: derivative turns positive while 0 < Q < 1.
        return y[1] if y[0] < 1.0 else -1.0

    turn_up.terminal = True
    turn_up.direction = 1

    r0 = 1e-6
    q0 = a + (a - a ** p) * r0 ** 2 / N
    dq0 = 2.0 * (a - a ** p) * r0 / N
    sol = solve_ivp(rhs, (r0, r_end), (q0, dq0), method="DOP853",
                    rtol=1e-12, atol=1e-14, events=(cross_zero, turn_up),
                    dense_output=True)
    if sol.t_events[0].size:
        kind = "overshoot"
    elif sol.t_events[1].size:
        kind = "undershoot"
    else:
        kind = "decayed"
    return kind, sol


def _tail_value(N: int, r):
    """Decaying solution of q'' + (N-1)q'/r - 2q = 0, normalized arbitrarily."""
    r = np.asarray(r, dtype=float)
    if N == 2:
        return k0(np.sqrt(2.0) * r)
    return np.exp(-np.sqrt(2.0) * r) / r


def _tail_deriv(N: int, r):
    r = np.asarray(r, dtype=float)
    if N == 2:
        return -np.sqrt(2.0) * k1(np.sqrt(2.0) * r)
    return -np.exp(-np.sqrt(2.0) * r) * (np.sqrt(2.0) * r + 1.0) / r ** 2


@dataclass
class QProfile:
    """Radial profile of the free ground state with certified norms."""

    dim: int
    p: float
    tol: float
    r_samples: np.ndarray
    q_samples: np.ndarray
    r_match: float
    tail_coeff: float
    mass: float       # ||Q||_2^2
    grad2: float      # ||grad Q||_2^2
    lp1: float        # ||Q||_{p+1}^{p+1}
    e00: float        # free energy E_{0,0}(Q)
    c_gn: float

    @property
    def s_c(self) -> float:
        return self.dim / 2.0 - 2.0 / (self.p - 1.0)

    @property
    def grad_norm(self) -> float:
        return float(np.sqrt(self.grad2))

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(self.mass))

    def evaluate(self, r) -> np.ndarray:
        """Q(r) for arbitrary radii, analytic tail beyond the sample range."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        inside = r <= self.r_samples[-1]
        spline = CubicSpline(self.r_samples, self.q_samples)
        out[inside] = spline(r[inside])
        far = ~inside
        if far.any():
            out[far] = self.tail_coeff * _tail_value(self.dim, r[far])
        return out

    def sample_on_grid(self, gr, amplitude: float = 1.0):
        from . import grid as g

        rr = np.sqrt(gr.radius2)
        vals = amplitude * self.evaluate(rr.ravel()).reshape(gr.shape)
        return g.ComplexField(gr, vals.astype(np.complex128))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim, "p": self.p, "tol": self.tol,
            "r_samples": self.r_samples.tolist(),
            "q_samples": self.q_samples.tolist(),
            "r_match": self.r_match, "tail_coeff": self.tail_coeff,
            "mass": self.mass, "grad2": self.grad2, "lp1": self.lp1,
            "e00": self.e00, "c_gn": self.c_gn,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QProfile":
        return cls(dim=int(d["dim"]), p=float(d["p"]), tol=float(d["tol"]),
                   r_samples=np.asarray(d["r_samples"]),
                   q_samples=np.asarray(d["q_samples"]),
                   r_match=float(d["r_match"]), tail_coeff=float(d["tail_coeff"]),
                   mass=float(d["mass"]), grad2=float(d["grad2"]),
                   lp1=float(d["lp1"]), e00=float(d["e00"]), c_gn=float(d["c_gn"]))


def pohozaev_residuals(q: QProfile) -> tuple[float, float]:
    """Relative residuals of the two Pohozaev-derived identities."""
    sc = q.s_c
    A = 2.0 * q.dim * (q.p - 1.0) / (2.0 * (q.p + 1.0) - q.dim * (q.p - 1.0))
    if sc > 0:
        lhs1 = q.grad_norm * q.l2_norm ** ((1.0 - sc) / sc)
        rhs1 = np.sqrt(A) * q.l2_norm ** (1.0 / sc)
        lhs2 = q.e00 * q.mass ** ((1.0 - sc) / sc)
        rhs2 = (sc / q.dim) * A * q.l2_norm ** (2.0 / sc)
        res2 = abs(lhs2 - rhs2) / max(abs(rhs2), 1e-300)
    else:
        # Mass-critical reference profile: the identities collapse to
        # ||grad Q||^2 = A * mass and E00 = 0.
        lhs1 = q.grad2
        rhs1 = A * q.mass
        res2 = abs(q.e00) / q.lp1
    return abs(lhs1 - rhs1) / abs(rhs1), res2


def gn_constant_closed_form(N: int, p: float, mass: float) -> float:
    A = 2.0 * N * (p - 1.0) / (2.0 * (p + 1.0) - N * (p - 1.0))
    return A ** ((4.0 - N * (p - 1.0)) / 4.0) * (p + 1.0) / (N * (p - 1.0) * mass ** ((p - 1.0) / 2.0))


def _radial_norms(N: int, p: float, r_in, q_in, dq_in, r_match, c_tail):
    """Numeric quadrature inside the matching radius, closed-form tail beyond."""
    area = _SPHERE_AREA[N]
    w = r_in ** (N - 1)
    mass_in = simpson(q_in ** 2 * w, x=r_in)
    grad_in = simpson(dq_in ** 2 * w, x=r_in)
    lp1_in = simpson(np.abs(q_in) ** (p + 1) * w, x=r_in)

    def tq(r):
        return c_tail * _tail_value(N, r)

    def tdq(r):
        return c_tail * _tail_deriv(N, r)

    mass_tail = quad(lambda r: tq(r) ** 2 * r ** (N - 1), r_match, np.inf)[0]
    grad_tail = quad(lambda r: tdq(r) ** 2 * r ** (N - 1), r_match, np.inf)[0]
    lp1_tail = quad(lambda r: np.abs(tq(r)) ** (p + 1) * r ** (N - 1), r_match, np.inf)[0]
    return (area * (mass_in + mass_tail), area * (grad_in + grad_tail),
            area * (lp1_in + lp1_tail))


def solve_q(N: int, p: float, tol: float = 1e-10, max_bisect: int = 200) -> QProfile:
    """Shoot for the positive decaying radial profile and certify it."""
    if N not in (2, 3):
        raise RegimeError("N must be 2 or 3")
    pmax = np.inf if N == 2 else 5.0
    if not (1.0 + 4.0 / N <= p < pmax):
        raise RegimeError(f"p={p} outside [{1 + 4 / N}, {pmax}) for the reference profile")

    r_end = 25.0
    lo, hi = 1.01, 2.0
    kind, _ = _integrate(hi, N, p, r_end)
    tries = 0
    while kind != "overshoot":
        hi *= 1.5
        tries += 1
        if tries > 60:
            raise ConvergenceError("failed to bracket the shooting height from above")
        kind, _ = _integrate(hi, N, p, r_end)
    kind, _ = _integrate(lo, N, p, r_end)
    if kind == "overshoot":
        raise ConvergenceError("lower bracket already overshoots")

    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        kind, _ = _integrate(mid, N, p, r_end)
        if kind == "overshoot":
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15 * hi:
            break
    a_star = 0.5 * (lo + hi)

    _, sol = _integrate(lo, N, p, r_end)
    t_stop = sol.t[-1]
    # Match to the analytic tail where the profile is small but still clean:
    # below ~1e-5 Q(0) the cubic nonlinearity is negligible, while the noise
    # injected by the growing mode is still orders of magnitude smaller.
    target = a_star * 1e-5
    rr = np.linspace(2.0, min(t_stop, 16.0), 1600)
    qq = sol.sol(rr)[0]
    below = np.where(qq < target)[0]
    if below.size:
        r_match = float(rr[below[0]])
    else:
        r_match = float(min(t_stop, 16.0) - 1.0)
    q_m, dq_m = sol.sol(r_match)
    c_tail = q_m / _tail_value(N, r_match)
    slope_mismatch = abs(dq_m - c_tail * _tail_deriv(N, r_match)) / abs(dq_m)
    if slope_mismatch > 1e-4:
        raise CertificationError(
            f"tail matching slope mismatch {slope_mismatch:.2e} at r={r_match:.2f}")

    # Dense profile: numeric inside the match radius, analytic beyond, out to
    # where the invariant Q(R_max) < 1e-10 Q(0) holds with margin.
    r_max = r_match
    while c_tail * _tail_value(N, r_max) > 1e-11 * a_star:
        r_max += 0.5
    n_inside = 6001
    r_in = np.linspace(1e-6, r_match, n_inside)
    y_in = sol.sol(r_in)
    r_out = np.linspace(r_match, r_max, 1200)[1:]
    q_out = c_tail * _tail_value(N, r_out)
    r_all = np.concatenate([r_in, r_out])
    q_all = np.concatenate([y_in[0], q_out])

    mass, grad2, lp1 = _radial_norms(N, p, r_in, y_in[0], y_in[1], r_match, c_tail)
    e00 = 0.5 * grad2 - 2.0 / (p + 1.0) * lp1
    c_gn = gn_constant_closed_form(N, p, mass)

    prof = QProfile(dim=N, p=p, tol=tol, r_samples=r_all, q_samples=q_all,
                    r_match=r_match, tail_coeff=c_tail, mass=mass, grad2=grad2,
                    lp1=lp1, e00=e00, c_gn=c_gn)

    if np.any(q_all <= 0) or np.any(np.diff(q_all) >= 0):
        raise CertificationError("profile is not positive strictly decreasing")
    if q_all[-1] >= 1e-10 * q_all[0]:
        raise CertificationError("profile tail not small enough at R_max")
    res1, res2 = pohozaev_residuals(prof)
    budget = max(tol, 1e-6)
    if res1 > budget or res2 > budget:
        raise CertificationError(
            f"Pohozaev residuals {res1:.2e}, {res2:.2e} exceed {budget:.1e}")

    ratio = lp1 / (grad2 ** (N * (p - 1) / 4.0) * mass ** ((p + 1.0) / 2.0 - N * (p - 1) / 4.0))
    if abs(ratio / c_gn - 1.0) > 1e-6:
        raise CertificationError(
            f"sharp-constant cross-check failed: ratio/c_GN = {ratio / c_gn}")
    return prof


def gn_constant(q: QProfile) -> float:
    """Sharp constant from the closed form, cross-checked against the profile."""
    c = gn_constant_closed_form(q.dim, q.p, q.mass)
    ratio = q.lp1 / (q.grad2 ** (q.dim * (q.p - 1) / 4.0)
                     * q.mass ** ((q.p + 1.0) / 2.0 - q.dim * (q.p - 1) / 4.0))
    if abs(ratio / c - 1.0) > 1e-6:
        raise CertificationError("profile does not saturate its own sharp constant")
    return c


@dataclass(frozen=True)
class Thresholds:
    """Dichotomy thresholds derived from the reference profile."""

    s_c: float
    x1: float
    x_max: float
    x_r: float
    me_threshold: float
    grad_threshold: float


def thresholds(q: QProfile, u0_mass: float) -> Thresholds:
    """Threshold quantities; x1 is the data-dependent turning point."""
    sc = q.s_c
    if sc <= 0:
        raise RegimeError("thresholds require a mass-supercritical exponent")
    N, p = q.dim, q.p
    x_max = ((p + 1.0) / (N * (p - 1.0) * q.c_gn)) ** (1.0 / (sc * (p - 1.0)))
    x_r = ((p - 1.0) * N / 4.0) ** (1.0 / (sc * (p - 1.0))) * x_max
    x1 = x_max * u0_mass ** (-(1.0 - sc) / (2.0 * sc))
    me = q.e00 ** sc * q.mass ** (1.0 - sc)
    gthr = q.grad_norm ** sc * q.l2_norm ** (1.0 - sc)
    return Thresholds(s_c=sc, x1=x1, x_max=x_max, x_r=x_r,
                      me_threshold=me, grad_threshold=gthr)


def gradient_energy_envelope(x, u0_mass: float, c_gn: float, N: int, p: float):
    """Lower envelope f(x) = x^2/2 - beta x^{N(p-1)/2} of E - l vs ||grad u||."""
    beta = 2.0 * c_gn / (p + 1.0) * u0_mass ** ((p + 1.0) / 2.0 - N * (p - 1.0) / 4.0)
    return 0.5 * np.asarray(x) ** 2 - beta * np.asarray(x) ** (N * (p - 1.0) / 2.0)


def product_energy_envelope(x, c_gn: float, N: int, p: float):
    """Envelope h(x) in the product variable ||grad u|| * ||u||^{(1-s_c)/s_c}."""
    return 0.5 * np.asarray(x) ** 2 - 2.0 * c_gn / (p + 1.0) * np.asarray(x) ** (N * (p - 1.0) / 2.0)


def cached_profile(N: int, p: float, tol: float = 1e-10, cache_dir=None):
    """Solve or reuse a cached profile; returns (profile, cache_hit)."""
    if cache_dir is None:
        return solve_q(N, p, tol), False
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = f"qprofile_N{N}_p{p:g}_tol{tol:g}.json"
    path = cache_dir / key
    if path.exists():
        with open(path) as fh:
            return QProfile.from_dict(json.load(fh)), True
    prof = solve_q(N, p, tol)
    with open(path, "w") as fh:
        json.dump(prof.to_dict(), fh, sort_keys=True)
        fh.write("\n")
    return prof, False
