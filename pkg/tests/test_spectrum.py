"""Trap spectrum: closed-form oscillator oracles and flow properties.

Separable oscillator: the lowest eigenvalue of -Lap + sum gamma_j^2 x_j^2 is
sum gamma_j; rotation about the third axis shifts level m by 2 s |Omega| m,
so the m = 0 ground level is untouched for |Omega| < gamma.
"""

import numpy as np
import pytest

from rotnls import states
from rotnls.errors import RegimeError
from rotnls.functionals import PhysicsParams, evaluate
from rotnls.grid import make_grid
from rotnls.spectrum import lowest_eigenpair


class TestOscillatorOracles:
    @pytest.mark.parametrize("omega", [0.0, 0.3, 0.6])
    def test_2d_isotropic(self, grid2d_fine, omega):
        pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 1), omega_rot=omega)
        res = lowest_eigenpair(grid2d_fine, pp, tol=1e-9)
        assert res.lambda0 == pytest.approx(-2.0, abs=1e-6)

    def test_2d_anisotropic(self, grid2d_fine):
        pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 2), omega_rot=0.0)
        res = lowest_eigenpair(grid2d_fine, pp, tol=1e-9)
        assert res.lambda0 == pytest.approx(-3.0, abs=1e-6)

    def test_3d_isotropic(self):
        gr = make_grid(3, [8, 8, 8], [64, 64, 64])
        pp = PhysicsParams(dim=3, p=3.0, gammas=(1, 1, 1), omega_rot=0.0)
        res = lowest_eigenpair(gr, pp, tol=1e-9)
        assert res.lambda0 == pytest.approx(-3.0, abs=1e-6)


class TestFlowProperties:
    def test_rayleigh_monotone(self, grid2d_fine):
        pp = PhysicsParams(dim=2, p=3.0, gammas=(1.0, 1.5), omega_rot=0.5)
        res = lowest_eigenpair(grid2d_fine, pp, tol=1e-10)
        h = np.asarray(res.rayleigh_history)
        assert np.all(np.diff(h) <= 1e-12 * np.maximum(1.0, np.abs(h[:-1])))
        assert res.residual < 1e-7

    def test_eigenfield_normalized_and_residual(self, grid2d_fine, params_rot):
        res = lowest_eigenpair(grid2d_fine, params_rot, tol=1e-9)
        rep = evaluate(res.eigenfield, params_rot)
        assert rep.mass == pytest.approx(1.0, abs=1e-12)
        assert res.residual < 1e-8

    def test_mu0_lower_bounds_form_on_random_fields(self, grid2d, params_rot, rng):
        res = lowest_eigenpair(grid2d, params_rot, tol=1e-10)
        for _ in range(50):
            f = states.random_smooth(grid2d, rng, vortex_mix=rng.uniform(0, 1))
            rep = evaluate(f, params_rot)
            assert rep.quad_form / rep.mass >= res.mu0 - 1e-8

    def test_rejects_fast_rotation(self, grid2d):
        pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 1), omega_rot=1.0)
        with pytest.raises(RegimeError):
            lowest_eigenpair(grid2d, pp)

    def test_json_fields(self, grid2d, params_rot):
        res = lowest_eigenpair(grid2d, params_rot, tol=1e-9)
        d = res.to_dict()
        assert set(d) == {"mu0", "lambda0", "residual", "iterations"}
        assert d["lambda0"] == -d["mu0"]
