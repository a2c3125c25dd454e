"""Variational solvers: Nehari projection and minimization, local
minimization, rescaling, certification, instability indicator.

Gaussian oracle for the projection (unit trap, p=3, omega=1):
kappa = ((quad_form + mass)/(2 lp1))^{1/(p-1)} = ((2+1)/(1/pi))^{1/2} = sqrt(3 pi).
"""

import numpy as np
import pytest

from rotnls import states
from rotnls.errors import ConvergenceError, RegimeError
from rotnls.functionals import PhysicsParams, evaluate, stationary_functionals
from rotnls.grid import ComplexField, make_grid
from rotnls.groundstate import (GapReport, LocalMinimizationSpec, b_omega_diagnostic,
                                certify, indicator_fd_crosscheck,
                                instability_indicator, minimize_local,
                                minimize_nehari, nehari_project,
                                rescale_to_unit_frequency, wellposedness_gap)


class TestNehariProject:
    def test_gaussian_kappa(self, grid2d, params_iso):
        f = states.normalized_gaussian(grid2d)
        proj = nehari_project(f, 1.0, params_iso)
        kappa = proj.values[32, 32] / f.values[32, 32]
        assert kappa.real == pytest.approx(np.sqrt(3 * np.pi), rel=1e-9)
        assert abs(kappa.imag) < 1e-12

    def test_on_manifold_identity(self, grid2d, params_iso):
        f = nehari_project(states.normalized_gaussian(grid2d), 1.0, params_iso)
        _, I, _ = stationary_functionals(f, params_iso, 1.0)
        rep = evaluate(f, params_iso)
        assert abs(I) < 1e-10 * (rep.quad_form + rep.mass)
        again = nehari_project(f, 1.0, params_iso)
        assert np.abs(again.values - f.values).max() < 1e-10 * np.abs(f.values).max()

    def test_amplitude_invariance(self, grid2d, params_iso):
        f = states.normalized_gaussian(grid2d)
        doubled = ComplexField(grid2d, 2.0 * f.values)
        a = nehari_project(f, 1.0, params_iso)
        b = nehari_project(doubled, 1.0, params_iso)
        assert np.abs(a.values - b.values).max() < 1e-12 * np.abs(a.values).max()

    def test_zero_nonlinearity_rejected(self, grid2d, params_iso):
        z = ComplexField(grid2d, np.zeros(grid2d.shape, complex))
        with pytest.raises(ValueError):
            nehari_project(z, 1.0, params_iso)


class TestMinimizeNehari:
    def test_certified_state(self, nehari_state_25, params_25):
        gs = nehari_state_25
        rep = evaluate(gs.field, params_25)
        assert gs.residual < 1e-6 * np.sqrt(rep.sigma_norm2)
        assert gs.nehari_residual < 1e-10 * (rep.quad_form + abs(gs.omega) * rep.mass)
        assert gs.d_omega > 0
        # action identity S = ((p-1)/(p+1)) lp1 on the constraint
        assert gs.action == pytest.approx((4.0 / 6.0) * rep.lp1, rel=1e-9)

    def test_radial_up_to_phase(self, nehari_state_25, params_25):
        # angular modes m != 0 carry < 1e-8 of the mass; measured through the
        # rotation generator, which vanishes identically on m = 0.
        gs = nehari_state_25
        pp = PhysicsParams(dim=2, p=5.0, gammas=(1, 1), omega_rot=1.0,
                           lomega_sign=params_25.lomega_sign)
        from rotnls.functionals import apply_angular_momentum
        from rotnls.grid import l2_norm2
        Lf = apply_angular_momentum(gs.field, pp)
        assert l2_norm2(Lf) < 1e-8 * gs.mass

    def test_seed_reproducibility(self, params_25, grid2d_fine):
        a = minimize_nehari(-1.0, params_25, grid2d_fine, tol=1e-10,
                            rng=np.random.default_rng(1))
        b = minimize_nehari(-1.0, params_25, grid2d_fine, tol=1e-10,
                            rng=np.random.default_rng(2))
        assert a.d_omega == pytest.approx(b.d_omega, rel=1e-6)

    def test_below_lambda0_rejected(self, params_25, grid2d):
        # omega + lambda0 form value becomes nonpositive under projection
        with pytest.raises((ValueError, ConvergenceError)):
            minimize_nehari(-2.5, params_25, grid2d, tol=1e-8, max_iter=3000)

    def test_fast_rotation_rejected(self, grid2d):
        pp = PhysicsParams(dim=2, p=5.0, gammas=(1, 1), omega_rot=1.5)
        with pytest.raises(RegimeError):
            minimize_nehari(1.0, pp, grid2d)


@pytest.fixture(scope="module")
def sweep(params_25, grid2d_fine, q_25, lambda0_iso_rot):
    from rotnls.spectrum import lowest_eigenpair
    eig = lowest_eigenpair(grid2d_fine, params_25, tol=1e-10).eigenfield
    out = []
    for q in (0.2, 0.1, 0.05):
        spec = LocalMinimizationSpec.create(q, 4.0, params_25, q_25.c_gn)
        out.append(minimize_local(spec, params_25, grid2d_fine, tol=1e-10,
                                  lambda0=lambda0_iso_rot, seed_field=eig))
    return out


class TestMinimizeLocal:
    def test_multiplier_bounds(self, sweep, lambda0_iso_rot):
        for gs in sweep:
            assert gs.omega > lambda0_iso_rot

    def test_multiplier_monotone(self, sweep, lambda0_iso_rot):
        gaps = [gs.omega - lambda0_iso_rot for gs in sweep]
        assert gaps[0] > gaps[1] > gaps[2] > 0

    def test_energy_bound(self, sweep, lambda0_iso_rot):
        for gs, q in zip(sweep, (0.2, 0.1, 0.05)):
            assert gs.energy < -0.5 * lambda0_iso_rot * q + 1e-10

    def test_interior_form_ball(self, sweep, params_25):
        for gs, q in zip(sweep, (0.2, 0.1, 0.05)):
            assert evaluate(gs.field, params_25).quad_form <= 4.0 * q + 1e-12

    def test_small_q_eigenfield_overlap(self, sweep, params_25, grid2d_fine):
        from rotnls.spectrum import lowest_eigenpair
        eig = lowest_eigenpair(grid2d_fine, params_25, tol=1e-10).eigenfield
        gs = sweep[-1]
        ov = abs(np.vdot(gs.field.values, eig.values)) * grid2d_fine.cell_volume
        assert ov / np.sqrt(gs.mass) > 0.99

    def test_empty_constraint_rejected(self, params_25, grid2d, q_25):
        spec = LocalMinimizationSpec.create(2.4, 4.0, params_25, q_25.c_gn)
        with pytest.raises(RegimeError):
            minimize_local(spec, params_25, grid2d, lambda0=-2.0)


@pytest.fixture(scope="module")
def gap_spec(params_25, q_25):
    return LocalMinimizationSpec.create(0.1, 4.0, params_25, q_25.c_gn)


class TestWellposednessGap:
    def test_regime_constants(self, gap_spec):
        assert gap_spec.chi == pytest.approx(1.0)   # (p+1)/2 - N(p-1)/4 at (2,5)
        assert gap_spec.delta == pytest.approx(1.0)  # (N(p-1)-4)/4 at (2,5)
        assert gap_spec.q0_estimate > 0

    def test_gap_positive_below_q0(self, gap_spec, params_25):
        rep = wellposedness_gap(gap_spec, params_25, gap_spec.q0_estimate / 2)
        assert isinstance(rep, GapReport)
        assert rep.gap > 0
        assert rep.phi_at_qr2 == pytest.approx(gap_spec.q0_estimate / 2 * gap_spec.r / 4)

    def test_normalized_gap_monotone_and_bounded(self, gap_spec, params_25):
        r = gap_spec.r
        qs = [gap_spec.q0_estimate / f for f in (2, 4, 8, 16, 64)]
        normalized = [wellposedness_gap(gap_spec, params_25, q).gap / (q * r) for q in qs]
        assert all(b > a for a, b in zip(normalized, normalized[1:]))
        for q, val in zip(qs, normalized):
            assert val >= 1.0 / 12.0  # guaranteed by the t/3 envelope bound
        assert normalized[-1] == pytest.approx(0.25, abs=1e-3)

    def test_raw_gap_vanishes_with_q(self, gap_spec, params_25):
        small = wellposedness_gap(gap_spec, params_25, 1e-6).gap
        assert 0 < small < 1e-5


@pytest.fixture(scope="module")
def state_12(params_25):
    gr = make_grid(2, [6, 6], [256, 256])
    return minimize_nehari(1.2, params_25, gr, tol=1e-10), gr


class TestRescale:
    def test_identity_at_unit_frequency(self, params_25):
        gr = make_grid(2, [6, 6], [128, 128])
        gs = minimize_nehari(1.0, params_25, gr, tol=1e-9)
        rs = rescale_to_unit_frequency(gs, params_25)
        assert np.abs(rs.field.values - gs.field.values).max() < 1e-9
        assert rs.ratio_original == pytest.approx(rs.ratio_rescaled, rel=1e-12)

    def test_contract_checks(self, state_12, params_25):
        gs, _ = state_12
        rs = rescale_to_unit_frequency(gs, params_25)
        assert rs.mass_scaling_error < 1e-6
        assert rs.ratio_original == pytest.approx(rs.ratio_rescaled, rel=1e-6)
        assert rs.nie_residual < 1e-5
        assert rs.rescaled_pohozaev_residual < 1e-5

    def test_ang_mom_scaling(self, state_12, params_25):
        gs, _ = state_12
        rs = rescale_to_unit_frequency(gs, params_25)
        w, p, N = gs.omega, params_25.p, params_25.dim
        lhs = evaluate(gs.field, params_25).ang_mom
        rhs = w ** (2.0 / (p - 1.0) - N / 2.0) * rs.report.ang_mom
        scale = max(abs(lhs), evaluate(gs.field, params_25).mass)
        assert abs(lhs - rhs) < 1e-8 * scale

    def test_nonpositive_frequency_rejected(self, nehari_state_25, params_25):
        with pytest.raises(RegimeError):
            rescale_to_unit_frequency(nehari_state_25, params_25)

    def test_b_omega_diagnostic_finite(self, state_12, params_25):
        gs, _ = state_12
        rs = rescale_to_unit_frequency(gs, params_25)
        b = b_omega_diagnostic(rs, params_25)
        assert np.isfinite(b) and b > 0


class TestCertify:
    def test_positive_frequency_state(self, params_25):
        gr = make_grid(2, [6, 6], [256, 256])
        gs = minimize_nehari(1.2, params_25, gr, tol=1e-10)
        rep = certify(gs, params_25)
        assert rep.pohozaev_residual < 1e-5
        assert rep.rescaled_pohozaev_residual < 1e-5
        assert rep.sni_slack >= -1e-8
        assert rep.ew2_slack >= -1e-8
        assert rep.passed
        assert gs.certification is rep

    def test_zero_rotation_sni_trivial(self):
        pp = PhysicsParams(dim=2, p=5.0, gammas=(1, 1), omega_rot=0.0)
        gr = make_grid(2, [6, 6], [128, 128])
        gs = minimize_nehari(1.2, pp, gr, tol=1e-9)
        rep = certify(gs, pp)
        # RHS vanishes with the rotation, LHS = -w^{-2} int V |pt|^2 <= 0.
        assert rep.sni_slack >= 0

    def test_negative_frequency_partial_report(self, nehari_state_25, params_25):
        rep = certify(nehari_state_25, params_25)
        assert not rep.rescaled_applicable
        assert rep.pohozaev_residual < 1e-5

    def test_pohozaev_quadrature_refines_quadratically(self, params_iso):
        # Quadrature route check: P of an analytic Gaussian against its
        # closed form converges at least quadratically under n-doubling.
        from rotnls.functionals import pohozaev
        errs = []
        for n in (16, 32):
            gr = make_grid(2, [8, 8], [n, n])
            f = states.normalized_gaussian(gr)
            rep = evaluate(f, params_iso)
            # exact: P(g) = -1/(4 pi) at p = 3 (kinetic and potential cancel)
            errs.append(abs(pohozaev(rep, params_iso) + 1.0 / (4 * np.pi)))
        assert errs[1] < errs[0] / 4.0


class TestInstabilityIndicator:
    def test_formula_vs_finite_difference(self, params_25):
        gr = make_grid(2, [6, 6], [256, 256])
        gs = minimize_nehari(1.5, params_25, gr, tol=1e-10)
        ind = instability_indicator(gs, params_25)
        fd = indicator_fd_crosscheck(gs, params_25)
        assert ind == pytest.approx(fd, rel=1e-4)

    def test_threshold_arithmetic(self, nehari_state_25, params_25):
        # Negativity is equivalent to pot/lp1 < N(p-1)(N(p-1)-4)/(8(p+1)).
        rep = evaluate(nehari_state_25.field, params_25)
        ind = instability_indicator(nehari_state_25, params_25)
        thresh = params_25.dim * (params_25.p - 1) * (
            params_25.dim * (params_25.p - 1) - 4) / (8 * (params_25.p + 1))
        assert (ind < 0) == (rep.potential / rep.lp1 < thresh)

    def test_large_frequency_negative(self, params_25):
        gr = make_grid(2, [5, 5], [256, 256])
        gs = minimize_nehari(4.0, params_25, gr, tol=1e-9)
        assert instability_indicator(gs, params_25) < 0

    def test_small_mass_positive(self, params_25, grid2d_fine, q_25, lambda0_iso_rot):
        spec = LocalMinimizationSpec.create(0.1, 4.0, params_25, q_25.c_gn)
        gs = minimize_local(spec, params_25, grid2d_fine, tol=1e-9,
                            lambda0=lambda0_iso_rot)
        assert instability_indicator(gs, params_25) > 0

    def test_subcritical_rejected(self, params_iso, grid2d):
        gs = minimize_nehari(1.0, params_iso, grid2d, tol=1e-8)
        with pytest.raises(RegimeError):
            instability_indicator(gs, params_iso)
