"""Acceptance suite: one test per criterion, each printing a PASS line.

Grids, step sizes and data are pinned here; tolerances are the contract.
Criteria 1-11 cover the numerical core; the plotting component has its own
suite under frontend/ and is deliberately not imported here.
"""

import numpy as np
import pytest

from rotnls import states
from rotnls.classify import (Verdict, check_gradient_lowerbound, classify,
                             diagnostics, estimate_l, stability_experiment)
from rotnls.dynamics import BlowupMonitor, SimState, Termination, evolve
from rotnls.functionals import PhysicsParams, evaluate, gn_ratio
from rotnls.grid import make_grid
from rotnls.groundstate import (LocalMinimizationSpec, certify,
                                indicator_fd_crosscheck, instability_indicator,
                                minimize_local, minimize_nehari,
                                rescale_to_unit_frequency)
from rotnls.qprofile import pohozaev_residuals
from rotnls.spectrum import lowest_eigenpair


def report(criterion: str, detail: str):
    print(f"ACCEPTANCE {criterion}: PASS  [{detail}]")


@pytest.fixture(scope="module")
def accept_grid():
    return make_grid(2, [6, 6], [256, 256])


@pytest.fixture(scope="module")
def smooth_128(grid2d_fine):
    return states.random_smooth(grid2d_fine, np.random.default_rng(11),
                                scale=1.0, vortex_mix=0.3)


def test_criterion_1_conservation(grid2d_fine, smooth_128):
    pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 1), omega_rot=0.3)
    st = SimState(field=smooth_128.copy(), t=0.0, params=pp)
    traj = evolve(st, 10.0, 1e-3, sample_every=250)
    assert traj.steps == 10000
    assert traj.mass_drift_rel < 1e-10
    assert traj.energy_drift_rel < 1e-6
    report("1 conservation",
           f"mass drift {traj.mass_drift_rel:.2e}, energy drift "
           f"{traj.energy_drift_rel:.2e} over 1e4 steps at 128^2")


def test_criterion_2_angular_momentum(grid2d_fine):
    # isotropic: conserved along the flow
    pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 1), omega_rot=0.3)
    traj = evolve(SimState(field=states.vortex(grid2d_fine), t=0.0, params=pp),
                  5.0, 5e-4, sample_every=250)
    l0 = traj.rows[0].ang_mom
    iso_drift = max(abs(r.ang_mom - l0) for r in traj.rows) / abs(l0)
    assert iso_drift < 1e-6
    # anisotropic: matches the quadrature of the flux density
    pp2 = PhysicsParams(dim=2, p=3.0, gammas=(1, 2), omega_rot=0.3)
    f = states.random_smooth(grid2d_fine, np.random.default_rng(3), scale=0.8,
                             vortex_mix=0.4)
    traj2 = evolve(SimState(field=f, t=0.0, params=pp2), 2.0, 5e-4,
                   sample_every=40)
    l0 = traj2.rows[0].ang_mom
    drift = [row.ang_mom - l0 for row in traj2.rows]
    scale = max(abs(d) for d in drift)
    worst = max(abs(d - a) for d, a in zip(drift, traj2.amf_integral))
    assert worst < 1e-4 * scale
    report("2 angular momentum",
           f"isotropic drift {iso_drift:.2e}; anisotropic quadrature mismatch "
           f"{worst / scale:.2e} relative")


def test_criterion_3_virial(grid2d_fine, nehari_state_25, params_25):
    pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 1), omega_rot=0.2)
    f = states.gaussian(grid2d_fine, amplitude=0.8, width=1.1, center=(0.5, 0))
    dt = 5e-4
    traj = evolve(SimState(field=f, t=0.0, params=pp), 200 * dt, dt,
                  sample_every=20)
    h = traj.times[1] - traj.times[0]
    rows = traj.rows
    scale = max(abs(r.Jpp_vfm) for r in rows)
    worst = max(abs((rows[i + 1].J - 2 * rows[i].J + rows[i - 1].J) / h ** 2
                    - rows[i].Jpp_vfm)
                for i in range(1, len(rows) - 1))
    assert worst < 1e-3 * scale
    row = diagnostics(SimState(field=nehari_state_25.field, t=0.0,
                               params=params_25))
    assert abs(row.Jpp_vfm) < 1e-5
    report("3 virial",
           f"FD mismatch {worst / scale:.2e} relative; standing wave "
           f"|J''| = {abs(row.Jpp_vfm):.2e}")


def test_criterion_4_q_certification(q_25, q_33, params_25, rng):
    for q in (q_25, q_33):
        r1, r2 = pohozaev_residuals(q)
        assert r1 < 1e-6 and r2 < 1e-6
    gr = make_grid(2, [10, 10], [256, 256])
    ratio = gn_ratio(q_25.sample_on_grid(gr), params_25)
    assert ratio / q_25.c_gn == pytest.approx(1.0, abs=1e-6)
    small = make_grid(2, [8, 8], [64, 64])
    worst = 0.0
    for _ in range(100):
        f = states.random_smooth(small, rng, vortex_mix=rng.uniform(0, 0.8))
        worst = max(worst, gn_ratio(f, params_25) / q_25.c_gn)
        assert worst <= 1.0 + 1e-8
    report("4 Q certification",
           f"Pohozaev residuals < 1e-6; sharpness ratio-1 = "
           f"{ratio / q_25.c_gn - 1:.2e}; max random-field ratio {worst:.4f}")


def test_criterion_5_lambda0(grid2d_fine):
    vals = []
    for om in (0.0, 0.3, 0.6):
        pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 1), omega_rot=om)
        lam = lowest_eigenpair(grid2d_fine, pp, tol=1e-9).lambda0
        assert lam == pytest.approx(-2.0, abs=1e-6)
        vals.append(lam)
    pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 2), omega_rot=0.0)
    lam_a = lowest_eigenpair(grid2d_fine, pp, tol=1e-9).lambda0
    assert lam_a == pytest.approx(-3.0, abs=1e-6)
    gr3 = make_grid(3, [8, 8, 8], [64, 64, 64])
    pp3 = PhysicsParams(dim=3, p=3.0, gammas=(1, 1, 1), omega_rot=0.0)
    lam_3 = lowest_eigenpair(gr3, pp3, tol=1e-9).lambda0
    assert lam_3 == pytest.approx(-3.0, abs=1e-6)
    report("5 lambda0 oracle",
           f"2D iso {vals}, aniso {lam_a:.8f}, 3D {lam_3:.8f}")


def test_criterion_6_ground_states(nehari_state_25, params_25, grid2d_fine,
                                   q_25, lambda0_iso_rot):
    gs = nehari_state_25
    rep = evaluate(gs.field, params_25)
    assert gs.residual < 1e-6 * np.sqrt(rep.sigma_norm2)
    assert gs.nehari_residual < 1e-10 * (rep.quad_form + abs(gs.omega) * rep.mass)
    assert gs.d_omega > 0
    eig = lowest_eigenpair(grid2d_fine, params_25, tol=1e-10).eigenfield
    gaps = []
    for q in (0.2, 0.1, 0.05):
        spec = LocalMinimizationSpec.create(q, 4.0, params_25, q_25.c_gn)
        loc = minimize_local(spec, params_25, grid2d_fine, tol=1e-10,
                             lambda0=lambda0_iso_rot, seed_field=eig)
        assert loc.omega > lambda0_iso_rot
        assert loc.energy < -0.5 * lambda0_iso_rot * q
        gaps.append(loc.omega - lambda0_iso_rot)
    assert gaps[0] > gaps[1] > gaps[2] > 0
    report("6 ground states",
           f"nehari residual {gs.residual:.2e}, d(omega) = {gs.d_omega:.6f} > 0; "
           f"local multiplier gaps {[f'{g:.2e}' for g in gaps]} monotone")


def test_criterion_7_rescaling_certification(params_25):
    gr = make_grid(2, [6, 6], [256, 256])
    gs = minimize_nehari(1.2, params_25, gr, tol=1e-10)
    rs = rescale_to_unit_frequency(gs, params_25)
    cert = certify(gs, params_25)
    assert rs.rescaled_pohozaev_residual < 1e-5
    assert cert.sni_slack >= -1e-8
    assert cert.ew2_slack >= -1e-8
    report("7 rescaling",
           f"rescaled Pohozaev residual {rs.rescaled_pohozaev_residual:.2e}; "
           f"SnI slack {cert.sni_slack:.3e}, Ew2 slack {cert.ew2_slack:.3e}")


def test_criterion_8_classification_end_to_end(accept_grid, params_25, q_25):
    gr = accept_grid

    def run(u0, horizon, dt, sample_every=25):
        mon = BlowupMonitor(baseline_grad=0.0, grad_factor=3.0,
                            tail_fraction=0.01)
        return evolve(SimState(field=u0, t=0.0, params=params_25), horizon, dt,
                      sample_every=sample_every, monitor=mon)

    # (a) global datum runs to the horizon with the gradient product under
    #     the threshold at every sample
    u_plus = states.gaussian(gr, amplitude=0.25, width=1.0)
    l, mode = estimate_l(params_25, u0=u_plus)
    rep_plus = classify(u_plus, params_25, q_25, l, mode)
    assert rep_plus.verdict is Verdict.K_PLUS
    traj_a = run(u_plus, 20.0, 2e-3)
    assert traj_a.termination is Termination.HORIZON_REACHED
    sc = params_25.s_c
    for row in traj_a.rows:
        gp = row.kinetic ** (sc / 2.0) * row.mass ** ((1 - sc) / 2.0)
        assert gp < rep_plus.grad_threshold
    # (b) blow-up datum
    u_minus = states.gaussian(gr, amplitude=1.9, width=0.6)
    l, mode = estimate_l(params_25, u0=u_minus)
    rep_minus = classify(u_minus, params_25, q_25, l, mode)
    assert rep_minus.verdict is Verdict.K_MINUS
    traj_b = run(u_minus, 5.0, 1e-3, sample_every=5)
    assert traj_b.termination is Termination.BLOWUP_DETECTED
    # (c) negative-energy datum with the sqrt(2)-prefactor lower bound
    u_neg = states.gaussian(gr, amplitude=2.2, width=0.6)
    l, mode = estimate_l(params_25, u0=u_neg)
    rep_neg = classify(u_neg, params_25, q_25, l, mode)
    assert rep_neg.verdict is Verdict.NEGATIVE_ENERGY_BLOWUP
    m = evaluate(u_neg, params_25).mass
    assert rep_neg.lower_bound_constant == pytest.approx(
        np.sqrt(2.0) * (q_25.l2_norm / np.sqrt(m)) * q_25.grad_norm, rel=1e-12)
    traj_c = run(u_neg, 5.0, 1e-3, sample_every=5)
    assert traj_c.termination is Termination.BLOWUP_DETECTED
    checks = check_gradient_lowerbound(traj_c, rep_neg)
    assert all(ok for _, ok in checks)
    report("8 classification",
           f"K+ horizon reached (worst margin ok); K- blow-up at t = "
           f"{traj_b.times[-1]:.3f}; negative-energy blow-up at t = "
           f"{traj_c.times[-1]:.3f} with bound holding at all "
           f"{len(checks)} samples")


def test_criterion_9_stability_instability(params_25, grid2d_fine, q_25,
                                           lambda0_iso_rot):
    # stable direction: local minimizer, linear response across one decade
    spec = LocalMinimizationSpec.create(0.1, 4.0, params_25, q_25.c_gn)
    loc = minimize_local(spec, params_25, grid2d_fine, tol=1e-10,
                         lambda0=lambda0_iso_rot)
    rep = stability_experiment(loc, [1e-2, 1e-3], horizon=3.0,
                               params=params_25, dt=2e-3)
    r1, r2 = rep.probes
    assert not r1.blowup and not r2.blowup
    ratio = r1.distance_over_delta / r2.distance_over_delta
    assert 0.2 < ratio < 5.0
    # unstable direction: large-frequency state, scaling perturbation
    gr = make_grid(2, [5, 5], [256, 256])
    gs = minimize_nehari(4.0, params_25, gr, tol=1e-9)
    ind = instability_indicator(gs, params_25)
    fd = indicator_fd_crosscheck(gs, params_25)
    assert ind < 0
    assert ind == pytest.approx(fd, rel=1e-4)
    urep = stability_experiment(gs, [1e-2, 3e-3], horizon=4.0, params=params_25,
                                dt=1e-3, perturbation="scaling")
    for probe in urep.probes:
        assert probe.sup_distance > 10 * probe.delta
    report("9 stability",
           f"stable ratio across decade {ratio:.2f}; indicator {ind:.3f} "
           f"(FD mismatch {abs(ind - fd) / abs(fd):.1e}); unstable growth "
           f"{[p.sup_distance for p in urep.probes]}")


def test_criterion_10_ls1_trend(q_25):
    pp = PhysicsParams(dim=2, p=5.0, gammas=(1, 1), omega_rot=0.05)
    target = make_grid(2, [10, 10], [256, 256])
    cfgs = {2.0: 6.0, 4.0: 5.0, 8.0: 4.0, 16.0: 3.0}
    trend = []
    for om, L in cfgs.items():
        gr = make_grid(2, [L, L], [256, 256])
        gs = minimize_nehari(om, pp, gr, tol=1e-10)
        rs = rescale_to_unit_frequency(gs, pp, target_grid=target)
        trend.append(rs.trend_quantity)
    eta = 0.1 * q_25.lp1
    assert all(a > b for a, b in zip(trend, trend[1:]))
    assert trend[-1] < eta
    report("10 Ls1 trend",
           f"trend {[f'{v:.4f}' for v in trend]} strictly decreasing, final "
           f"< eta = {eta:.4f}")


def test_criterion_11_splitting_order(grid2d_fine):
    pp = PhysicsParams(dim=2, p=3.0, gammas=(1, 1), omega_rot=0.3)
    f = states.random_smooth(grid2d_fine, np.random.default_rng(7), scale=1.0,
                             vortex_mix=0.3)
    dv = grid2d_fine.cell_volume

    def terminal(dt, T=0.5):
        st = SimState(field=f.copy(), t=0.0, params=pp)
        return evolve(st, T, dt, sample_every=10 ** 9).final_state.field.values

    ref = terminal(0.5 / 1024)
    errs = [np.sqrt((np.abs(terminal(0.5 / n) - ref) ** 2).sum() * dv)
            for n in (32, 64, 128)]
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]
    for o in orders:
        assert 1.8 <= o <= 2.2
    report("11 splitting order", f"observed orders {[f'{o:.3f}' for o in orders]}")
