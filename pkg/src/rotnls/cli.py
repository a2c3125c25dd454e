"""Command line surface: scenario orchestration and artifact persistence.

    rotnls <scenario> --config FILE --out DIR [--seed N] [--threads N]
                      [--validate-only]

Scenarios: q-reference, spectrum, groundstate, evolve, classify, stability,
sweep, ls1-trend.  Exit codes: 0 ok, 2 config error, 3 solver failure,
4 blow-up terminated (evolve/classify, informational).

Artifacts are byte-reproducible for identical configs (the manifest carries
the only timestamps).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, grid as g, io, states
from .config import load_config, validate
from .dynamics import BlowupMonitor, SimState, Termination, evolve
from .errors import (AliasingError, ConfigError, ConvergenceError,
                     CorruptFieldError, RegimeError)
from .functionals import PhysicsParams
from .qprofile import cached_profile
from .spectrum import lowest_eigenpair

log = logging.getLogger("rotnls")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4


def _build_grid(cfg):
    dim = cfg.get("grid", "dim", 2, int)
    points = cfg.get_ints("grid", "points", (128,) * dim)
    half_widths = cfg.get_floats("grid", "half_widths", (8.0,) * dim)
    return g.make_grid(dim, half_widths, points)


def _build_params(cfg):
    dim = cfg.get("grid", "dim", 2, int)
    return PhysicsParams(
        dim=dim,
        p=cfg.get("physics", "p", None, float),
        gammas=cfg.get_floats("physics", "gammas", (1.0,) * dim),
        omega_rot=cfg.get("physics", "omega", 0.0, float),
        lomega_sign=cfg.get("physics", "lomega_sign", -1, int),
    )


def _initial_field(cfg, gr, params, rng):
    kind = cfg.get("initial", "kind", "gaussian")
    if kind == "gaussian":
        center = cfg.get_floats("initial", "center", (0.0,) * gr.dim)
        f = states.gaussian(gr, amplitude=cfg.get("initial", "amplitude", 1.0, float),
                            width=cfg.get("initial", "width", 1.0, float),
                            center=center,
                            phase_winding=cfg.get("initial", "winding", 0, int))
    elif kind == "vortex":
        f = states.vortex(gr, charge=cfg.get("initial", "winding", 1, int))
        amp = cfg.get("initial", "amplitude", 1.0, float)
        f.values *= amp
    elif kind == "random":
        f = states.random_smooth(gr, rng, scale=cfg.get("initial", "amplitude", 1.0, float),
                                 vortex_mix=cfg.get("initial", "vortex_mix", 0.0, float))
    elif kind == "qprofile":
        prof, _ = cached_profile(gr.dim, params.p, cfg.get("classify", "qref_tol", 1e-10, float))
        f = prof.sample_on_grid(gr, amplitude=cfg.get("initial", "amplitude", 1.0, float))
    else:
        raise ConfigError(f"[initial].kind: unknown kind {kind!r}")
    mass = cfg.get("initial", "mass", None, float)
    if mass is not None:
        f = states.scaled_state(f, mass)
    return f


def _monitor(cfg):
    return BlowupMonitor(
        baseline_grad=0.0,
        grad_factor=cfg.get("evolve", "grad_factor", 50.0, float),
        tail_fraction=cfg.get("evolve", "tail_fraction", 0.01, float))


def _run_qreference(cfg, out, args):
    n = cfg.get("qref", "n", cfg.get("grid", "dim", 2, int), int)
    if args.n is not None:
        n = args.n
    p = cfg.get("qref", "p", None, float)
    if args.p is not None:
        p = args.p
    if p is None:
        raise ConfigError("qref.p missing (or pass --p)")
    tol = cfg.get("qref", "tol", 1e-10, float)
    cache = Path(args.cache_dir) if args.cache_dir else out / "qcache"
    prof, hit = cached_profile(n, p, tol, cache_dir=cache)
    log.info("reference profile N=%d p=%g: %s", n, p,
             "cache hit" if hit else "solved and cached")
    io.write_json(out / "qprofile.json", prof.to_dict())
    return EXIT_OK


def _run_spectrum(cfg, out, args):
    gr = _build_grid(cfg)
    params = _build_params(cfg)
    res = lowest_eigenpair(gr, params, tol=cfg.get("solver", "tol", 1e-9, float))
    io.write_json(out / "eigen.json", res.to_dict())
    io.save_snapshot(out / "eigenfield.rnls1", res.eigenfield, params, 0.0)
    return EXIT_OK


def _run_groundstate(cfg, out, args):
    from .groundstate import (LocalMinimizationSpec, certify, minimize_local,
                              minimize_nehari)

    gr = _build_grid(cfg)
    params = _build_params(cfg)
    tol = cfg.get("solver", "tol", 1e-8, float)
    method = cfg.get("groundstate", "method", "nehari")
    if method == "nehari":
        gs = minimize_nehari(cfg.get("groundstate", "omega", None, float), params, gr,
                             tol=tol, max_iter=cfg.get("solver", "max_iter", 40000, int))
    else:
        prof, _ = cached_profile(gr.dim, params.p,
                                 cfg.get("classify", "qref_tol", 1e-10, float),
                                 cache_dir=out / "qcache")
        spec = LocalMinimizationSpec.create(cfg.get("groundstate", "q", None, float),
                                            cfg.get("groundstate", "r", None, float),
                                            params, prof.c_gn)
        gs = minimize_local(spec, params, gr, tol=tol)
    certify(gs, params)
    io.save_ground_state(out / "ground_state", gs, params)
    return EXIT_OK


def _run_evolve(cfg, out, args, classify_after=False):
    from . import classify as cls

    gr = _build_grid(cfg)
    params = _build_params(cfg)
    rng = np.random.default_rng(args.seed)
    u0 = _initial_field(cfg, gr, params, rng)
    state = SimState(field=u0, t=0.0, params=params)

    result = {}
    code = EXIT_OK
    if classify_after:
        prof, _ = cached_profile(gr.dim, params.p,
                                 cfg.get("classify", "qref_tol", 1e-10, float),
                                 cache_dir=out / "qcache")
        mode = cfg.get("classify", "l_mode", "auto")
        l, mode = cls.estimate_l(params, u0=u0, mode=mode)
        report = cls.classify(u0, params, prof, l, mode)
        io.write_json(out / "classification.json", report.to_dict())
        result["verdict"] = report.verdict.value

    horizon = cfg.get("evolve", "horizon", 10.0, float)
    traj = evolve(state, horizon,
                  cfg.get("evolve", "dt", 1e-3, float),
                  sample_every=cfg.get("evolve", "sample_every", 20, int),
                  monitor=_monitor(cfg),
                  nonlinearity=cfg.get("evolve", "nonlinearity", True, bool),
                  snapshot_every=cfg.get("evolve", "snapshot_every", 0, int),
                  dt_shrink=cfg.get("evolve", "dt_shrink", False, bool),
                  dt_shrink_trigger=cfg.get("evolve", "dt_shrink_trigger", 5.0, float),
                  dt_shrink_factor=cfg.get("evolve", "dt_shrink_factor", 0.5, float))
    io.trajectory_to_csv(out / "trajectory.csv", traj)
    md = io.trajectory_metadata(traj)
    md.update(result)
    io.write_json(out / "evolution.json", md)
    io.save_snapshot(out / "final.rnls1", traj.final_state.field, params,
                     traj.final_state.t)
    for i, snap in enumerate(traj.snapshots):
        io.save_snapshot(out / f"snapshot_{i:04d}.rnls1", snap.field, params, snap.t)
    if traj.termination is Termination.BLOWUP_DETECTED:
        code = EXIT_BLOWUP
    return code


def _run_stability(cfg, out, args):
    from .classify import stability_experiment
    from .groundstate import (LocalMinimizationSpec, minimize_local,
                              minimize_nehari)

    gr = _build_grid(cfg)
    params = _build_params(cfg)
    tol = cfg.get("solver", "tol", 1e-8, float)
    method = cfg.get("groundstate", "method", "nehari")
    if method == "nehari":
        gs = minimize_nehari(cfg.get("groundstate", "omega", None, float),
                             params, gr, tol=tol)
    else:
        prof, _ = cached_profile(gr.dim, params.p, 1e-10, cache_dir=out / "qcache")
        spec = LocalMinimizationSpec.create(cfg.get("groundstate", "q", None, float),
                                            cfg.get("groundstate", "r", None, float),
                                            params, prof.c_gn)
        gs = minimize_local(spec, params, gr, tol=tol)
    report = stability_experiment(
        gs, cfg.get_floats("stability", "deltas", (1e-2, 1e-3)),
        cfg.get("stability", "horizon", 5.0, float), params,
        dt=cfg.get("stability", "dt", 2e-3, float),
        perturbation=cfg.get("stability", "perturbation", "random"),
        seed=args.seed)
    io.write_json(out / "stability.json", report.to_dict())
    return EXIT_OK


def _run_sweep(cfg, out, args):
    from .groundstate import LocalMinimizationSpec, certify, minimize_local

    gr = _build_grid(cfg)
    params = _build_params(cfg)
    r = cfg.get("sweep", "r", None, float)
    qs = cfg.get_floats("sweep", "q_values")
    prof, _ = cached_profile(gr.dim, params.p, 1e-10, cache_dir=out / "qcache")
    lam0 = lowest_eigenpair(gr, params, tol=1e-10).lambda0
    rows = []
    for i, q in enumerate(qs):
        spec = LocalMinimizationSpec.create(q, r, params, prof.c_gn)
        gs = minimize_local(spec, params, gr, tol=cfg.get("solver", "tol", 1e-9, float),
                            lambda0=lam0)
        certify(gs, params)
        io.save_ground_state(out / f"ground_state_q{i}", gs, params)
        rows.append([q, gs.omega, gs.omega - lam0, gs.energy, -0.5 * lam0 * q,
                     gs.residual])
    io.write_csv(out / "sweep.csv",
                 ("q", "omega", "omega_minus_lambda0", "energy",
                  "energy_bound", "residual"), rows)
    return EXIT_OK


def _run_ls1(cfg, out, args):
    from .groundstate import minimize_nehari, rescale_to_unit_frequency

    gr = _build_grid(cfg)
    params = _build_params(cfg)
    omegas = cfg.get_floats("ls1", "omegas")
    rows = []
    for om in omegas:
        gs = minimize_nehari(om, params, gr, tol=cfg.get("solver", "tol", 1e-9, float))
        rs = rescale_to_unit_frequency(gs, params)
        rows.append([om, rs.trend_quantity, rs.report.potential / om ** 2,
                     rs.report.ang_mom / om, rs.report.lp1])
    io.write_csv(out / "ls1_trend.csv",
                 ("omega", "trend_quantity", "pot_rescaled", "ang_mom_rescaled",
                  "lp1_rescaled"), rows)
    return EXIT_OK


_RUNNERS = {
    "q-reference": _run_qreference,
    "spectrum": _run_spectrum,
    "groundstate": _run_groundstate,
    "evolve": lambda cfg, out, args: _run_evolve(cfg, out, args, classify_after=False),
    "classify": lambda cfg, out, args: _run_evolve(cfg, out, args, classify_after=True),
    "stability": _run_stability,
    "sweep": _run_sweep,
    "ls1-trend": _run_ls1,
}


def run(cfg, out_dir, args) -> int:
    """Execute one scenario; writes artifacts plus a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = cfg.get("run", "scenario")
    t0 = time.time()
    code = _RUNNERS[scenario](cfg, out, args)
    manifest = {
        "scenario": scenario,
        "config": cfg.to_dict(),
        "seed": args.seed,
        "threads": args.threads,
        "version": __version__,
        "wall_time_s": time.time() - t0,
        "exit_code": code,
        "box_note": ("box half-widths follow the 1.5x classical turning radius "
                     "heuristic; whole-space truncation error is an artifact "
                     "decision, not a statement from the analysis"),
    }
    io.write_json(out / "manifest.json", manifest)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rotnls", description=__doc__)
    parser.add_argument("scenario", choices=sorted(_RUNNERS) + ["validate"])
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default="out")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--validate-only", action="store_true")
    parser.add_argument("--n", type=int, default=None, help="q-reference dimension override")
    parser.add_argument("--p", type=float, default=None, help="q-reference exponent override")
    parser.add_argument("--cache-dir", default=None)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    g.set_fft_workers(args.threads)

    try:
        if args.config is not None:
            cfg = load_config(args.config)
        elif args.scenario == "q-reference" and args.p is not None:
            from .config import config_from_string
            cfg = config_from_string(
                f"[run]\nscenario = q-reference\n[qref]\nn = {args.n or 2}\np = {args.p}\n")
        else:
            raise ConfigError("--config is required for this scenario")
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    if args.seed is None:
        args.seed = cfg.get("run", "seed", 1234, int)

    violations = validate(cfg)
    errors = [v for v in violations if v.severity == "error"]
    if args.validate_only or args.scenario == "validate":
        for v in violations:
            print(v)
        print(f"{len(violations)} violation(s), {len(errors)} blocking")
        return EXIT_OK if not errors else EXIT_CONFIG
    for v in violations:
        if v.severity == "warning":
            log.warning("config: %s", v)
    if errors:
        for v in errors:
            log.error("config: %s", v)
        return EXIT_CONFIG
    if args.scenario != cfg.get("run", "scenario"):
        log.error("config scenario %r does not match CLI scenario %r",
                  cfg.get("run", "scenario"), args.scenario)
        return EXIT_CONFIG

    try:
        return run(cfg, args.out, args)
    except (ConfigError, RegimeError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (ConvergenceError, AliasingError, CorruptFieldError) as exc:
        log.error("solver failure: %s", exc)
        state = getattr(exc, "state", None)
        if state is not None:
            path = Path(args.out) / "diagnostic_abort.rnls1"
            io.save_snapshot(path, state.field, state.params, state.t)
            log.error("diagnostic snapshot written to %s", path)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
