"""Experiment configuration: an INI file with sections, plus validation.

Sections and keys (defaults in parentheses):

    [run]       scenario (required), seed (1234), threads (1)
    [grid]      dim (2), half_widths (8,8), points (128,128)
    [physics]   p (required), gammas (1,1), omega (0), lomega_sign (-1)
    [solver]    tol (1e-8), max_iter (40000)
    [evolve]    dt (1e-3), horizon (10), sample_every (20), snapshot_every (0),
                nonlinearity (true), grad_factor (50), tail_fraction (0.01)
    [initial]   kind (gaussian|vortex|qprofile|random), amplitude, width,
                center, winding, mass, seed_scale
    [qref]      n, p, tol (1e-10)
    [groundstate] method (nehari|local), omega, q, r
    [sweep]     q_values, r
    [stability] deltas, perturbation (random|scaling), horizon (5), dt (2e-3)
    [ls1]       omegas, eta_factor (0.1)
    [classify]  l_mode (auto), qref_tol (1e-10)
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .errors import ConfigError

SCENARIOS = ("q-reference", "spectrum", "groundstate", "evolve", "classify",
             "stability", "sweep", "ls1-trend")

# Scenarios that solve a variational problem and therefore demand |Omega| < gamma.
VARIATIONAL_SCENARIOS = ("spectrum", "groundstate", "stability", "sweep", "ls1-trend")


@dataclass
class Violation:
    keypath: str
    message: str
    severity: str = "error"       # "error" blocks execution, "warning" does not

    def __str__(self):
        return f"[{self.severity}] {self.keypath}: {self.message}"


@dataclass
class ExperimentConfig:
    raw: configparser.ConfigParser
    path: str = "<memory>"

    def section(self, name: str) -> dict:
        return dict(self.raw[name]) if self.raw.has_section(name) else {}

    def get(self, section: str, key: str, default=None, cast=str):
        if self.raw.has_section(section) and key in self.raw[section]:
            value = self.raw[section][key]
            try:
                if cast is bool:
                    return value.strip().lower() in ("1", "true", "yes", "on")
                return cast(value)
            except ValueError as exc:
                raise ConfigError(f"[{section}].{key}: cannot parse {value!r}") from exc
        return default

    def get_floats(self, section: str, key: str, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return tuple(float(x) for x in str(raw).replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"[{section}].{key}: cannot parse float list {raw!r}") from exc

    def get_ints(self, section: str, key: str, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return tuple(int(x) for x in str(raw).replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"[{section}].{key}: cannot parse int list {raw!r}") from exc

    def to_dict(self) -> dict:
        return {s: dict(self.raw[s]) for s in self.raw.sections()}


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path} not found or unreadable")
    return ExperimentConfig(raw=parser, path=str(read[0]))


def config_from_string(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return ExperimentConfig(raw=parser)


def validate(cfg: ExperimentConfig, q_profile=None) -> list[Violation]:
    """Static validation without execution; returns all violations found.

    When a reference profile is supplied (e.g. from the on-disk cache) the
    local-minimization mass is additionally checked against the
    well-posedness estimate q0.
    """
    out: list[Violation] = []
    scenario = cfg.get("run", "scenario")
    if scenario is None:
        out.append(Violation("run.scenario", "missing"))
        return out
    if scenario not in SCENARIOS:
        out.append(Violation("run.scenario", f"unknown scenario {scenario!r}"))
        return out

    dim = cfg.get("grid", "dim", 2, int)
    if dim not in (2, 3):
        out.append(Violation("grid.dim", f"dim must be 2 or 3, got {dim}"))
    points = cfg.get_ints("grid", "points", (128,) * dim)
    for n in points:
        if n < 8 or n % 2 or (n & (n - 1)):
            out.append(Violation("grid.points", f"{n} is not an even power of two >= 8"))
    half_widths = cfg.get_floats("grid", "half_widths", (8.0,) * dim)
    if any(L <= 0 for L in half_widths):
        out.append(Violation("grid.half_widths", "must be positive"))

    if scenario == "q-reference":
        n = cfg.get("qref", "n", dim, int)
        p = cfg.get("qref", "p", None, float)
        if p is None:
            out.append(Violation("qref.p", "missing"))
        else:
            if p < 1 + 4.0 / n:
                out.append(Violation("qref.p", f"p={p} below the critical exponent {1 + 4 / n}"))
            if n == 3 and p >= 5:
                out.append(Violation("qref.p", f"p={p} not below the H1-critical exponent 5"))
        return out

    p = cfg.get("physics", "p", None, float)
    if p is None:
        out.append(Violation("physics.p", "missing"))
        return out
    gammas = cfg.get_floats("physics", "gammas", (1.0,) * dim)
    omega = cfg.get("physics", "omega", 0.0, float)
    if len(gammas) != dim:
        out.append(Violation("physics.gammas", f"need {dim} values"))
        return out
    if min(gammas) <= 0:
        out.append(Violation("physics.gammas", "trap frequencies must be positive"))
        return out
    gamma = min(gammas)
    pmax = float("inf") if dim == 2 else 1 + 4.0 / (dim - 2)
    if not (1.0 < p < pmax):
        out.append(Violation("physics.p", f"p={p} outside (1, {pmax})"))

    if scenario in VARIATIONAL_SCENARIOS or scenario == "classify":
        if omega >= gamma:
            out.append(Violation("physics.omega",
                                 f"|Omega|={omega} must be < gamma={gamma}"))

    s_c = dim / 2.0 - 2.0 / (p - 1.0)
    if scenario in ("classify", "ls1-trend", "sweep", "stability"):
        if not (0.0 < s_c < 1.0):
            out.append(Violation("physics.p",
                                 f"s_c={s_c:.4g} outside (0,1); scenario needs a "
                                 "mass-supercritical exponent"))

    # Box heuristic: half-width vs the classical turning radius of the
    # initial amplitude (documented artifact decision, warning only).
    if scenario in ("evolve", "classify", "stability"):
        amp = cfg.get("initial", "amplitude", 1.0, float)
        turn = amp ** ((p - 1.0) / 2.0) / gamma
        if min(half_widths) < 1.5 * turn:
            out.append(Violation("grid.half_widths",
                                 f"half-width {min(half_widths)} below 1.5x the "
                                 f"classical turning radius {turn:.3g} (truncation risk)",
                                 severity="warning"))

    if scenario == "sweep":
        if cfg.get_floats("sweep", "q_values") is None:
            out.append(Violation("sweep.q_values", "missing"))
        if cfg.get("sweep", "r", None, float) is None:
            out.append(Violation("sweep.r", "missing"))
    if scenario == "ls1-trend":
        if cfg.get_floats("ls1", "omegas") is None:
            out.append(Violation("ls1.omegas", "missing"))
    if scenario == "groundstate":
        method = cfg.get("groundstate", "method", "nehari")
        if method not in ("nehari", "local"):
            out.append(Violation("groundstate.method", f"unknown method {method!r}"))
        if method == "nehari" and cfg.get("groundstate", "omega", None, float) is None:
            out.append(Violation("groundstate.omega", "missing"))
        if method == "local":
            if cfg.get("groundstate", "q", None, float) is None:
                out.append(Violation("groundstate.q", "missing"))
            if cfg.get("groundstate", "r", None, float) is None:
                out.append(Violation("groundstate.r", "missing"))
    if scenario == "stability" and cfg.get_floats("stability", "deltas") is None:
        out.append(Violation("stability.deltas", "missing"))

    if q_profile is not None and 0.0 < s_c < 1.0 and omega < gamma:
        from .functionals import PhysicsParams
        from .groundstate import LocalMinimizationSpec
        pairs = []
        if scenario == "groundstate" and cfg.get("groundstate", "method", "nehari") == "local":
            pairs = [(cfg.get("groundstate", "q", None, float),
                      cfg.get("groundstate", "r", None, float), "groundstate.q")]
        elif scenario == "sweep":
            r = cfg.get("sweep", "r", None, float)
            qs = cfg.get_floats("sweep", "q_values", ())
            pairs = [(q, r, "sweep.q_values") for q in qs]
        params = PhysicsParams(dim=dim, p=p, gammas=gammas, omega_rot=omega)
        for q, r, keypath in pairs:
            if q is None or r is None:
                continue
            spec = LocalMinimizationSpec.create(q, r, params, q_profile.c_gn)
            if q >= spec.q0_estimate:
                out.append(Violation(keypath,
                                     f"q={q} not below the well-posedness estimate "
                                     f"q0={spec.q0_estimate:.4g}"))
    return out
