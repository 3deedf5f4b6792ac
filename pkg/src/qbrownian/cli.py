"""Declarative scenario runner.

A flat sectioned key=value config (INI semantics) names the bath,
oscillator, thermal state, drive, grid and one or more runs; `run`
executes the pipelines deterministically for a given seed and writes CSV
tables, grid dumps, a gnuplot script and a manifest; `report` aggregates
manifests into a pass/fail table.

Exit codes: 0 ok, 2 config validation, 3 numerical abort, 4 I/O error.
"""

import argparse
import configparser
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baths import BathKind, BathSpec, OscillatorSpec, ThermalSpec, occupation_factor
from .decoherence import (
    Regime,
    closed_form_driven,
    closed_form_entangled,
    closed_form_thermal_initial,
    closed_form_zero_T_initial,
    fit_short_time_law,
    make_series,
    simulate_attenuation_fourier,
)
from .evolve import (
    EvolutionConfig,
    MassConservationError,
    StabilityError,
    evolve_lambda,
    hpz_coefficients,
)
from .greens import CausalityError, VolterraError, green_initial_value
from .montecarlo import classical_langevin_moments, driven_msd_mc
from .quadrature import DriveKind, DriveSpec, LowTemperatureError, QuadratureError, driven_msd
from .wigner import CatSpec, GridSpec, cat_wigner, equilibrium_wigner, gaussian_wigner, save_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

NUMERICAL_ERRORS = (StabilityError, MassConservationError, QuadratureError,
                    VolterraError, CausalityError, LowTemperatureError)


class ConfigError(ValueError):
    pass


_SECTION_KEYS = {
    "bath": {"kind", "gamma", "tau", "mass"},
    "oscillator": {"mass", "spring_constant", "hbar"},
    "thermal": {"kt"},
    "drive": {"kind", "strength", "amplitude", "frequency"},
    "grid": {"nq", "np", "q_half", "p_half"},
    "output": {"dir", "seed", "checkpoint_every"},
}

_RUN_KEYS = {
    "mode", "lambda", "lambdas", "t_final", "dt", "state", "q0", "p0", "sigma", "d",
    "sigma_p", "n_times", "t_max", "regime", "tolerance", "n_paths", "initial_kt",
    "store_every",
}

_MODES = {"evolve", "decohere", "equilibrium-check", "kramers-compare", "coefficients"}


@dataclass
class RunSpec:
    name: str
    mode: str
    params: dict


@dataclass
class ScenarioConfig:
    bath: BathSpec
    osc: OscillatorSpec
    thermal: ThermalSpec
    drive: DriveSpec
    grid: dict
    out_dir: str
    seed: int
    checkpoint_every: int
    runs: list
    text: str = ""

    def __eq__(self, other):
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        return (self.bath, self.osc, self.thermal, self.drive.kind,
                self.drive.strength, self.grid, self.seed,
                self.checkpoint_every,
                [(r.name, r.mode, r.params) for r in self.runs]) == \
               (other.bath, other.osc, other.thermal, other.drive.kind,
                other.drive.strength, other.grid, other.seed,
                other.checkpoint_every,
                [(r.name, r.mode, r.params) for r in other.runs])


def _getfloat(sec, key, default):
    return float(sec.get(key, default))


def parse_config(text: str, overrides=None, seed=None, out_dir=None) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.rsplit(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value)

    for section in cp.sections():
        name = section.lower()
        if name.startswith("run:"):
            unknown = set(cp[section]) - _RUN_KEYS
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
        elif name in _SECTION_KEYS:
            unknown = set(cp[section]) - _SECTION_KEYS[name]
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
        else:
            raise ConfigError(f"unknown section [{section}]")

    try:
        bsec = cp["bath"] if cp.has_section("bath") else {}
        kind = {"ohmic": BathKind.OHMIC,
                "single_relaxation_time": BathKind.SINGLE_RELAXATION_TIME}[
                    str(bsec.get("kind", "ohmic")).lower()]
        bath = BathSpec(kind, _getfloat(bsec, "gamma", 0.1), _getfloat(bsec, "tau", 0.0),
                        _getfloat(bsec, "mass", 1.0))
        osec = cp["oscillator"] if cp.has_section("oscillator") else {}
        osc = OscillatorSpec(_getfloat(osec, "mass", 1.0),
                             _getfloat(osec, "spring_constant", 1.0),
                             _getfloat(osec, "hbar", 1.0))
        tsec = cp["thermal"] if cp.has_section("thermal") else {}
        thermal = ThermalSpec(_getfloat(tsec, "kt", 0.0))
        dsec = cp["drive"] if cp.has_section("drive") else {}
        dkind = {"none": DriveKind.NONE, "deterministic": DriveKind.DETERMINISTIC,
                 "delta_random": DriveKind.DELTA_RANDOM}[str(dsec.get("kind", "none")).lower()]
        force = None
        if dkind is DriveKind.DETERMINISTIC:
            amp = _getfloat(dsec, "amplitude", 0.0)
            freq = _getfloat(dsec, "frequency", 0.0)
            force = _CosineForce(amp, freq)
        drive = DriveSpec(dkind, force=force, strength=_getfloat(dsec, "strength", 0.0))
        gsec = cp["grid"] if cp.has_section("grid") else {}
        grid = {"nq": int(gsec.get("nq", 256)), "np": int(gsec.get("np", 256)),
                "q_half": float(gsec["q_half"]) if "q_half" in gsec else None,
                "p_half": float(gsec["p_half"]) if "p_half" in gsec else None}
        osec2 = cp["output"] if cp.has_section("output") else {}
        cfg_seed = int(osec2.get("seed", 0)) if seed is None else int(seed)
        cfg_dir = str(osec2.get("dir", "out")) if out_dir is None else str(out_dir)
        checkpoint_every = int(osec2.get("checkpoint_every", 0))
        runs = []
        for section in cp.sections():
            if section.lower().startswith("run:"):
                name = section.split(":", 1)[1]
                params = dict(cp[section])
                mode = params.pop("mode", None)
                if mode not in _MODES:
                    raise ConfigError(f"[{section}] needs mode in {sorted(_MODES)}, got {mode!r}")
                runs.append(RunSpec(name, mode, params))
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config validation failed: {exc}") from exc
    eff = _effective_text(bath, osc, thermal, drive, grid, cfg_dir, cfg_seed,
                          checkpoint_every, runs)
    return ScenarioConfig(bath, osc, thermal, drive, grid, cfg_dir, cfg_seed,
                          checkpoint_every, runs, text=eff)


class _CosineForce:
    """Picklable f(t) = amplitude * cos(frequency * t)."""

    def __init__(self, amplitude, frequency):
        self.amplitude = amplitude
        self.frequency = frequency

    def __call__(self, t):
        return self.amplitude * np.cos(self.frequency * t)


def _effective_text(bath, osc, thermal, drive, grid, out_dir, seed, checkpoint_every, runs):
    lines = ["[bath]", f"kind = {bath.kind.value}", f"gamma = {bath.gamma!r}",
             f"tau = {bath.tau!r}", f"mass = {bath.mass!r}", "",
             "[oscillator]", f"mass = {osc.mass!r}",
             f"spring_constant = {osc.spring_constant!r}", f"hbar = {osc.hbar!r}", "",
             "[thermal]", f"kt = {thermal.kT!r}", "",
             "[drive]", f"kind = {drive.kind.value}", f"strength = {drive.strength!r}"]
    if isinstance(drive.force, _CosineForce):
        lines += [f"amplitude = {drive.force.amplitude!r}",
                  f"frequency = {drive.force.frequency!r}"]
    lines += ["", "[grid]", f"nq = {grid['nq']}", f"np = {grid['np']}"]
    if grid.get("q_half") is not None:
        lines.append(f"q_half = {grid['q_half']!r}")
    if grid.get("p_half") is not None:
        lines.append(f"p_half = {grid['p_half']!r}")
    lines += ["", "[output]", f"dir = {out_dir}", f"seed = {seed}",
              f"checkpoint_every = {checkpoint_every}"]
    for r in runs:
        lines += ["", f"[run:{r.name}]", f"mode = {r.mode}"]
        lines += [f"{k} = {v}" for k, v in sorted(r.params.items())]
    return "\n".join(lines) + "\n"


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.12e" % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _auto_grid(cfg: ScenarioConfig, sigma=None, d=0.0):
    osc, th = cfg.osc, cfg.thermal
    if cfg.grid["q_half"] is not None and cfg.grid["p_half"] is not None:
        return GridSpec(-cfg.grid["q_half"], cfg.grid["q_half"],
                        -cfg.grid["p_half"], cfg.grid["p_half"],
                        cfg.grid["nq"], cfg.grid["np"])
    hbar, m, w0 = osc.hbar, osc.mass, osc.omega0
    q_half = p_half = 0.0
    if sigma is not None:
        sp = hbar / (2 * sigma)
        q_half = 0.5 * d + 7.0 * sigma
        p_half = 7.0 * sp
    if osc.spring_constant > 0:
        two_n1 = occupation_factor(osc, th)
        q_th = np.sqrt(two_n1 * hbar / (2 * m * w0))
        p_th = np.sqrt(two_n1 * m * hbar * w0 / 2)
        q_half = max(q_half, 7.0 * q_th)
        p_half = max(p_half, 7.0 * p_th)
    return GridSpec(-q_half, q_half, -p_half, p_half, cfg.grid["nq"], cfg.grid["np"])


def _initial_state(cfg: ScenarioConfig, run: RunSpec, grid):
    state = run.params.get("state", "gaussian")
    sigma = float(run.params.get("sigma", np.sqrt(cfg.osc.hbar / (2 * cfg.osc.mass * max(cfg.osc.omega0, 1e-12)))))
    if state == "equilibrium":
        return equilibrium_wigner(cfg.osc, cfg.thermal, grid)
    if state == "cat":
        return cat_wigner(CatSpec(float(run.params.get("d", 4 * sigma)), sigma),
                          grid, cfg.osc, cfg.thermal)
    sigma_p = float(run.params["sigma_p"]) if "sigma_p" in run.params else None
    return gaussian_wigner(float(run.params.get("q0", 0.0)), float(run.params.get("p0", 0.0)),
                           sigma, grid, cfg.osc, cfg.thermal, sigma_p=sigma_p)


def _run_equilibrium_check(cfg, run, outdir):
    tol = float(run.params.get("tolerance", 1e-4))
    lambdas = [int(s) for s in str(run.params.get("lambdas", "-1,0,1")).split(",")]
    t_final = float(run.params.get("t_final", 10.0 / cfg.bath.gamma))
    dt = float(run.params["dt"]) if "dt" in run.params else None
    grid = _auto_grid(cfg)
    w0 = equilibrium_wigner(cfg.osc, cfg.thermal, grid)
    rows, checks = [], []
    for lam in lambdas:
        ecfg = EvolutionConfig(t_final=t_final, lam=lam, dt=dt,
                               store_every=int(run.params.get("store_every", 0)) or None)
        traj = evolve_lambda(w0, ecfg, cfg.bath, cfg.osc, cfg.thermal)
        peak = float(np.max(np.abs(w0.values)))
        max_dev = 0.0
        for ft, fr in zip(traj.frame_times, traj.frames):
            dev = float(np.max(np.abs(fr.values - w0.values)) / peak)
            max_dev = max(max_dev, dev)
            rows.append((lam, float(ft), dev))
        checks.append(_check(f"stationary_lambda_{lam:+d}", max_dev, tol))
    _write_csv(outdir / f"{run.name}_equilibrium.csv", ("lambda", "t", "max_dev"), rows)
    return checks, [f"{run.name}_equilibrium.csv"]


def _run_coefficients(cfg, run, outdir):
    t_final = float(run.params.get("t_final", 10.0))
    n = int(run.params.get("n_times", 801))
    t = np.linspace(0.0, t_final, n)
    co = hpz_coefficients(cfg.bath, cfg.osc, cfg.thermal, t)
    rows = [(float(ti), float(g), float(o), float(dp), float(dq))
            for ti, g, o, dp, dq in zip(co.times, co.gamma_t, co.omega2_t, co.d_pp, co.d_qp)]
    _write_csv(outdir / f"{run.name}_coefficients.csv",
               ("t", "two_gamma", "omega2", "d_pp", "d_qp"), rows)
    checks = []
    if cfg.bath.kind is BathKind.OHMIC:
        g_dev = float(np.max(np.abs(co.gamma_t[1:] - cfg.bath.gamma)) / cfg.bath.gamma)
        o_dev = float(np.max(np.abs(co.omega2_t[1:] - cfg.osc.omega0**2)) / cfg.osc.omega0**2)
        checks.append(_check("two_gamma_constant", g_dev, 1e-4))
        checks.append(_check("omega2_constant", o_dev, 1e-4))
        dpp_target = cfg.bath.gamma * occupation_factor(cfg.osc, cfg.thermal) / 2 \
            * cfg.osc.mass * cfg.osc.hbar * cfg.osc.omega0
        checks.append(_check("d_pp_longtime", abs(float(co.d_pp[-1]) - dpp_target) / dpp_target, 0.01))
    return checks, [f"{run.name}_coefficients.csv"]


def _run_kramers(cfg, run, outdir):
    kT = cfg.thermal.kT
    gamma = cfg.bath.gamma
    t_final = float(run.params.get("t_final", 2.0 / gamma))
    n_paths = int(run.params.get("n_paths", 100_000))
    n_times = int(run.params.get("n_times", 10))
    q0 = float(run.params.get("q0", 1.0))
    two_n1 = occupation_factor(cfg.osc, cfg.thermal)
    s_th = np.sqrt(two_n1 * cfg.osc.hbar / (2.0 * cfg.osc.mass * cfg.osc.omega0))
    s_pth = np.sqrt(two_n1 * cfg.osc.mass * cfg.osc.hbar * cfg.osc.omega0 / 2.0)
    grid = cfg.grid
    q_half = grid["q_half"] or (7.0 * s_th + abs(q0))
    p_half = grid["p_half"] or (7.0 * s_pth)
    gs = GridSpec(-q_half, q_half, -p_half, p_half, grid["nq"], grid["np"])
    w0 = gaussian_wigner(q0, 0.0, s_th, gs, cfg.osc, cfg.thermal, sigma_p=s_pth)
    dt = float(run.params["dt"]) if "dt" in run.params else None
    ecfg = EvolutionConfig(t_final=t_final, lam=-1, dt=dt)
    traj = evolve_lambda(w0, ecfg, cfg.bath, cfg.osc, cfg.thermal)
    sample_t = np.linspace(t_final / n_times, t_final, n_times)
    mc = classical_langevin_moments(cfg.osc, gamma, kT, [q0, 0.0],
                                    np.diag([s_th**2, s_pth**2]), sample_t,
                                    n_paths=n_paths, seed=cfg.seed)
    dt_used = traj.times[1] - traj.times[0]
    rows, worst = [], 0.0
    for j, tj in enumerate(sample_t):
        i = int(round(tj / dt_used))
        for label, pde, ref, se in (
                ("mean_q", traj.mean_q[i], mc.mean_q[j], mc.se_mean_q[j]),
                ("mean_p", traj.mean_p[i], mc.mean_p[j], mc.se_mean_p[j]),
                ("var_q", traj.var_q[i], mc.var_q[j], mc.se_var_q[j]),
                ("var_p", traj.var_p[i], mc.var_p[j], mc.se_var_p[j]),
                ("cov_qp", traj.cov_qp[i], mc.cov_qp[j], mc.se_cov_qp[j])):
            z = (pde - ref) / se
            worst = max(worst, abs(z))
            rows.append((float(tj), label, float(pde), float(ref), float(se), float(z)))
    _write_csv(outdir / f"{run.name}_kramers.csv",
               ("t", "moment", "pde", "mc", "se", "z"), rows)
    return [_check("kramers_worst_abs_z", worst, 3.0)], [f"{run.name}_kramers.csv"]


def _run_decohere(cfg, run, outdir):
    regime = str(run.params.get("regime", "zero_T")).lower()
    sigma = float(run.params.get("sigma", 1.0))
    d = float(run.params.get("d", 8.0 * sigma))
    cat = CatSpec(d, sigma)
    t_max = float(run.params.get("t_max", 0.1 / max(cfg.bath.gamma, 1e-12)))
    n = int(run.params.get("n_times", 21))
    tol = float(run.params.get("tolerance", 0.05))
    times = np.linspace(0.0, t_max, n)
    osc, bath, th = cfg.osc, cfg.bath, cfg.thermal
    checks = []
    if regime in ("zero_t", "zero_t_initial"):
        ser = simulate_attenuation_fourier(cat, bath, osc, th, times)
        a_cf = closed_form_zero_T_initial(bath, osc, th, cat, times)
        label = Regime.ZERO_T_INITIAL.value
        rel = np.max(np.abs(ser.a - a_cf) / np.maximum(a_cf, 1e-12))
        checks.append(_check("closed_form_agreement", float(rel), tol))
        p, tau = fit_short_time_law(times, ser.a)
        if p is not None:
            checks.append(_check("short_time_exponent_dev", abs(p - 3.0), 0.1))
    elif regime in ("thermal", "thermal_initial"):
        ser = simulate_attenuation_fourier(cat, bath, osc, th, times,
                                           initial_kT=th.kT,
                                           regime=Regime.THERMAL_INITIAL,
                                           allow_low_temperature=True)
        a_cf = closed_form_thermal_initial(osc, th, cat, times)
        label = Regime.THERMAL_INITIAL.value
        rel = np.max(np.abs(ser.a - a_cf) / np.maximum(a_cf, 1e-12))
        checks.append(_check("closed_form_agreement", float(rel), tol))
        p, tau = fit_short_time_law(times, ser.a, a_window=(0.998, 0.6))
        tau_target = np.sqrt(8.0) * sigma**2 / (th.mean_velocity(osc) * d)
        if tau is not None:
            checks.append(_check("tau_d_rel_dev", abs(tau - tau_target) / tau_target, 0.05))
    elif regime == "entangled":
        a_sim = closed_form_entangled(bath, osc, th, cat, times)
        a_cf = closed_form_thermal_initial(osc, th, cat, times)
        ser = make_series(times, a_sim, Regime.ENTANGLED)
        label = Regime.ENTANGLED.value
        if th.kT >= 20.0 * osc.hbar * bath.gamma:
            rel = np.max(np.abs(a_sim[1:] - a_cf[1:]) / a_cf[1:])
            checks.append(_check("high_T_reduction", float(rel), 0.02))
    else:  # driven
        green = green_initial_value(bath, osc, np.linspace(0.0, t_max, max(801, 4 * n)))
        a_sim = closed_form_driven(cfg.drive, green, cat, times)
        sd = driven_msd(cfg.drive, green, times)
        a_cf = np.exp(-cfg.drive.strength * times**3 * d**2 / (24 * osc.mass**2 * sigma**4))
        ser = make_series(times, a_sim, Regime.DRIVEN)
        label = Regime.DRIVEN.value
        if cfg.drive.kind is DriveKind.DELTA_RANDOM:
            small = times <= 0.1 / max(osc.omega0, 1e-12)
            if np.any(small[1:]):
                sd_small = sd[small][1:]
                ref = cfg.drive.strength * times[small][1:] ** 3 / (3 * osc.mass**2)
                checks.append(_check("sd_cubic_law", float(np.max(np.abs(sd_small - ref) / ref)), 0.01))
            mc, se = driven_msd_mc(green.spline(), cfg.drive.strength, float(times[-1]),
                                   n_paths=int(run.params.get("n_paths", 10_000)), seed=cfg.seed)
            z = (driven_msd(cfg.drive, green, float(times[-1])) - mc) / se
            checks.append(_check("sd_mc_abs_z", abs(float(z)), 3.0))
    checks.append(_check("a0_is_one", abs(float(ser.a[0]) - 1.0), 1e-3))
    rows = [(float(t), float(av), float(cv), label, d, sigma, bath.gamma, th.kT)
            for t, av, cv in zip(times, ser.a, a_cf)]
    _write_csv(outdir / f"{run.name}_decohere.csv",
               ("t", "a_simulated", "a_closed_form", "regime", "d", "sigma", "gamma", "kT"),
               rows)
    return checks, [f"{run.name}_decohere.csv"]


def _run_evolve(cfg, run, outdir):
    lam = int(run.params.get("lambda", 0))
    t_final = float(run.params.get("t_final", 10.0))
    dt = float(run.params["dt"]) if "dt" in run.params else None
    sigma = float(run.params.get("sigma", 1.0))
    grid = _auto_grid(cfg, sigma=sigma, d=float(run.params.get("d", 0.0)))
    w0 = _initial_state(cfg, run, grid)
    ckdir = None
    if cfg.checkpoint_every:
        ckdir = outdir / f"{run.name}_checkpoints"
        ckdir.mkdir(exist_ok=True)
    ecfg = EvolutionConfig(t_final=t_final, lam=lam, dt=dt, drive=cfg.drive,
                           checkpoint_every=cfg.checkpoint_every or None,
                           checkpoint_dir=str(ckdir) if ckdir else None)
    traj = evolve_lambda(w0, ecfg, cfg.bath, cfg.osc, cfg.thermal)
    det = traj.uncertainty_determinant()
    rows = [(float(t), float(nm), float(mq), float(mp), float(vq), float(vp), float(cq), float(dd))
            for t, nm, mq, mp, vq, vp, cq, dd in zip(
                traj.times, traj.norm, traj.mean_q, traj.mean_p,
                traj.var_q, traj.var_p, traj.cov_qp, det)]
    _write_csv(outdir / f"{run.name}_moments.csv",
               ("t", "norm", "mean_q", "mean_p", "var_q", "var_p", "cov_qp", "uncertainty_det"),
               rows)
    save_grid(outdir / f"{run.name}_final.wgrid", traj.final)
    drift = abs(float(traj.norm[-1] - traj.norm[0])) / t_final
    checks = [_check("norm_drift_per_time", drift, 1e-5),
              _check("uncertainty_violation_flag", float(traj.uncertainty_violated), 1.0,
                     note="informational: 1 means the detector fired")]
    return checks, [f"{run.name}_moments.csv", f"{run.name}_final.wgrid"]


def _check(name, value, tol, note=""):
    return {"name": name, "value": value, "tol": tol,
            "passed": bool(value <= tol), "note": note}


_RUNNERS = {
    "equilibrium-check": _run_equilibrium_check,
    "coefficients": _run_coefficients,
    "kramers-compare": _run_kramers,
    "decohere": _run_decohere,
    "evolve": _run_evolve,
}


def _execute_run(cfg: ScenarioConfig, run: RunSpec, outdir_str: str):
    outdir = Path(outdir_str)
    start = time.time()
    try:
        checks, outputs = _RUNNERS[run.mode](cfg, run, outdir)
        status = "ok" if all(c["passed"] for c in checks) else "check-failed"
    except NUMERICAL_ERRORS as exc:
        return {"name": run.name, "mode": run.mode, "status": "numerical-error",
                "error": f"{type(exc).__name__}: {exc}", "checks": [], "outputs": [],
                "wall_time_s": time.time() - start}
    return {"name": run.name, "mode": run.mode, "status": status,
            "checks": checks, "outputs": outputs,
            "wall_time_s": time.time() - start}


def run_scenario(cfg: ScenarioConfig, workers: int = 1) -> int:
    outdir = Path(cfg.out_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    start = time.time()
    results = []
    if workers > 1 and len(cfg.runs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_execute_run, cfg, r, str(outdir)) for r in cfg.runs]
            results = [f.result() for f in futs]
    else:
        results = [_execute_run(cfg, r, str(outdir)) for r in cfg.runs]

    manifest = {
        "package": "qbrownian",
        "version": __version__,
        "config_sha256": hashlib.sha256(cfg.text.encode()).hexdigest(),
        "config_text": cfg.text,
        "seed": cfg.seed,
        "versions": {"numpy": np.__version__},
        "runs": results,
        "wall_time_s": time.time() - start,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    try:
        with open(outdir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
        _emit_plot_script(outdir, results)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    failed_numerical = any(r["status"] == "numerical-error" for r in results)
    if failed_numerical:
        for r in results:
            if r["status"] == "numerical-error":
                print(f"run {r['name']}: {r['error']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _emit_plot_script(outdir, results):
    lines = ["# gnuplot script generated by qbrownian", "set datafile separator ','",
             "set key autotitle columnhead"]
    for r in results:
        for out in r.get("outputs", []):
            if out.endswith("_decohere.csv"):
                lines += [f"set title '{r['name']}: attenuation'", "set logscale y",
                          f"plot '{out}' using 1:2 with lines, '' using 1:3 with lines",
                          "pause -1", "unset logscale y"]
            elif out.endswith("_equilibrium.csv"):
                lines += [f"set title '{r['name']}: equilibrium deviation'",
                          f"plot '{out}' using 2:3 with points", "pause -1"]
            elif out.endswith("_moments.csv"):
                lines += [f"set title '{r['name']}: moments'",
                          f"plot '{out}' using 1:3 with lines, '' using 1:5 with lines",
                          "pause -1"]
    (outdir / "plots.gp").write_text("\n".join(lines) + "\n")


def report(artifact_dir) -> int:
    path = Path(artifact_dir) / "manifest.json"
    if not path.exists():
        print(f"no manifest found in {artifact_dir}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = json.loads(path.read_text())
    print(f"{'run':<20} {'mode':<18} {'check':<28} {'value':>12} {'tol':>10} {'status':>8}")
    for r in manifest["runs"]:
        if r["status"] == "numerical-error":
            print(f"{r['name']:<20} {r['mode']:<18} {'(aborted)':<28} {'-':>12} {'-':>10} {'ERROR':>8}")
            continue
        if not r["checks"]:
            print(f"{r['name']:<20} {r['mode']:<18} {'-':<28} {'-':>12} {'-':>10} {'PASS':>8}")
        for c in r["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            print(f"{r['name']:<20} {r['mode']:<18} {c['name']:<28} "
                  f"{c['value']:>12.4g} {c['tol']:>10.3g} {status:>8}")
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qbrownian",
                                 description="Wigner-function scenarios for the damped oscillator")
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute the runs named in a config file")
    runp.add_argument("config")
    runp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--out", default=None)
    runp.add_argument("--workers", type=int, default=1)
    repp = sub.add_parser("report", help="summarize manifests in an artifact directory")
    repp.add_argument("dir")
    args = ap.parse_args(argv)

    if args.command == "report":
        return report(args.dir)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, overrides=args.set, seed=args.seed, out_dir=args.out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError) as exc:
        print(f"config validation failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_scenario(cfg, workers=args.workers)


if __name__ == "__main__":
    sys.exit(main())
