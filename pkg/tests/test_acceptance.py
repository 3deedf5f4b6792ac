"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`.  Every tolerance is the
stated one; parameters are desk scale (256^2-class grids, minutes each
for the long evolutions).
"""

import numpy as np
import pytest
from scipy.optimize import curve_fit

from qbrownian.baths import BathKind, BathSpec, OscillatorSpec, ThermalSpec, occupation_factor
from qbrownian.greens import green_initial_value
from qbrownian.quadrature import DriveKind, DriveSpec, driven_msd, fluctuation_moments
from qbrownian.montecarlo import classical_langevin_moments, driven_msd_mc
from qbrownian.evolve import (
    EvolutionConfig,
    evolve_hpz,
    evolve_lambda,
    hpz_coefficients,
    kernel_propagate,
    probability_density_fourier,
)
from qbrownian.wigner import (
    CatSpec,
    GridSpec,
    cat_wigner,
    equilibrium_wigner,
    gaussian_wigner,
    marginal_q,
)
from qbrownian.decoherence import (
    Regime,
    closed_form_entangled,
    closed_form_thermal_initial,
    closed_form_zero_T_initial,
    fit_short_time_law,
    simulate_attenuation_fourier,
)

OSC = OscillatorSpec(1.0, 1.0, 1.0)


def _line(num, name, ok, detail):
    print(f"ACCEPTANCE {num:2d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} {name}: {detail}"


def _thermal_grid(kT, extra_q=0.0, n=256, factor=7.0):
    s = np.sqrt(occupation_factor(OSC, ThermalSpec(kT=kT)) / 2)
    return GridSpec(-factor * s - extra_q, factor * s + extra_q,
                    -factor * s, factor * s, n, n)


def test_criterion_01_equilibrium_fixed_point():
    bath = BathSpec(BathKind.OHMIC, gamma=0.2)
    th = ThermalSpec(kT=5.0)
    w0 = equilibrium_wigner(OSC, th, _thermal_grid(5.0))
    peak = w0.values.max()
    t_final = 10.0 / bath.gamma
    worst = {}
    for lam in (-1, 0, 1):
        cfg = EvolutionConfig(t_final=t_final, lam=lam, store_every=100)
        traj = evolve_lambda(w0, cfg, bath, OSC, th)
        dev = max(np.max(np.abs(fr.values - w0.values)) / peak for fr in traj.frames)
        worst[lam] = dev
    ok = all(d < 1e-4 for d in worst.values())
    _line(1, "equilibrium fixed point", ok,
          "max|W-W0|/peak per lambda: " +
          ", ".join(f"{k:+d}: {v:.2e}" for k, v in worst.items()) + " < 1e-4")


def test_criterion_02_exact_mean_motion():
    bath = BathSpec(BathKind.OHMIC, gamma=0.2)
    th = ThermalSpec(kT=5.0)
    grid = _thermal_grid(5.0, extra_q=3.0)
    w0 = gaussian_wigner(2.0, 0.0, np.sqrt(0.5), grid, OSC, sigma_p=np.sqrt(0.5))

    def damped_cos(t, amp, sig, om, ph):
        return amp * np.exp(-sig * t) * np.cos(om * t + ph)

    results = {}
    for lam in (-1, 0, 1):
        cfg = EvolutionConfig(t_final=25.0, lam=lam, dt=0.01)
        traj = evolve_lambda(w0, cfg, bath, OSC, th)
        t, xm = traj.times, traj.mean_q
        dt = t[1] - t[0]
        xp = np.gradient(xm, dt, edge_order=2)
        xpp = np.gradient(xp, dt, edge_order=2)
        resid = np.max(np.abs((xpp + bath.gamma * xp + xm)[5:-5])) / np.max(np.abs(xm))
        popt, _ = curve_fit(damped_cos, t, xm, p0=(2.0, 0.1, 1.0, 0.0))
        om_eff2 = popt[2] ** 2 + popt[1] ** 2
        results[lam] = (resid, om_eff2 - OSC.omega0**2)

    resid_ok = results[-1][0] < 1e-3 and results[1][0] < 1e-3
    shift = results[0][1]
    target = bath.gamma**2 / 4
    shift_ok = abs(shift - target) < 0.02 * target
    _line(2, "exact mean motion", resid_ok and shift_ok,
          f"lam=+-1 ODE residual {results[-1][0]:.1e}/{results[1][0]:.1e} < 1e-3; "
          f"lam=0 shift {shift:.6f} vs gamma^2/4 = {target:.4f} within 2%")


def test_criterion_03_kramers_limit():
    bath = BathSpec(BathKind.OHMIC, gamma=0.2)
    kT = 100.0
    th = ThermalSpec(kT=kT)
    s_th = np.sqrt(occupation_factor(OSC, th) / 2)
    q0 = 15.0
    grid = GridSpec(-7 * s_th - q0, 7 * s_th + q0, -7 * s_th, 7 * s_th, 384, 256)
    w0 = gaussian_wigner(q0, 0.0, s_th, grid, OSC, sigma_p=s_th)
    cfg = EvolutionConfig(t_final=10.0, lam=-1)
    traj = evolve_lambda(w0, cfg, bath, OSC, th)
    sample_t = np.linspace(1.0, 10.0, 10)
    mc = classical_langevin_moments(OSC, bath.gamma, kT, [q0, 0.0],
                                    np.diag([s_th**2, s_th**2]), sample_t,
                                    n_paths=100_000, seed=42)
    dt = traj.times[1] - traj.times[0]
    worst = 0.0
    for j, tj in enumerate(sample_t):
        i = int(round(tj / dt))
        for pde, ref, se in ((traj.mean_q[i], mc.mean_q[j], mc.se_mean_q[j]),
                             (traj.mean_p[i], mc.mean_p[j], mc.se_mean_p[j]),
                             (traj.var_q[i], mc.var_q[j], mc.se_var_q[j]),
                             (traj.var_p[i], mc.var_p[j], mc.se_var_p[j]),
                             (traj.cov_qp[i], mc.cov_qp[j], mc.se_cov_qp[j])):
            worst = max(worst, abs(pde - ref) / se)
    _line(3, "Kramers limit vs Langevin MC", worst < 3.0,
          f"worst |z| over 10 times x 5 moments = {worst:.2f} < 3")


def test_criterion_04_kernel_pde_equivalence():
    bath = BathSpec(BathKind.OHMIC, gamma=0.5)
    th = ThermalSpec(kT=8.0)
    t_checks = [1.0, 4.0, 20.0]
    tg = np.linspace(0.0, 20.0, 4001)
    green = green_initial_value(bath, OSC, tg)
    mom = fluctuation_moments(bath, OSC, th, tg, green=green)
    coeffs = hpz_coefficients(bath, OSC, th, tg, green=green, moments=mom)

    s_th = np.sqrt(occupation_factor(OSC, th) / 2)
    worst = {}
    sigma = 0.8
    cases = {
        "gaussian": gaussian_wigner(1.5, 0.0, sigma,
                                    GridSpec(-7 * s_th - 2, 7 * s_th + 2,
                                             -7 * s_th, 7 * s_th, 256, 256), OSC),
        "cat": cat_wigner(CatSpec(3.0, sigma),
                          GridSpec(-7 * s_th, 7 * s_th, -7 * s_th, 7 * s_th,
                                   384, 384), OSC),
    }
    for name, w0 in cases.items():
        cfg = EvolutionConfig(t_final=20.0, dt=0.01, store_every=100)
        traj = evolve_hpz(w0, coeffs, cfg)
        frame_times = np.asarray(traj.frame_times)
        dev = 0.0
        for t_star in t_checks:
            i = int(np.argmin(np.abs(frame_times - t_star)))
            assert abs(frame_times[i] - t_star) < 1e-9
            wk = kernel_propagate(w0, bath, OSC, th, t_star, green=green, moments=mom)
            dev = max(dev, np.max(np.abs(traj.frames[i].values - wk.values))
                      / np.max(np.abs(wk.values)))
        worst[name] = dev
    ok = all(v < 1e-3 for v in worst.values())
    _line(4, "kernel vs exact-equation evolution", ok,
          "max-norm dev at t in {1,4,20}: " +
          ", ".join(f"{k}: {v:.2e}" for k, v in worst.items()) + " < 1e-3")


def test_criterion_05_hpz_coefficients():
    bath = BathSpec(BathKind.OHMIC, gamma=0.2)
    th = ThermalSpec(kT=100.0)
    t = np.linspace(0.0, 40.0, 161)
    co = hpz_coefficients(bath, OSC, th, t)
    g_dev = np.max(np.abs(co.gamma_t[1:] - bath.gamma)) / bath.gamma
    o_dev = np.max(np.abs(co.omega2_t[1:] - OSC.omega0**2)) / OSC.omega0**2
    dpp_target = bath.gamma * occupation_factor(OSC, th) / 2 * OSC.mass * OSC.hbar * OSC.omega0
    dpp_dev = abs(co.d_pp[-1] - dpp_target) / dpp_target
    ok = g_dev < 1e-4 and o_dev < 1e-4 and dpp_dev < 0.01
    _line(5, "local-in-time coefficients (Ohmic)", ok,
          f"|2G-gamma|/gamma = {g_dev:.1e}, |Om2-w0^2|/w0^2 = {o_dev:.1e} < 1e-4; "
          f"d_pp(end) off target by {dpp_dev:.2%} < 1%")


def test_criterion_06_decoherence_cold_packet():
    bath = BathSpec(BathKind.OHMIC, gamma=0.25)
    th = ThermalSpec(kT=4000.0)
    cat = CatSpec(d=12.0, sigma=1.0)
    times = np.linspace(0.0, 0.042, 15)
    ser = simulate_attenuation_fourier(cat, bath, OSC, th, times)
    a_cf = closed_form_zero_T_initial(bath, OSC, th, cat, times)
    rel = np.max(np.abs(ser.a - a_cf) / a_cf)
    # sigma -> 0: pure exponential with tau_d = 3 hbar^2 / (zeta kT d^2)
    small = CatSpec(d=12.0, sigma=1e-3)
    tau_d = 3.0 / (bath.zeta * th.kT * small.d**2)
    tt = np.linspace(tau_d, 3 * tau_d, 9)
    rate = np.polyfit(tt, -np.log(closed_form_zero_T_initial(bath, OSC, th, small, tt)), 1)[0]
    tau_dev = abs(1.0 / rate - tau_d) / tau_d
    ok = rel < 0.05 and tau_dev < 0.05
    _line(6, "cold-packet decoherence law", ok,
          f"sim vs closed form within {rel:.2%} (< 5%) over a in "
          f"[{ser.a[-1]:.2f}, 1]; sigma->0 tau_d off by {tau_dev:.2%} < 5%")


def test_criterion_07_thermal_and_entangled():
    # (a) thermal-packet short-time law
    free = OscillatorSpec(1.0, 0.0, 1.0)
    bath = BathSpec(BathKind.OHMIC, gamma=1e-3)
    th = ThermalSpec(kT=1.0)
    cat = CatSpec(d=10.0, sigma=1.0)
    times = np.linspace(0.0, 0.22, 23)
    ser = simulate_attenuation_fourier(cat, bath, free, th, times, initial_kT=th.kT,
                                       regime=Regime.THERMAL_INITIAL,
                                       allow_low_temperature=True)
    p, tau = fit_short_time_law(times, ser.a, a_window=(0.998, 0.6))
    tau_target = np.sqrt(8.0) * cat.sigma**2 / (th.mean_velocity(free) * cat.d)
    tau_ok = abs(tau - tau_target) / tau_target < 0.05

    # (b) entangled form reduces to the thermal form at high T
    gam = 0.5
    bath2 = BathSpec(BathKind.OHMIC, gamma=gam)
    th2 = ThermalSpec(kT=20.0 * gam)
    t2 = np.linspace(0.01, 0.1 / gam, 12)
    cat2 = CatSpec(d=5.0, sigma=1.0)
    a_e = closed_form_entangled(bath2, free, th2, cat2, t2)
    a_t = closed_form_thermal_initial(free, th2, cat2, t2)
    red = np.max(np.abs(a_e - a_t) / a_t)
    red_ok = red < 0.02

    # (c) kT = 0, single-relaxation-time bath: -log a ~ t^2 |log gamma tau|
    g0 = 0.01
    taus = np.array([1e-3, 2e-3, 5e-3, 1e-2])
    coeffs, powers = [], []
    for tau_b in taus:
        srt = BathSpec(BathKind.SINGLE_RELAXATION_TIME, gamma=g0, tau=tau_b)
        tw = np.linspace(0.02 * tau_b, 0.1 * tau_b, 8)
        a = closed_form_entangled(srt, free, ThermalSpec(0.0), cat2, tw)
        powers.append(np.polyfit(np.log(tw), np.log(-np.log(a)), 1)[0])
        coeffs.append(np.mean(-np.log(a) / tw**2))
    coeffs = np.array(coeffs)
    logs = -np.log(g0 * taus)
    slope, intercept = np.polyfit(logs, coeffs, 1)
    lin_resid = np.max(np.abs(coeffs - (slope * logs + intercept)) / coeffs)
    scaling_ok = (slope > 0 and lin_resid < 0.03
                  and all(abs(pw - 2.0) < 0.1 for pw in powers))

    ok = tau_ok and red_ok and scaling_ok
    _line(7, "thermal-packet and entangled decoherence", ok,
          f"tau_d {tau:.4f} vs sqrt(8)s^2/(v d) = {tau_target:.4f} within 5%; "
          f"entangled->thermal within {red:.2%} < 2%; "
          f"t^2|log g tau| fit: powers~2 (+-0.1), linear resid {lin_resid:.2%}")


def test_criterion_08_driven_displacement():
    bath = BathSpec(BathKind.OHMIC, gamma=0.01)
    green = green_initial_value(bath, OSC, np.linspace(0.0, 4.0, 4001))
    drive = DriveSpec(DriveKind.DELTA_RANDOM, strength=2.0)
    t_small = np.array([0.02, 0.05, 0.1])
    sd = driven_msd(drive, green, t_small)
    ref = drive.strength * t_small**3 / 3.0
    cubic_dev = np.max(np.abs(sd - ref) / ref)
    mc, se = driven_msd_mc(green.spline(), drive.strength, 3.0, n_paths=10_000, seed=3)
    z = abs(driven_msd(drive, green, 3.0) - mc) / se
    ok = cubic_dev < 0.01 and z < 3.0
    _line(8, "driven mean-square displacement", ok,
          f"s_d vs g t^3/3m^2 within {cubic_dev:.2%} (< 1%) for w0 t <= 0.1; "
          f"general-t MC |z| = {z:.2f} < 3")


def test_criterion_09_nonpositivity_detector():
    bath = BathSpec(BathKind.OHMIC, gamma=0.2)
    th = ThermalSpec(kT=0.1)
    sq = np.sqrt(0.15)  # narrow in q; the momentum-diffusion equation dips
    sp_big = 0.5 / sq
    ext_q = 7 * max(sq, sp_big) + 1
    ext_p = 7 * max(sp_big, sq) + 1
    grid = GridSpec(-ext_q, ext_q, -ext_p, ext_p, 256, 256)
    w0 = gaussian_wigner(0.0, 0.0, sq, grid, OSC)
    fired = {}
    det_min = {}
    for lam in (-1, 0):
        cfg = EvolutionConfig(t_final=12.0, lam=lam, dt=0.01)
        traj = evolve_lambda(w0, cfg, bath, OSC, th)
        fired[lam] = traj.uncertainty_violated
        det_min[lam] = traj.uncertainty_min
    ok = fired[-1] and not fired[0]
    _line(9, "pre-master non-positivity detector", ok,
          f"lam=-1 fired (min det {det_min[-1]:.4f} < 0.25); "
          f"lam=0 never fired (min det {det_min[0]:.4f})")


def test_criterion_10_fourier_path_consistency():
    bath = BathSpec(BathKind.OHMIC, gamma=0.25)
    th = ThermalSpec(kT=20.0)
    cat = CatSpec(d=4.0, sigma=1.0)
    s = np.sqrt(occupation_factor(OSC, th) / 2)
    ext = max(9.0, 6.5 * s)
    grid = GridSpec(-ext, ext, -ext, ext, 384, 384)
    w0 = cat_wigner(cat, grid, OSC)
    t_star = 1.0
    tg = np.linspace(0.0, t_star, 501)
    green = green_initial_value(bath, OSC, tg)
    mom = fluctuation_moments(bath, OSC, th, tg, green=green)
    wk = kernel_propagate(w0, bath, OSC, th, t_star, green=green, moments=mom)
    pm = marginal_q(wk)
    pm /= np.trapezoid(pm, wk.q)
    _, pf = probability_density_fourier(cat, bath, OSC, th, t_star, x=wk.q,
                                        green=green, moments=mom)
    dev = np.max(np.abs(pm - pf)) / pf.max()
    _line(10, "Fourier path vs kernel marginal", dev < 1e-3,
          f"max-norm dev {dev:.2e} < 1e-3")
