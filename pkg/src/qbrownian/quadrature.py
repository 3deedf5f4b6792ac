"""Fluctuation-dissipation quadratures and driven mean-square displacements.

All stationary-process integrals share the structure

    pref * int_0^wmax  Im alpha(w + i0+) * coth(hbar w / 2kT) * trig(w t) dw

with a hard cutoff wmax = 50 * max(omega0, gamma, 1/tau); the neglected
tail is bounded by the 1/(m w^2) decay of Im alpha.  Oscillatory weights
use panel-wise adaptive quadrature with explicit cos/sin weighting.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .baths import BathKind, BathSpec, OscillatorSpec, ThermalSpec, coth, imag_response, memory_fourier
from .greens import GreenTable, green_initial_value

__all__ = [
    "QuadratureError",
    "LowTemperatureError",
    "DriveKind",
    "DriveSpec",
    "FluctuationMoments",
    "CorrelationFunctions",
    "omega_cutoff",
    "position_autocorrelation",
    "mean_square_displacement",
    "commutator_x",
    "fluctuation_moments",
    "driven_msd",
    "correlation_functions",
]


class QuadratureError(RuntimeError):
    """Tail or panel integration failed to converge."""


class LowTemperatureError(ValueError):
    """Initially-uncoupled fluctuation moments requested below the
    high-temperature regime they are valid in.

    The decoupled-initial-state moments inherit a zero-point divergence
    from the bath that no cutoff removes; results are a modeling limit,
    not a numerical artifact.  Pass allow_low_temperature=True to
    proceed anyway.
    """


class DriveKind(Enum):
    NONE = "none"
    DETERMINISTIC = "deterministic"
    DELTA_RANDOM = "delta_random"


@dataclass(frozen=True)
class DriveSpec:
    """External c-number force.

    DETERMINISTIC carries the force f(t) and, when used in driven_msd,
    its autocorrelation g(dt); DELTA_RANDOM carries the white-noise
    strength <f(t)f(t')> = strength * delta(t - t').
    """

    kind: DriveKind = DriveKind.NONE
    force: Optional[Callable] = None
    autocorr: Optional[Callable] = None
    strength: float = 0.0

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("drive strength must be >= 0")
        if self.kind is DriveKind.DELTA_RANDOM and self.strength == 0.0:
            raise ValueError("delta-correlated drive needs strength > 0")


def omega_cutoff(bath: BathSpec, osc: OscillatorSpec) -> float:
    scales = [osc.omega0, bath.gamma]
    if bath.kind is BathKind.SINGLE_RELAXATION_TIME:
        scales.append(1.0 / bath.tau)
    top = max(scales)
    if top <= 0:
        raise ValueError("no frequency scale: need omega0 > 0 or gamma > 0")
    return 50.0 * top


def _coth_factor(osc, th, w):
    if th.kT == 0.0:
        return np.ones_like(np.asarray(w, dtype=float))
    return coth(osc.hbar * np.asarray(w, dtype=float) / (2.0 * th.kT))


def _panels(bath, osc, a, b):
    """Split [a, b] so the resonance of Im alpha sits on panel edges."""
    pts = [a, b]
    if osc.spring_constant > 0 and bath.gamma > 0:
        w0 = osc.omega0
        for x in (w0 - 6 * bath.gamma, w0 - bath.gamma, w0 + bath.gamma, w0 + 6 * bath.gamma):
            if a < x < b:
                pts.append(x)
    return np.array(sorted(set(pts)))


def _osc_quad(f, a, b, t, kind):
    """int_a^b f(w) * trig(w t) dw with trig = cos or sin; (value, err)."""
    if a >= b:
        return 0.0, 0.0
    if t == 0.0:
        if kind == "sin":
            return 0.0, 0.0
        return quad(f, a, b, limit=400, epsabs=0.0, epsrel=1e-10)
    if abs(t) * (b - a) < 8.0 * np.pi:
        trig = np.cos if kind == "cos" else np.sin
        return quad(lambda w: f(w) * trig(w * t), a, b, limit=400, epsabs=0.0, epsrel=1e-10)
    return quad(f, a, b, weight=kind, wvar=t, limit=2000, epsabs=0.0, epsrel=1e-10)


def _weighted_integral(bath, osc, th, t, kind, pref):
    """pref * int_0^wmax Im(alpha) coth trig(wt), panel by panel."""
    wmax = omega_cutoff(bath, osc)

    def f(w):
        return imag_response(bath, osc, w) * _coth_factor(osc, th, w)

    if kind == "one_minus_cos" and t == 0.0:
        return 0.0
    lo = 0.0
    total = 0.0
    err_sum = 0.0
    ref = 0.0
    if osc.spring_constant == 0.0:
        # Im(alpha)*coth ~ 1/w^2 at the origin; keep the curing trig
        # factor explicit on a first non-oscillatory panel
        lo = min(max(bath.gamma, 1e-3 * wmax), wmax / 10)
        if t != 0.0:
            lo = min(lo, 6.0 * np.pi / abs(t))
        if kind == "one_minus_cos":
            val, err = quad(lambda w: f(w) * 2.0 * np.sin(0.5 * w * t) ** 2, 0.0, lo,
                            limit=400, epsabs=0.0, epsrel=1e-10)
        elif kind == "sin":
            val, err = quad(lambda w: f(w) * np.sin(w * t), 0.0, lo,
                            limit=400, epsabs=0.0, epsrel=1e-10)
        else:
            raise ValueError("cos-kernel integrals are ill-posed for K = 0")
        total += val
        err_sum += err
        ref = max(ref, abs(val))
    edges = list(_panels(bath, osc, lo, wmax))
    # geometric extension panels: beyond the feature cutoff the integrand
    # is the bare power-law tail of Im alpha, cheap to integrate and
    # negligible past 64 wmax
    edges += [4.0 * wmax, 16.0 * wmax, 64.0 * wmax]
    for x0, x1 in zip(edges[:-1], edges[1:]):
        if kind == "cos" or kind == "sin":
            val, err = _osc_quad(f, x0, x1, t, kind)
        else:  # one_minus_cos
            v0, e0 = _osc_quad(f, x0, x1, 0.0, "cos")
            v1, e1 = _osc_quad(f, x0, x1, t, "cos")
            val, err = v0 - v1, e0 + e1
        total += val
        err_sum += err
        ref = max(ref, abs(val))
    if not np.isfinite(total) or err_sum > 0.01 * abs(total) + 1e-10 * ref + 1e-300:
        raise QuadratureError(
            f"quadrature did not converge (value {total:.3e}, error sum {err_sum:.1e})")
    return pref * total


def position_autocorrelation(bath: BathSpec, osc: OscillatorSpec, th: ThermalSpec, t):
    """C0(t) = (hbar/pi) int_0^inf Im alpha coth(hbar w/2kT) cos(wt) dw.

    Defined for K > 0 (the integral diverges for the free particle).
    gamma = 0 reduces to the undamped oscillator closed form.
    """
    if osc.spring_constant <= 0:
        raise ValueError("position autocorrelation needs K > 0")
    scalar = np.isscalar(t)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if bath.gamma == 0.0:
        w0 = osc.omega0
        fac = osc.hbar / (2 * osc.mass * w0) * _coth_factor(osc, th, w0)
        out = fac * np.cos(w0 * t_arr)
    else:
        pref = osc.hbar / np.pi
        out = np.array([_weighted_integral(bath, osc, th, abs(ti), "cos", pref) for ti in t_arr])
    return float(out[0]) if scalar else out


def mean_square_displacement(bath: BathSpec, osc: OscillatorSpec, th: ThermalSpec, t):
    """s(t) = (2 hbar/pi) int Im alpha coth (1 - cos wt) dw.

    For K > 0 this equals 2[C0(0) - C0(t)]; for the free particle the
    integrable 1/w^2 origin is handled on a dedicated panel.
    """
    if bath.gamma == 0.0 and osc.spring_constant == 0.0:
        raise ValueError("mean-square displacement needs gamma > 0 or K > 0")
    scalar = np.isscalar(t)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if bath.gamma == 0.0:
        c0 = position_autocorrelation(bath, osc, th, 0.0)
        out = 2.0 * (c0 - np.asarray(position_autocorrelation(bath, osc, th, t_arr)))
    else:
        pref = 2.0 * osc.hbar / np.pi
        out = np.array([_weighted_integral(bath, osc, th, abs(ti), "one_minus_cos", pref)
                        for ti in t_arr])
    return float(out[0]) if scalar else out


def commutator_x(bath: BathSpec, osc: OscillatorSpec, t):
    """c(t) with [x(t), x(0)] = i c(t):

        c(t) = (2 hbar/pi) int_0^inf Im alpha sin(wt) dw,

    temperature independent.  gamma = 0 uses the exact undamped
    commutator (hbar sin(w0 t)/(m w0), or hbar t/m for K = 0).
    """
    scalar = np.isscalar(t)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if bath.gamma == 0.0:
        if osc.spring_constant == 0.0:
            out = osc.hbar * t_arr / osc.mass
        else:
            w0 = osc.omega0
            out = osc.hbar * np.sin(w0 * t_arr) / (osc.mass * w0)
    else:
        th0 = ThermalSpec(kT=0.0)
        pref = 2.0 * osc.hbar / np.pi
        out = np.array([np.sign(ti) * _weighted_integral(bath, osc, th0, abs(ti), "sin", pref)
                        for ti in t_arr])
    return float(out[0]) if scalar else out


@dataclass
class FluctuationMoments:
    """Second moments of the fluctuating position X(t) = int G F.

    xx = <X^2>, vv = <Xdot^2>, xv = <X Xdot + Xdot X>/2, with the time
    derivatives of vv and xv carried along for coefficient extraction.
    a_matrix(i) is the transition-kernel dyadic in (p, q) ordering:

        [[m^2 vv,  m xv], [m xv,  xx]]
    """

    times: np.ndarray
    xx: np.ndarray
    vv: np.ndarray
    xv: np.ndarray
    vv_dot: np.ndarray
    xv_dot: np.ndarray
    osc: OscillatorSpec

    def a_matrix(self, i: int) -> np.ndarray:
        m = self.osc.mass
        return np.array([[m * m * self.vv[i], m * self.xv[i]],
                         [m * self.xv[i], self.xx[i]]])

    def a_matrix_qp(self, i: int) -> np.ndarray:
        """Same dyadic in (q, p) ordering."""
        m = self.osc.mass
        return np.array([[self.xx[i], m * self.xv[i]],
                         [m * self.xv[i], m * m * self.vv[i]]])

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t:g} is not on the moments grid")
        return i


@dataclass
class CorrelationFunctions:
    """Bundle of the stationary-process correlation tables."""

    times: np.ndarray
    c0: Optional[np.ndarray]
    s: np.ndarray
    comm: np.ndarray
    sd: Optional[np.ndarray]


def _coth_minus_classical(x):
    """coth(x) - 1/x, series below x = 1e-2."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-2
    xs = x[small]
    out[small] = xs / 3.0 - xs**3 / 45.0
    out[~small] = 1.0 / np.tanh(x[~small]) - 1.0 / x[~small]
    return out


def fluctuation_moments(bath: BathSpec, osc: OscillatorSpec, th: ThermalSpec, t_grid,
                        allow_low_temperature: bool = False,
                        n_omega: Optional[int] = None,
                        green: Optional[GreenTable] = None) -> FluctuationMoments:
    """Noise moments <X^2>, <Xdot^2>, <X Xdot>_sym on t_grid.

    The double time integral of G G kappa is split into the classical
    part (kappa_cl = kT mu(|t - t'|)), which reduces to running
    one-dimensional integrals of G and its memory convolution and is
    evaluated exactly in the time domain, plus the quantum correction,
    evaluated in frequency space with the spectral weight
    Re mu(w) w [coth(hbar w/2kT) - 2kT/hbar w]:

        <X^2>_qc(t) = (hbar/pi) int dw weight(w) |Z(w,t)|^2,
        Z(w,t) = int_0^t G(u) e^{iwu} du.

    Valid in the high-temperature regime; below kT = hbar*omega0 a
    LowTemperatureError is raised unless explicitly overridden (the
    neglected zero-point tail beyond the cutoff is a modeling limit of
    the decoupled initial state, not a numerical artifact).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2 or t[0] != 0.0:
        raise ValueError("moments grid must start at t = 0 with at least two points")
    hbar = osc.hbar
    if th.kT < hbar * osc.omega0 and not allow_low_temperature:
        raise LowTemperatureError(
            f"kT = {th.kT:g} < hbar*omega0 = {hbar * osc.omega0:g}: the decoupled "
            "initial state makes these moments diverge with the cutoff at low "
            "temperature; pass allow_low_temperature=True to override")

    wmax = omega_cutoff(bath, osc)
    dt_grid = t[1] - t[0]
    refine = max(1, int(np.ceil(dt_grid * wmax / 0.4)))
    n_u = (t.size - 1) * refine + 1
    u = np.linspace(t[0], t[-1], n_u)
    if green is None or green.times.size != n_u or not np.allclose(green.times, u):
        green = green_initial_value(bath, osc, u)
    g, gdot = green.g, green.gdot
    t_idx = np.arange(t.size) * refine
    du = u[1] - u[0]
    g_t = g[t_idx]
    gd_t = gdot[t_idx]

    kT = th.kT
    if kT > 0:
        if bath.kind is BathKind.OHMIC:
            mu_g = bath.zeta * g
            mu_gd = bath.zeta * gdot
        else:
            from .greens import _exp_kernel_convolve
            kern = bath.memory_kernel(u)
            mu_g = _exp_kernel_convolve(kern, g, du)
            mu_gd = _exp_kernel_convolve(kern, gdot, du)
        xx = 2.0 * kT * _cumtrapz(g * mu_g, du)[t_idx]
        vv = 2.0 * kT * _cumtrapz(gdot * mu_gd, du)[t_idx]
        xv = kT * _cumtrapz(g * mu_gd + gdot * mu_g, du)[t_idx]
        vv_dot = 2.0 * kT * (gdot * mu_gd)[t_idx]
        xv_dot = kT * (g * mu_gd + gdot * mu_g)[t_idx]
    else:
        nt = t.size
        xx, vv, xv = np.zeros(nt), np.zeros(nt), np.zeros(nt)
        vv_dot, xv_dot = np.zeros(nt), np.zeros(nt)

    # quantum correction in frequency space
    gamma_scale = bath.gamma if bath.gamma > 0 else wmax / 50.0
    t_span = max(t[-1], 1e-12)
    dw = min(2 * np.pi / (8.0 * t_span), gamma_scale / 10.0)
    n_w = int(np.ceil(wmax / dw)) if n_omega is None else int(n_omega)
    n_w = min(max(n_w, 400), 200_000)
    dw = wmax / n_w
    w = (np.arange(n_w) + 0.5) * dw
    mu_re = memory_fourier(bath, w + 0j).real
    if kT > 0:
        qc = _coth_minus_classical(hbar * w / (2.0 * kT))
    else:
        qc = np.ones_like(w)
    weight = (hbar / np.pi) * mu_re * w * qc * dw

    chunk = max(1, int(1_000_000 / max(n_u, 1)))
    for lo in range(0, n_w, chunk):
        hi = min(lo + chunk, n_w)
        e = np.exp(1j * np.outer(w[lo:hi], u))
        zg = _cumtrapz_cols(g[None, :] * e, du)[:, t_idx]
        zv = _cumtrapz_cols(gdot[None, :] * e, du)[:, t_idx]
        wt = weight[lo:hi]
        xx += wt @ (zg.real**2 + zg.imag**2)
        vv += wt @ (zv.real**2 + zv.imag**2)
        xv += wt @ (zg.real * zv.real + zg.imag * zv.imag)
        e_t = e[:, t_idx]
        dzv = gd_t[None, :] * e_t
        dzg = g_t[None, :] * e_t
        vv_dot += wt @ (2.0 * (zv.real * dzv.real + zv.imag * dzv.imag))
        xv_dot += wt @ (dzg.real * zv.real + dzg.imag * zv.imag
                        + zg.real * dzv.real + zg.imag * dzv.imag)
    return FluctuationMoments(t, xx, vv, xv, vv_dot, xv_dot, osc)


def _cumtrapz(a, dx):
    out = np.zeros_like(a)
    np.cumsum((a[1:] + a[:-1]) * (0.5 * dx), out=out[1:])
    return out


def _cumtrapz_cols(a, dx):
    out = np.zeros_like(a)
    np.cumsum((a[:, 1:] + a[:, :-1]) * (0.5 * dx), axis=1, out=out[:, 1:])
    return out


def driven_msd(drive: DriveSpec, green: GreenTable, t):
    """Mean-square displacement driven by the external force,

        s_d(t) = int_0^t int_0^t G(t-a) G(t-b) <f(a) f(b)> da db.

    Delta-correlated forces collapse this to strength * int_0^t G^2(u) du
    (adaptive quadrature on the spline of the tabulated G); deterministic
    drives with a known autocorrelation go through the double integral.
    """
    scalar = np.isscalar(t)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0) or np.any(t_arr > green.times[-1] * (1 + 1e-12)):
        raise ValueError("requested time outside the Green table")
    if drive.kind is DriveKind.NONE:
        out = np.zeros_like(t_arr)
    elif drive.kind is DriveKind.DELTA_RANDOM:
        gs = green.spline()
        out = np.array([
            drive.strength * quad(lambda uu: gs(uu) ** 2, 0.0, ti,
                                  limit=400, epsabs=1e-14, epsrel=1e-11)[0]
            for ti in t_arr])
    else:
        if drive.autocorr is None:
            raise ValueError("deterministic drive needs an autocorrelation for driven_msd")
        gs = green.spline()
        out = np.empty_like(t_arr)
        for j, ti in enumerate(t_arr):
            n = 512
            a = np.linspace(0.0, ti, n)
            gg = gs(ti - a)
            corr = drive.autocorr(a[:, None] - a[None, :])
            out[j] = np.trapezoid(np.trapezoid(gg[:, None] * gg[None, :] * corr, a, axis=1), a)
    return float(out[0]) if scalar else out


def correlation_functions(bath: BathSpec, osc: OscillatorSpec, th: ThermalSpec, t_grid,
                          drive: Optional[DriveSpec] = None,
                          green: Optional[GreenTable] = None) -> CorrelationFunctions:
    """Convenience bundle of C0, s, commutator (and s_d when driven)."""
    t = np.asarray(t_grid, dtype=float)
    c0 = position_autocorrelation(bath, osc, th, t) if osc.spring_constant > 0 else None
    s = mean_square_displacement(bath, osc, th, t)
    comm = commutator_x(bath, osc, t)
    sd = None
    if drive is not None and drive.kind is not DriveKind.NONE:
        if green is None:
            green = green_initial_value(bath, osc, t)
        sd = driven_msd(drive, green, t)
    return CorrelationFunctions(t, c0, s, comm, sd)
