"""Green functions of the damped oscillator, by two independent routes.

green_stationary inverts the susceptibility alpha(omega) spectrally
(closed form for Ohmic baths, damped-contour FFT otherwise), while
green_initial_value integrates the homogeneous memory equation

    m G'' + int_0^t mu(t-s) G'(s) ds + K G = 0,  G(0)=0, G'(0)=1/m

directly in the time domain.  Both construct the same function, which is
what the agreement tests exploit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .baths import BathKind, BathSpec, OscillatorSpec, memory_fourier

__all__ = ["GreenTable", "VolterraError", "CausalityError", "green_stationary", "green_initial_value"]


class VolterraError(RuntimeError):
    """Signals a step-size / stability failure of the Volterra integrator."""


class CausalityError(RuntimeError):
    """Spectral inversion produced non-negligible weight at t < 0."""


@dataclass
class GreenTable:
    """G(t), G'(t), G''(t) sampled on a uniform grid of t >= 0."""

    times: np.ndarray
    g: np.ndarray
    gdot: np.ndarray
    gddot: np.ndarray
    bath: BathSpec = None
    osc: OscillatorSpec = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def spline(self) -> CubicSpline:
        return CubicSpline(self.times, self.g)

    def gdot_spline(self) -> CubicSpline:
        return CubicSpline(self.times, self.gdot)

    def gddot_spline(self) -> CubicSpline:
        return CubicSpline(self.times, self.gddot)

    def mean_map(self, t):
        """Phase-space map M(t) of the initial-value means in (q, p) order:

            q(t) = m G'(t) q0 + G(t) p0
            p(t) = m^2 G''(t) q0 + m G'(t) p0
        """
        m = self.osc.mass
        g = self.spline()(t)
        gd = self.gdot_spline()(t)
        gdd = self.gddot_spline()(t)
        return np.array([[m * gd, g], [m * m * gdd, m * gd]])

    def mean_flow(self, t):
        """Slip-free mean propagator Phi(t) = M(t) M(0+)^{-1}.

        For finite-memory baths M(0) is the identity and Phi = M; for the
        strict Ohmic (delta-memory) limit M(0+) carries the instantaneous
        momentum slip p -> p - m gamma q of the just-switched-on
        coupling, which the local-in-time equation cannot represent, so
        the flow from the identity is the consistent propagator.
        """
        m0 = self.mean_map(float(self.times[0]))
        return self.mean_map(t) @ np.linalg.inv(m0)


def _check_grid(t_grid, from_zero=False):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("t_grid must be a 1-d array with at least two points")
    dt = np.diff(t)
    if t[0] < 0 or np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9):
        raise ValueError("t_grid must be uniform, increasing and start at t >= 0")
    if from_zero and t[0] != 0.0:
        raise ValueError("this operation needs a grid starting at t = 0")
    return t


def _ohmic_closed_form(gamma, osc: OscillatorSpec, t):
    """G = exp(-gamma t/2) sin(w1 t)/(m w1), w1 = sqrt(w0^2 - gamma^2/4).

    Complex w1 covers the overdamped case; K = 0 and gamma = 0 are taken
    as explicit limits.
    """
    t = np.asarray(t, dtype=float)
    m, k = osc.mass, osc.spring_constant
    if k == 0.0:
        if gamma == 0.0:
            return t / m, np.full_like(t, 1.0 / m), np.zeros_like(t)
        g = -np.expm1(-gamma * t) / (m * gamma)
        gdot = np.exp(-gamma * t) / m
        return g, gdot, -gamma * gdot
    w0sq = k / m
    if gamma == 0.0:
        w0 = np.sqrt(w0sq)
        return np.sin(w0 * t) / (m * w0), np.cos(w0 * t) / m, -w0 * np.sin(w0 * t) / m
    w1 = np.sqrt(complex(w0sq - 0.25 * gamma**2))
    env = np.exp(-0.5 * gamma * t)
    if abs(w1) < 1e-14 * gamma:  # critically damped
        g = env * t / m
        gdot = env * (1.0 - 0.5 * gamma * t) / m
    else:
        s = np.sin(w1 * t) / w1
        g = (env * s).real / m
        gdot = (env * (np.cos(w1 * t) - 0.5 * gamma * s)).real / m
    gddot = -(gamma * gdot + w0sq * g)
    return g, gdot, gddot


def green_stationary(bath: BathSpec, osc: OscillatorSpec, t_grid,
                     causality_tol: float = 1e-6) -> GreenTable:
    """Green function from the spectral representation of alpha.

    G(t) = (1/2 pi) int dw alpha(w + i0+) e^{-iwt}.  Ohmic baths use the
    closed form; otherwise a damped-contour FFT inversion is applied to
    alpha minus a matched Ohmic reference (whose inverse is known), which
    keeps the sampled spectrum short-tailed.  The residual weight on
    t < 0 is checked against `causality_tol` relative to the peak.
    """
    t = _check_grid(t_grid)
    if bath.gamma == 0.0 and osc.spring_constant == 0.0:
        raise ValueError("spectral inversion is ill-posed for gamma = 0 and K = 0")
    if bath.kind is BathKind.OHMIC:
        g, gdot, gddot = _ohmic_closed_form(bath.gamma, osc, t)
        return GreenTable(t, g, gdot, gddot, bath, osc)

    m, k = osc.mass, osc.spring_constant
    w_scale = max(osc.omega0, bath.gamma, 1.0 / bath.tau)
    t_max = t[-1] if t[-1] > 0 else 1.0 / w_scale
    dt_f = min(t[1] - t[0], 0.01 / w_scale)
    n = 1 << int(np.ceil(np.log2(max(8 * t_max / dt_f, 16384))))
    dt_f = 8 * max(t_max, 2.0 / w_scale) / n
    big_t = n * dt_f
    eps = 12.0 / big_t
    dw = 2 * np.pi / big_t
    w = (np.arange(n) - n // 2) * dw
    z = w + 1j * eps
    mu = memory_fourier(bath, z)
    alpha = 1.0 / (-m * z**2 - 1j * z * mu + k)
    alpha_ref = 1.0 / (-m * z**2 - 1j * z * bath.mass * bath.gamma + k)
    resid_spec = alpha - alpha_ref  # decays ~ w^-3, safe to taper
    edge = int(0.15 * n)
    taper = np.ones(n)
    ramp = 0.5 * (1 - np.cos(np.pi * np.arange(edge) / edge))
    taper[:edge] = ramp
    taper[-edge:] = ramp[::-1]
    t_f = np.arange(n // 2) * dt_f
    phase = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)

    def invert(spectrum):
        vals = (dw / (2 * np.pi)) * phase * np.fft.fft(spectrum * taper)
        pos = (vals[: n // 2] * np.exp(eps * t_f)).real
        neg = (vals[n // 2:] * np.exp(eps * (np.arange(n // 2, n) * dt_f - big_t))).real
        return pos, neg

    g_res_pos, g_res_neg = invert(resid_spec)
    g_ref, gd_ref, _ = _ohmic_closed_form(bath.gamma, osc, t_f)
    g_fine = g_ref + g_res_pos
    peak = np.max(np.abs(g_fine))
    resid = np.max(np.abs(g_res_neg)) / peak if peak > 0 else 0.0
    if resid > causality_tol:
        raise CausalityError(
            f"|G| on t < 0 is {resid:.2e} of the peak (tol {causality_tol:g}); "
            "the spectral inversion did not converge")
    gd_res_pos, _ = invert(-1j * z * resid_spec)
    gd_fine = gd_ref + gd_res_pos

    g = CubicSpline(t_f, g_fine)(t)
    gdot = CubicSpline(t_f, gd_fine)(t)
    # m G'' = -K G - (mu * G')(t); exponential kernel, cumulative trapezoid
    kern = bath.memory_kernel(t_f)
    conv = _exp_kernel_convolve(kern, gd_fine, dt_f)
    gddot = (-k * g - CubicSpline(t_f, conv)(t)) / m
    return GreenTable(t, g, gdot, gddot, bath, osc)


def _exp_kernel_convolve(kern, f, dt):
    """Trapezoid of int_0^t kern(t-s) f(s) ds for exponential kern."""
    from scipy.signal import lfilter

    k0 = kern[0]
    decay = kern[1] / k0 if k0 != 0 else 0.0
    n = f.size
    hist = lfilter([0.0, dt * k0 * decay], [1.0, -decay], f)
    hist -= 0.5 * dt * k0 * f[0] * decay ** np.arange(n)  # t = 0 node weight 1/2
    out = hist + 0.5 * dt * k0 * f
    out[0] = 0.0
    return out


def _volterra_product_integration(bath, osc, t_final, h):
    """Fixed-step trapezoidal product integration of the memory equation.

    Heun predictor-corrector in (G, G'); the convolution
    I(t) = int_0^t mu(t-s) G'(s) ds carries trapezoid weights, and the
    exponential kernel lets the weighted history advance in O(1).
    """
    m, k = osc.mass, osc.spring_constant
    mu0 = bath.mass * bath.gamma / bath.tau
    decay = np.exp(-h / bath.tau)
    n = int(round(t_final / h)) + 1
    g = np.zeros(n)
    v = np.zeros(n)
    acc = np.zeros(n)
    v[0] = 1.0 / m
    acc[0] = 0.0  # I(0) = 0 and G(0) = 0
    hist = 0.0    # weighted history sum, nodes 0..i-1 of I(t_i)
    bound = 1e3 / (m * max(osc.omega0, bath.gamma))
    for i in range(n - 1):
        a_i = acc[i]
        gp = g[i] + h * v[i]
        vp = v[i] + h * a_i
        w_i = 0.5 if i == 0 else 1.0  # t = 0 keeps its boundary weight
        hist = decay * (hist + w_i * h * mu0 * v[i])
        i_pred = hist + 0.5 * h * mu0 * vp
        a_pred = (-k * gp - i_pred) / m
        v[i + 1] = v[i] + 0.5 * h * (a_i + a_pred)
        g[i + 1] = g[i] + 0.5 * h * (v[i] + v[i + 1])
        i_cur = hist + 0.5 * h * mu0 * v[i + 1]
        acc[i + 1] = (-k * g[i + 1] - i_cur) / m
        if not np.isfinite(g[i + 1]) or abs(g[i + 1]) > bound:
            raise VolterraError(f"Volterra integration unstable at t = {(i + 1) * h:g} (h = {h:g})")
    return g, v, acc


def green_initial_value(bath: BathSpec, osc: OscillatorSpec, t_grid,
                        richardson: bool = True) -> GreenTable:
    """Time-domain solution of the homogeneous memory equation.

    Ohmic baths have a local kernel and are integrated as a plain ODE to
    tight tolerance; single-relaxation-time baths go through trapezoidal
    product integration with Richardson extrapolation (h and h/2).
    The grid must start at t = 0.
    """
    t = _check_grid(t_grid, from_zero=True)
    m, k = osc.mass, osc.spring_constant

    if bath.kind is BathKind.OHMIC:
        gamma = bath.gamma

        def rhs(_t, y):
            return [y[1], (-k * y[0] - m * gamma * y[1]) / m]

        sol = solve_ivp(rhs, (0.0, t[-1]), [0.0, 1.0 / m], t_eval=t,
                        method="DOP853", rtol=1e-12, atol=1e-14)
        if not sol.success:
            raise VolterraError(f"ODE integration failed: {sol.message}")
        g, gdot = sol.y
        gddot = (-k * g - m * gamma * gdot) / m
        return GreenTable(t, g, gdot, gddot, bath, osc)

    w_scale = max(osc.omega0, bath.gamma, 1.0 / bath.tau)
    dt_grid = t[1] - t[0]
    refine = max(1, int(np.ceil(dt_grid * w_scale / 0.02)))
    h = dt_grid / refine
    g1, v1, a1 = _volterra_product_integration(bath, osc, t[-1], h)
    if richardson:
        g2, v2, a2 = _volterra_product_integration(bath, osc, t[-1], h / 2)
        g = (4 * g2[::2] - g1) / 3.0
        v = (4 * v2[::2] - v1) / 3.0
        a = (4 * a2[::2] - a1) / 3.0
    else:
        g, v, a = g1, v1, a1
    idx = np.arange(t.size) * refine
    return GreenTable(t, g[idx], v[idx], a[idx], bath, osc)
