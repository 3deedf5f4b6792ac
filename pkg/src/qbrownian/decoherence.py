"""Cat-state decoherence: attenuation extraction and closed forms.

The attenuation a(t) is the coefficient of the interference (cosine)
term of the coordinate density divided by twice the geometric mean of
the two packet terms at the fringe location.  It is extracted from
evolved densities by a constrained three-term fit and compared against
the closed forms of the four regimes: initially-cold packet, initially
thermal packet, fully entangled (free particle), and externally driven.
"""

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .baths import BathSpec, OscillatorSpec, ThermalSpec
from .greens import GreenTable
from .quadrature import DriveSpec, commutator_x, driven_msd, mean_square_displacement
from .wigner import CatSpec, WignerGrid, marginal_p

__all__ = [
    "Regime",
    "AttenuationSeries",
    "AttenuationFitError",
    "ValidityWarning",
    "attenuation_from_density",
    "packet_envelope",
    "fit_short_time_law",
    "closed_form_zero_T_initial",
    "closed_form_thermal_initial",
    "closed_form_entangled",
    "closed_form_driven",
    "simulate_attenuation_fourier",
    "make_series",
    "momentum_space_diagnostic",
]


def _like(values, t):
    values = np.asarray(values)
    return float(values.reshape(-1)[0]) if np.ndim(t) == 0 else values.reshape(np.shape(t))


class Regime(Enum):
    ZERO_T_INITIAL = "zero_T_initial"
    THERMAL_INITIAL = "thermal_initial"
    ENTANGLED = "entangled"
    DRIVEN = "driven"


class AttenuationFitError(RuntimeError):
    """Packets merged beyond separability; fringe fit impossible."""


class ValidityWarning(UserWarning):
    """Closed form evaluated outside its stated regime."""


@dataclass
class AttenuationSeries:
    """a(t) samples with the extracted decoherence time.

    tau_d is the first e^{-1} crossing (linear interpolation);
    exponent and tau_d_fit come from the short-time power law
    a = exp{-(t/tau_d_fit)^exponent}.
    """

    times: np.ndarray
    a: np.ndarray
    regime: Regime
    tau_d: Optional[float]
    tau_d_fit: Optional[float]
    exponent: Optional[float]


def fit_short_time_law(times, a, a_window=(0.99, 0.2)):
    """Fit -log a = (t/tau)^p on the early decay window.

    Returns (p, tau); points with a outside (a_window) are ignored.
    """
    t = np.asarray(times, dtype=float)
    av = np.asarray(a, dtype=float)
    keep = (av < a_window[0]) & (av > a_window[1]) & (t > 0)
    if np.count_nonzero(keep) < 3:
        return None, None
    lx = np.log(t[keep])
    ly = np.log(-np.log(av[keep]))
    p, c = np.polyfit(lx, ly, 1)
    tau = np.exp(-c / p)
    return float(p), float(tau)


def _e_crossing(times, a):
    target = np.exp(-1.0)
    below = np.nonzero(np.asarray(a) < target)[0]
    if below.size == 0 or below[0] == 0:
        return None
    i = below[0]
    t0, t1 = times[i - 1], times[i]
    a0, a1 = a[i - 1], a[i]
    return float(t0 + (a0 - target) / (a0 - a1) * (t1 - t0))


def make_series(times, a, regime: Regime) -> AttenuationSeries:
    p, tau_fit = fit_short_time_law(times, a)
    return AttenuationSeries(np.asarray(times, float), np.asarray(a, float),
                             regime, _e_crossing(times, a), tau_fit, p)


def packet_envelope(cat: CatSpec, osc: OscillatorSpec, phi_qq, phi_qp, x2_t):
    """Width and half-separation of the evolved packets.

    phi_qq and phi_qp are the coordinate row of the mean flow (the
    coefficients of q0 and p0 in q(t)).  The packets of the three-term
    density stay Gaussian under the linear dynamics:

        width^2 = (phi_qq sigma)^2 + (phi_qp hbar / 2 sigma)^2 + <X^2>,

    with centers at +- phi_qq d / 2.
    """
    hbar = osc.hbar
    sigma = cat.sigma
    phi_qq = np.asarray(phi_qq, float)
    phi_qp = np.asarray(phi_qp, float)
    w2 = (phi_qq * sigma) ** 2 + (hbar * phi_qp / (2 * sigma)) ** 2 + np.asarray(x2_t, float)
    return np.sqrt(w2), 0.5 * cat.d * np.abs(phi_qq)


def single_packet_width(x, pd):
    """Standard deviation of a single-packet density (the separately
    evolved d = 0 state), used to constrain the three-term fit."""
    x = np.asarray(x, float)
    pd = np.asarray(pd, float)
    norm = np.trapezoid(pd, x)
    mean = np.trapezoid(pd * x, x) / norm
    return float(np.sqrt(np.trapezoid(pd * (x - mean) ** 2, x) / norm))


def attenuation_from_density(x, densities, times, cat: CatSpec, widths, centers,
                             regime: Regime = Regime.ZERO_T_INITIAL,
                             k_guess=None) -> AttenuationSeries:
    """Extract a(t) from a sequence of coordinate densities.

    Fits P(x) = A1 g1 + A2 g2 + B cos(k x) g12 with the packet width
    w(t) and half-separation c(t) constrained from the separately
    evolved single packet; then

        a = B exp{c^2 / 2 w^2} / (2 sqrt(A1 A2)),

    the fringe coefficient over twice the geometric mean of the packet
    terms at the midpoint.  Raises AttenuationFitError with the merge
    time once the packets are no longer separable.
    """
    x = np.asarray(x, dtype=float)
    times = np.asarray(times, dtype=float)
    a_out = np.empty(times.size)
    for j, (pd, w, c) in enumerate(zip(densities, widths, centers)):
        if c < 0.75 * w and cat.d > 4 * cat.sigma:
            raise AttenuationFitError(
                f"packets merged beyond separability at t = {times[j]:g} "
                f"(separation {2 * c:g} < 1.5 x width {w:g})")

        def g(center):
            return np.exp(-((x - center) ** 2) / (2 * w**2)) / np.sqrt(2 * np.pi * w**2)

        g1, g2, g12 = g(-c), g(c), g(0.0)

        def model(xv, a1, a2, b, k):
            return a1 * g1 + a2 * g2 + b * np.cos(k * xv) * g12

        # seed the fit from a packets-only linear solve plus the spectral
        # peak of its residual (the fringe)
        design = np.stack([g1, g2], axis=1)
        (a1_0, a2_0), *_ = np.linalg.lstsq(design, pd, rcond=None)
        resid = pd - design @ [a1_0, a2_0]
        k0, b0 = _fringe_seed(x, resid, g12)
        if k_guess is not None and k_guess[j] is not None:
            k0 = float(k_guess[j])
        p0 = (max(a1_0, 1e-3), max(a2_0, 1e-3), b0, k0)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", OptimizeWarning)
                popt, _ = curve_fit(model, x, pd, p0=p0, maxfev=20000)
        except RuntimeError as exc:
            raise AttenuationFitError(
                f"three-term fit failed at t = {times[j]:g}: {exc}") from exc
        a1, a2, b, k = popt
        if a1 <= 0 or a2 <= 0:
            raise AttenuationFitError(f"non-positive packet amplitudes at t = {times[j]:g}")
        a_out[j] = b * np.exp(c**2 / (2 * w**2)) / (2 * np.sqrt(a1 * a2))
    return make_series(times, a_out, regime)


def _fringe_seed(x, resid, g12):
    """Fringe wavenumber and amplitude from the residual spectrum."""
    n = x.size
    dx = x[1] - x[0]
    spec = np.fft.rfft(resid)
    kax = 2 * np.pi * np.fft.rfftfreq(n, dx)
    i = int(np.argmax(np.abs(spec)))
    k0 = kax[i]
    # b cos(kx) g12 has max ~ b * max(g12); use the residual peak as scale
    b0 = np.max(np.abs(resid)) / max(np.max(g12), 1e-300)
    return max(k0, 1e-3 / (x[-1] - x[0])), max(b0, 1e-12)


def closed_form_zero_T_initial(bath: BathSpec, osc: OscillatorSpec, th: ThermalSpec,
                               cat: CatSpec, t):
    """Ohmic, high T, t << 1/gamma:

        a(t) = exp{- zeta kT d^2 t^3 / (12 m^2 sigma^4 + 3 hbar^2 t^2)}.

    Out-of-regime inputs are flagged with a ValidityWarning, not
    rejected.
    """
    t = np.asarray(t, dtype=float)
    m, hbar = osc.mass, osc.hbar
    zeta, kT = bath.zeta, th.kT
    if bath.gamma > 0 and np.any(t > 0.5 / bath.gamma):
        warnings.warn("closed_form_zero_T_initial used beyond t ~ 1/gamma",
                      ValidityWarning, stacklevel=2)
    if osc.spring_constant > 0 and kT < 10 * hbar * osc.omega0:
        warnings.warn("closed_form_zero_T_initial assumes the high-temperature regime",
                      ValidityWarning, stacklevel=2)
    expo = zeta * kT * cat.d**2 * t**3 / (12 * m**2 * cat.sigma**4 + 3 * hbar**2 * t**2)
    return _like(np.exp(-expo), t)


def closed_form_thermal_initial(osc: OscillatorSpec, th: ThermalSpec, cat: CatSpec, t):
    """Packet initially at the bath temperature (t << 1/gamma):

        a_T(t) = exp{ -(kT/m) t^2 d^2 /
                      [8 (sigma^4 + sigma^2 (kT/m) t^2 + hbar^2 t^2 / 4 m^2)] },

    independent of the bath parameters (decoherence without dissipation).
    """
    t = np.asarray(t, dtype=float)
    m, hbar = osc.mass, osc.hbar
    vbar2 = th.kT / m
    num = vbar2 * t**2 * cat.d**2
    den = 8.0 * (cat.sigma**4 + cat.sigma**2 * vbar2 * t**2 + hbar**2 * t**2 / (4 * m**2))
    return _like(np.exp(-num / den), t)


def closed_form_entangled(bath: BathSpec, osc: OscillatorSpec, th: ThermalSpec,
                          cat: CatSpec, t):
    """Free particle entangled with the bath at all times:

        a(t) = exp{- s(t) d^2 / (8 sigma^2 w^2(t))},
        w^2(t) = sigma^2 + s(t) + c(t)^2 / (4 sigma^2),

    with s(t) the stationary mean-square displacement and i c(t) the
    position commutator.  Exact in temperature and damping.
    """
    if osc.spring_constant != 0:
        raise ValueError("the entangled closed form is for the free particle (K = 0)")
    t = np.asarray(t, dtype=float)
    s = np.asarray(mean_square_displacement(bath, osc, th, t))
    comm = np.asarray(commutator_x(bath, osc, t))
    w2 = cat.sigma**2 + s + comm**2 / (4 * cat.sigma**2)
    return _like(np.exp(-s * cat.d**2 / (8 * cat.sigma**2 * w2)), t)


def closed_form_driven(drive: DriveSpec, green: GreenTable, cat: CatSpec, t):
    """Random or deterministic external force:

        a(t) = exp{- s_d(t) d^2 / (8 sigma^2 [sigma^2 + s_d(t)])}.
    """
    t = np.asarray(t, dtype=float)
    sd = np.asarray(driven_msd(drive, green, t))
    return _like(np.exp(-sd * cat.d**2 / (8 * cat.sigma**2 * (cat.sigma**2 + sd))), t)


def simulate_attenuation_fourier(cat: CatSpec, bath: BathSpec, osc: OscillatorSpec,
                                 th: ThermalSpec, times, initial_kT: float = 0.0,
                                 x=None, green=None, moments=None,
                                 regime: Regime = Regime.ZERO_T_INITIAL,
                                 allow_low_temperature: bool = False) -> AttenuationSeries:
    """Full simulated-attenuation pipeline.

    Evolves the cat density through the Fourier representation, runs the
    single-packet envelope alongside, and extracts a(t) with the
    constrained three-term fit.
    """
    from .evolve import probability_density_fourier
    from .greens import green_initial_value
    from .quadrature import fluctuation_moments

    times = np.asarray(times, dtype=float)
    t_max = float(times.max())
    if green is None:
        n = max(301, 8 * times.size + 1)
        green = green_initial_value(bath, osc, np.linspace(0.0, t_max, n))
    if moments is None and bath.gamma > 0:
        moments = fluctuation_moments(bath, osc, th, green.times, green=green,
                                      allow_low_temperature=allow_low_temperature)

    flows = [np.eye(2) if t == 0.0 else green.mean_flow(t) for t in times]
    x2 = np.zeros(times.size)
    if moments is not None:
        x2 += np.interp(times, moments.times, moments.xx)
    if initial_kT > 0:
        g_at = np.interp(times, green.times, green.g)
        x2 += osc.mass * initial_kT * g_at**2
    widths, centers, k_guess = [], [], []
    for fl, x2t in zip(flows, x2):
        w, c = packet_envelope(cat, osc, fl[0, 0], fl[0, 1], x2t)
        widths.append(float(w))
        centers.append(float(c))
        k_guess.append(osc.hbar * cat.d * abs(fl[0, 1]) / (4 * cat.sigma**2 * float(w) ** 2))
    if x is None:
        x_half = max(0.5 * cat.d * abs(fl[0, 0]) + 8.0 * w for fl, w in zip(flows, widths))
        x = np.linspace(-x_half, x_half, 1501)
    densities = [probability_density_fourier(cat, bath, osc, th, t, x=x, green=green,
                                             moments=moments, initial_kT=initial_kT,
                                             allow_low_temperature=allow_low_temperature)[1]
                 for t in times]
    return attenuation_from_density(x, densities, times, cat, widths, centers, regime,
                                    k_guess=k_guess)


def momentum_space_diagnostic(frames, cat: CatSpec, osc: OscillatorSpec):
    """Fringe contrast of the momentum marginal over a trajectory.

    Tracks the cos(p d / hbar) modulation amplitude of marginal_p,
    normalized so a pure cat gives 1; the p grid must resolve the
    fringe.
    """
    hbar = osc.hbar
    d = cat.d
    norm = 2.0 * (1.0 + np.exp(-d**2 / (8 * cat.sigma**2)))
    out = np.empty(len(frames))
    for j, fr in enumerate(frames):
        if isinstance(fr, WignerGrid):
            pp = marginal_p(fr)
            p = fr.p
        else:
            p, pp = fr
        if p[1] - p[0] > 2 * np.pi * hbar / d / 8.0:
            raise ValueError("p grid does not resolve the fringe wavelength")
        out[j] = norm * np.abs(np.trapezoid(pp * np.exp(1j * p * d / hbar), p))
    return out
