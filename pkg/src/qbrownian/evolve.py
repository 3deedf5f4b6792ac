"""Time evolution of Wigner distributions.

Three routes onto the same dynamics:

* evolve_lambda -- the constant-coefficient family selected by
  lambda = -1, 0, +1 (coordinate pre-master / master / momentum
  pre-master), split-step integrated;
* evolve_hpz -- the exact local-in-time equation with coefficients
  2 Gamma(t), Omega^2(t), d_pp(t), d_qp(t) derived from Green-function
  data by hpz_coefficients;
* kernel_propagate -- one-shot application of the Gaussian transition
  kernel built from the mean map M(t) and the noise dyadic A(t).

The split scheme follows the drift exactly (the drift plus friction
sub-operator is an affine flow, handled by semi-Lagrangian interpolation
along characteristics with the exact Jacobian factor) and treats
diffusion by explicit central differences with sub-stepping.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import ndimage
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from .baths import BathKind, BathSpec, OscillatorSpec, ThermalSpec, occupation_factor
from .greens import GreenTable, green_initial_value
from .quadrature import DriveKind, DriveSpec, FluctuationMoments, fluctuation_moments
from .wigner import CatSpec, WignerGrid

__all__ = [
    "EvolutionConfig",
    "HPZCoefficients",
    "WignerTrajectory",
    "StabilityError",
    "MassConservationError",
    "WronskianError",
    "evolve_lambda",
    "hpz_coefficients",
    "evolve_hpz",
    "kernel_propagate",
    "probability_density_fourier",
]


class StabilityError(RuntimeError):
    """Evolution produced non-finite values or blew past its bounds."""


class MassConservationError(RuntimeError):
    """Normalization drifted or probability leaked through the grid edge."""


class WronskianError(RuntimeError):
    """The two homogeneous solutions degenerated; no local coefficients."""


@dataclass(frozen=True)
class EvolutionConfig:
    """Scheme parameters shared by the PDE evolvers.

    lam selects the equation for evolve_lambda and is ignored by
    evolve_hpz.  dt = None picks min(0.01/omega0, 0.01/gamma).  Frames
    are stored every store_every steps (None: about 100 frames per run).
    """

    t_final: float
    lam: int = 0
    dt: Optional[float] = None
    drive: DriveSpec = field(default_factory=DriveSpec)
    store_every: Optional[int] = None
    check_every: int = 20
    substep_limit: float = 0.25
    interp_order: int = 5
    norm_abort_rate: float = 1e-4
    edge_tol: float = 1e-6
    det_margin: float = 1e-3
    checkpoint_every: Optional[int] = None
    checkpoint_dir: Optional[str] = None

    def __post_init__(self):
        if self.lam not in (-1, 0, 1):
            raise ValueError("lambda must be one of -1, 0, +1")
        if self.t_final <= 0:
            raise ValueError("t_final must be > 0")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be > 0")


@dataclass
class WignerTrajectory:
    """Per-step grid moments plus periodically stored frames."""

    times: np.ndarray
    mean_q: np.ndarray
    mean_p: np.ndarray
    var_q: np.ndarray
    var_p: np.ndarray
    cov_qp: np.ndarray
    norm: np.ndarray
    frame_times: list
    frames: list
    final: WignerGrid
    hbar: float
    det_margin: float

    def uncertainty_determinant(self):
        return self.var_q * self.var_p - self.cov_qp**2

    @property
    def uncertainty_min(self) -> float:
        return float(np.min(self.uncertainty_determinant()))

    @property
    def uncertainty_violated(self) -> bool:
        return bool(self.uncertainty_min < 0.25 * self.hbar**2 * (1.0 - self.det_margin))

    def first_violation_time(self) -> Optional[float]:
        det = self.uncertainty_determinant()
        hit = np.nonzero(det < 0.25 * self.hbar**2 * (1.0 - self.det_margin))[0]
        return float(self.times[hit[0]]) if hit.size else None


@dataclass
class HPZCoefficients:
    """Local-in-time coefficients of the exact equation.

    gamma_t holds 2 Gamma(t) (a frequency), omega2_t the squared
    effective frequency, d_pp / d_qp the momentum and cross diffusion
    aggregates as they multiply d^2W/dp^2 and d^2W/dq dp.
    """

    times: np.ndarray
    gamma_t: np.ndarray
    omega2_t: np.ndarray
    d_pp: np.ndarray
    d_qp: np.ndarray
    osc: OscillatorSpec

    @classmethod
    def constant(cls, t_grid, two_gamma, omega2, d_pp, d_qp, osc) -> "HPZCoefficients":
        t = np.asarray(t_grid, dtype=float)
        ones = np.ones_like(t)
        return cls(t, two_gamma * ones, omega2 * ones, d_pp * ones, d_qp * ones, osc)

    def interpolators(self):
        return (CubicSpline(self.times, self.gamma_t),
                CubicSpline(self.times, self.omega2_t),
                CubicSpline(self.times, self.d_pp),
                CubicSpline(self.times, self.d_qp))


def _trapz_weights(x):
    w = np.full(x.size, x[1] - x[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _grid_moments(w, q, p, wq, wp):
    """norm, <q>, <p>, Var q, Var p, Cov(q,p) by trapezoid."""
    row = w @ wp          # integral over p for each q
    col = wq @ w          # integral over q for each p
    norm = row @ wq
    mq = (row * q) @ wq / norm
    mp = (col * p) @ wp / norm
    vq = (row * q**2) @ wq / norm - mq**2
    vp = (col * p**2) @ wp / norm - mp**2
    cqp = (wq * q) @ w @ (wp * p) / norm - mq * mp
    return norm, mq, mp, vq, vp, cqp


def _diffusion_apply(w, dq, dp, a_q, a_p, a_qp, substep_limit):
    """Advance w by the diffusion flow exp[(a_q d_qq + a_p d_pp + a_qp d_qp)]
    where a_* are already time-integrated coefficients (D * dt).

    Fourth-order central stencils for the pure second derivatives,
    second-order centered for the cross term, explicit Euler substeps
    under the substep_limit stability bound.
    """
    load = a_q / dq**2 + a_p / dp**2 + abs(a_qp) / (dq * dp)
    if load == 0.0:
        return w
    n_sub = max(1, int(math.ceil(load / substep_limit)))
    cq = (a_q / n_sub) / (12.0 * dq**2)
    cp = (a_p / n_sub) / (12.0 * dp**2)
    cqp = (a_qp / n_sub) / (4.0 * dq * dp)

    def stencil(arr):
        g = np.pad(arr, 2)
        lap = np.zeros_like(arr)
        if cq != 0.0:
            lap += cq * (-g[:-4, 2:-2] + 16 * g[1:-3, 2:-2] - 30 * g[2:-2, 2:-2]
                         + 16 * g[3:-1, 2:-2] - g[4:, 2:-2])
        if cp != 0.0:
            lap += cp * (-g[2:-2, :-4] + 16 * g[2:-2, 1:-3] - 30 * g[2:-2, 2:-2]
                         + 16 * g[2:-2, 3:-1] - g[2:-2, 4:])
        if cqp != 0.0:
            lap += cqp * (g[3:-1, 3:-1] - g[3:-1, 1:-3] - g[1:-3, 3:-1] + g[1:-3, 1:-3])
        return lap

    for _ in range(n_sub):  # Heun: second order, same stability window
        k1 = stencil(w)
        k2 = stencil(w + k1)
        w = w + 0.5 * (k1 + k2)
    return w


def _split_evolve(w0: WignerGrid, cfg: EvolutionConfig, hbar: float,
                  drift_matrix: Callable[[float], np.ndarray],
                  diffusion: Callable[[float], tuple],
                  force: Optional[Callable[[float], float]],
                  time_dependent_drift: bool) -> WignerTrajectory:
    """Strang-split driver: half diffusion, exact affine drift, half diffusion."""
    q, p = w0.q, w0.p
    dq, dp = w0.dq, w0.dp
    dt = cfg.dt
    n_steps = int(round(cfg.t_final / dt))
    store_every = cfg.store_every or max(1, n_steps // 100)
    wq, wp = _trapz_weights(q), _trapz_weights(p)
    qi, pi = np.meshgrid(q, p, indexing="ij")
    pts = np.stack([qi.ravel(), pi.ravel()])  # physical coords of targets

    w = w0.values.astype(float, copy=True)
    nt = n_steps + 1
    out = {k: np.empty(nt) for k in ("norm", "mq", "mp", "vq", "vp", "cqp")}
    times = np.arange(nt) * dt
    frame_times, frames = [], []

    def record(i, arr):
        norm, mq, mp, vq, vp, cqp = _grid_moments(arr, q, p, wq, wp)
        out["norm"][i], out["mq"][i], out["mp"][i] = norm, mq, mp
        out["vq"][i], out["vp"][i], out["cqp"][i] = vq, vp, cqp

    record(0, w)
    norm0 = out["norm"][0]
    peak0 = np.max(np.abs(w))
    bmat = None
    src_idx = None

    for i in range(n_steps):
        t0 = i * dt
        if bmat is None or time_dependent_drift:
            a = drift_matrix(t0 + 0.5 * dt)
            bmat = expm(-a * dt)
            gain = math.exp(-np.trace(a) * dt)
            src = bmat @ pts
            src_idx = np.empty_like(src)
            src_idx[0] = (src[0] - q[0]) / dq
            src_idx[1] = (src[1] - p[0]) / dp
        aq1, ap1, aqp1 = diffusion(t0 + 0.25 * dt)
        w = _diffusion_apply(w, dq, dp, 0.5 * dt * aq1, 0.5 * dt * ap1,
                             0.5 * dt * aqp1, cfg.substep_limit)
        if force is not None:
            f_mid = force(t0 + 0.5 * dt)
            shift = (expm(drift_matrix(t0 + 0.5 * dt) * (0.5 * dt)) @
                     np.array([0.0, f_mid])) * dt
            back = bmat @ shift
            idx = np.empty_like(src_idx)
            idx[0] = src_idx[0] - back[0] / dq
            idx[1] = src_idx[1] - back[1] / dp
        else:
            idx = src_idx
        w = gain * ndimage.map_coordinates(
            w, idx, order=cfg.interp_order, mode="constant", cval=0.0
        ).reshape(w.shape)
        aq2, ap2, aqp2 = diffusion(t0 + 0.75 * dt)
        w = _diffusion_apply(w, dq, dp, 0.5 * dt * aq2, 0.5 * dt * ap2,
                             0.5 * dt * aqp2, cfg.substep_limit)

        record(i + 1, w)
        if (i + 1) % cfg.check_every == 0 or i + 1 == n_steps:
            if not np.all(np.isfinite(w)):
                raise StabilityError(
                    f"non-finite Wigner values at t = {(i + 1) * dt:g} "
                    f"(step {i + 1}, dt = {dt:g})")
            drift_rate = abs(out["norm"][i + 1] - norm0) / ((i + 1) * dt)
            if drift_rate > cfg.norm_abort_rate:
                raise MassConservationError(
                    f"normalization drift {drift_rate:.2e} per unit time at "
                    f"t = {(i + 1) * dt:g} exceeds {cfg.norm_abort_rate:g}")
            edge = max(np.max(np.abs(w[0])), np.max(np.abs(w[-1])),
                       np.max(np.abs(w[:, 0])), np.max(np.abs(w[:, -1])))
            if edge > cfg.edge_tol * peak0:
                raise MassConservationError(
                    f"edge amplitude {edge:.2e} exceeds {cfg.edge_tol:g} of the "
                    f"initial peak at t = {(i + 1) * dt:g}: grid too small")
        if (i + 1) % store_every == 0 or i + 1 == n_steps:
            frame_times.append((i + 1) * dt)
            frames.append(w0.copy_with(w.copy()))
        if cfg.checkpoint_every and (i + 1) % cfg.checkpoint_every == 0 and cfg.checkpoint_dir:
            from .wigner import save_grid
            save_grid(f"{cfg.checkpoint_dir}/checkpoint_{i + 1:06d}.wgrid",
                      w0.copy_with(w))

    return WignerTrajectory(
        times=times, mean_q=out["mq"], mean_p=out["mp"], var_q=out["vq"],
        var_p=out["vp"], cov_qp=out["cqp"], norm=out["norm"],
        frame_times=frame_times, frames=frames, final=w0.copy_with(w),
        hbar=hbar, det_margin=cfg.det_margin)


def _default_dt(omega0, gamma):
    scales = [x for x in (omega0, gamma) if x > 0]
    if not scales:
        raise ValueError("need omega0 > 0 or gamma > 0 to pick a time step")
    return min(0.01 / x for x in scales)


def evolve_lambda(w0: WignerGrid, cfg: EvolutionConfig, bath: BathSpec,
                  osc: OscillatorSpec, th: ThermalSpec) -> WignerTrajectory:
    """Integrate the constant-coefficient Wigner equation

        dW/dt = -(p/m) dW/dq + m w0^2 q dW/dp - f(t) dW/dp
              + (g/2)[(1+lam) d(qW)/dq + (1-lam) d(pW)/dp]
              + g(N+1/2)[(1+lam) hbar/(2 m w0) d^2W/dq^2
                         + (1-lam) m hbar w0/2 d^2W/dp^2].

    lam = -1, 0, +1 select coordinate pre-master, master, momentum
    pre-master; the drift and friction are followed exactly along
    characteristics, diffusion by explicit differences.
    """
    if bath.kind is not BathKind.OHMIC:
        raise ValueError("the constant-coefficient family is defined for Ohmic baths")
    if cfg.drive.kind is DriveKind.DELTA_RANDOM:
        raise ValueError("a random force has no single-trajectory Wigner PDE; "
                         "use driven_msd / closed_form_driven for its effect")
    lam = cfg.lam
    m, k, hbar = osc.mass, osc.spring_constant, osc.hbar
    gamma = bath.gamma
    w0sq = k / m
    occ_half = 0.5 * occupation_factor(osc, th) if k > 0 else 0.5
    omega0 = osc.omega0
    if k <= 0:
        raise ValueError("evolve_lambda needs K > 0 (the diffusion "
                         "coefficients are set by omega0)")
    gq = 0.5 * gamma * (1 + lam)
    gp = 0.5 * gamma * (1 - lam)
    d_q = gamma * occ_half * (1 + lam) * hbar / (2.0 * m * omega0)
    d_p = gamma * occ_half * (1 - lam) * m * hbar * omega0 / 2.0

    a = np.array([[-gq, 1.0 / m], [-k, -gp]])
    if cfg.dt is None:
        cfg = replace(cfg, dt=_default_dt(omega0, gamma))
    force = cfg.drive.force if cfg.drive.kind is DriveKind.DETERMINISTIC else None
    return _split_evolve(w0, cfg, hbar,
                         drift_matrix=lambda t: a,
                         diffusion=lambda t: (d_q, d_p, 0.0),
                         force=force, time_dependent_drift=False)


def _third_derivative(green: GreenTable, bath: BathSpec, osc: OscillatorSpec):
    """G''' from the model equation (no finite differencing)."""
    m, k = osc.mass, osc.spring_constant
    if bath.kind is BathKind.OHMIC:
        return -bath.gamma * green.gddot - (k / m) * green.gdot
    tau = bath.tau
    return (-(k / m) * green.gdot - (bath.gamma / tau) * green.gdot
            - (green.gddot + (k / m) * green.g) / tau)


def hpz_coefficients(bath: BathSpec, osc: OscillatorSpec, th: ThermalSpec, t_grid,
                     green: Optional[GreenTable] = None,
                     moments: Optional[FluctuationMoments] = None,
                     allow_low_temperature: bool = False) -> HPZCoefficients:
    """Derive the local-in-time coefficients from Green-function data.

    2 Gamma(t) and Omega^2(t) are the unique coefficients for which both
    homogeneous solutions u1 = m G'(t) and u2 = m G(t) satisfy
    u'' + 2 Gamma u' + Omega^2 u = 0 (a 2x2 solve per grid point);
    d_pp and d_qp then make the implied second-moment equations
    reproduce the exact noise-moment trajectories:

        d_qp = sig_qp' - sig_pp/m + m Omega^2 sig_qq + 2 Gamma sig_qp
        d_pp = sig_pp'/2 + m Omega^2 sig_qp + 2 Gamma sig_pp
    """
    t = np.asarray(t_grid, dtype=float)
    if green is None:
        green = green_initial_value(bath, osc, t)
    if moments is None:
        moments = fluctuation_moments(bath, osc, th, t,
                                      allow_low_temperature=allow_low_temperature)
    m = osc.mass
    u1, du1, ddu1 = m * green.gdot, m * green.gddot, m * _third_derivative(green, bath, osc)
    u2, du2, ddu2 = m * green.g, m * green.gdot, m * green.gddot
    wr = u1 * du2 - u2 * du1
    scale = np.abs(u1 * du2) + np.abs(u2 * du1) + 1e-300
    bad = np.abs(wr) < 1e-10 * scale
    if np.any(bad):
        raise WronskianError(
            f"homogeneous solutions degenerate at t = {t[bad][0]:g} "
            "(u1 u2' - u2 u1' ~ 0); coefficients undefined there")
    two_gamma = (ddu1 * u2 - u1 * ddu2) / wr
    omega2 = (du1 * ddu2 - ddu1 * du2) / wr

    sig_qq = moments.xx
    sig_qp = m * moments.xv
    sig_pp = m * m * moments.vv
    dsig_qp = m * moments.xv_dot
    dsig_pp = m * m * moments.vv_dot
    d_qp = dsig_qp - sig_pp / m + m * omega2 * sig_qq + two_gamma * sig_qp
    d_pp = 0.5 * dsig_pp + m * omega2 * sig_qp + two_gamma * sig_pp
    return HPZCoefficients(t, two_gamma, omega2, d_pp, d_qp, osc)


def evolve_hpz(w0: WignerGrid, coeffs: HPZCoefficients, cfg: EvolutionConfig) -> WignerTrajectory:
    """Integrate the exact local-in-time Wigner equation

        dW/dt = -(p/m) dW/dq + m Omega^2(t) q dW/dp + 2 Gamma(t) d(pW)/dp
              + d_pp(t) d^2W/dp^2 + d_qp(t) d^2W/dq dp

    with the coefficient tables interpolated at sub-step midpoints."""
    osc = coeffs.osc
    m = osc.mass
    if cfg.dt is None:
        w_scale = math.sqrt(max(np.max(np.abs(coeffs.omega2_t)), 1e-30))
        g_scale = max(np.max(np.abs(coeffs.gamma_t)), 1e-30)
        cfg = replace(cfg, dt=_default_dt(w_scale, g_scale))
    if cfg.t_final > coeffs.times[-1] * (1 + 1e-9):
        raise ValueError("coefficient tables do not cover t_final")
    gam_i, om2_i, dpp_i, dqp_i = coeffs.interpolators()

    def drift(t):
        return np.array([[0.0, 1.0 / m], [-m * float(om2_i(t)), -float(gam_i(t))]])

    def diffusion(t):
        return 0.0, float(dpp_i(t)), float(dqp_i(t))

    return _split_evolve(w0, cfg, osc.hbar, drift_matrix=drift,
                         diffusion=diffusion, force=None, time_dependent_drift=True)


def kernel_propagate(w0: WignerGrid, bath: BathSpec, osc: OscillatorSpec,
                     th: ThermalSpec, t: float,
                     green: Optional[GreenTable] = None,
                     moments: Optional[FluctuationMoments] = None,
                     pad_factor: int = 4,
                     allow_low_temperature: bool = False) -> WignerGrid:
    """Apply the Gaussian transition kernel to w0 in one step:

        W(z; t) = int dz' P(z; z'; t) W(z'; 0),
        P = exp{-R . A^{-1} . R / 2} / (2 pi sqrt(det A)),

    with R the offset from the classically propagated mean and A(t) the
    noise dyadic.  The kernel is applied through its Fourier
    representation What(k) -> exp{-k.A k/2} What(M^T k), so the short-time
    limit (A -> 0, M -> 1) degenerates gracefully to the identity.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return w0.copy_with(w0.values.copy())
    if green is None:
        n = max(512, int(50 * t * max(osc.omega0, bath.gamma, 1.0)))
        green = green_initial_value(bath, osc, np.linspace(0.0, t, min(n, 20001)))
    mean_map = green.mean_flow(t)
    if moments is None and bath.gamma == 0.0:
        a_qp = np.zeros((2, 2))  # closed system: pure Liouville flow
    else:
        if moments is None:
            moments = fluctuation_moments(bath, osc, th, green.times,
                                          allow_low_temperature=allow_low_temperature,
                                          green=green)
        a_qp = _a_qp_at(moments, t)
    eig = np.linalg.eigvalsh(a_qp)
    if eig[0] < -1e-10 * max(eig[-1], 1e-300):
        raise ValueError(f"noise dyadic not positive semi-definite at t = {t:g}: "
                         f"eigenvalues {eig}; use evolve_hpz for this regime")

    q, p, w = w0.q, w0.p, w0.values
    nq, np_ = q.size, p.size
    dq, dp = w0.dq, w0.dp
    nq_pad, np_pad = pad_factor * nq, pad_factor * np_
    off_q, off_p = (nq_pad - nq) // 2, (np_pad - np_) // 2
    wp = np.zeros((nq_pad, np_pad))
    wp[off_q: off_q + nq, off_p: off_p + np_] = w
    q0_pad = q[0] - off_q * dq
    p0_pad = p[0] - off_p * dp
    qc = q0_pad + 0.5 * (nq_pad - 1) * dq
    pc = p0_pad + 0.5 * (np_pad - 1) * dp

    kq = 2 * np.pi * np.fft.fftfreq(nq_pad, dq)
    kp = 2 * np.pi * np.fft.fftfreq(np_pad, dp)
    # continuous transform What(k) = fft2 * dq dp * exp(-i k . z0);
    # interpolation happens on the centered spectrum
    # C(k) = What(k) exp(+i k . zc), which is smooth when W sits near zc
    c_arr = (np.fft.fft2(wp) * (dq * dp)
             * np.exp(-1j * np.add.outer(kq * (q0_pad - qc), kp * (p0_pad - pc))))
    cs = np.fft.fftshift(c_arr)
    kqs = np.fft.fftshift(kq)
    kps = np.fft.fftshift(kp)
    dkq, dkp = kqs[1] - kqs[0], kps[1] - kps[0]

    kq2, kp2 = np.meshgrid(kq, kp, indexing="ij")
    tq = mean_map[0, 0] * kq2 + mean_map[1, 0] * kp2  # (M^T k)_q
    tp = mean_map[0, 1] * kq2 + mean_map[1, 1] * kp2  # (M^T k)_p
    iq = (tq - kqs[0]) / dkq
    ip = (tp - kps[0]) / dkp
    sampled = (ndimage.map_coordinates(cs.real, [iq.ravel(), ip.ravel()], order=3,
                                       mode="constant", cval=0.0)
               + 1j * ndimage.map_coordinates(cs.imag, [iq.ravel(), ip.ravel()], order=3,
                                              mode="constant", cval=0.0)
               ).reshape(nq_pad, np_pad)
    # What(M^T k) = C(M^T k) exp(-i M^T k . zc)
    sampled *= np.exp(-1j * (tq * qc + tp * pc))
    gauss = np.exp(-0.5 * (a_qp[0, 0] * kq2**2 + 2 * a_qp[0, 1] * kq2 * kp2
                           + a_qp[1, 1] * kp2**2))
    f_t = sampled * gauss
    # invert with the z0 phase restored
    f_t *= np.exp(1j * np.add.outer(kq * q0_pad, kp * p0_pad))
    w_t = np.fft.ifft2(f_t).real / (dq * dp)
    return w0.copy_with(w_t[off_q: off_q + nq, off_p: off_p + np_].copy())


def _a_qp_at(moments: FluctuationMoments, t: float):
    m = moments.osc.mass
    xx = CubicSpline(moments.times, moments.xx)(t)
    xv = CubicSpline(moments.times, moments.xv)(t)
    vv = CubicSpline(moments.times, moments.vv)(t)
    return np.array([[xx, m * xv], [m * xv, m * m * vv]])


def cat_wigner_ft(cat: CatSpec, osc: OscillatorSpec, u, v):
    """Characteristic function of the cat Wigner function,

        W~(u, v) = integral W(q, p) exp{-i(u p + v q)/hbar} dq dp,

    in closed form from the Gaussian packet structure."""
    hbar = osc.hbar
    sigma = cat.sigma
    sigma_p = hbar / (2.0 * sigma)
    d = cat.d
    n0 = cat.normalization()
    e0 = np.exp(-(sigma_p**2 * u**2 + sigma**2 * v**2) / (2.0 * hbar**2))
    em = np.exp(-(sigma_p**2 * (u - d) ** 2 + sigma**2 * v**2) / (2.0 * hbar**2))
    ep = np.exp(-(sigma_p**2 * (u + d) ** 2 + sigma**2 * v**2) / (2.0 * hbar**2))
    return n0 * (2.0 * np.cos(v * d / (2.0 * hbar)) * e0 + em + ep)


def probability_density_fourier(cat: CatSpec, bath: BathSpec, osc: OscillatorSpec,
                                th: ThermalSpec, t: float,
                                x=None,
                                green: Optional[GreenTable] = None,
                                moments: Optional[FluctuationMoments] = None,
                                initial_kT: float = 0.0,
                                allow_low_temperature: bool = False):
    """Coordinate probability density of an evolved cat state,

        P(x; t) = (1/2 pi hbar) int ds W~(G s, m G' s; 0)
                  exp{-<X^2> s^2 / 2 hbar^2 + i x s / hbar},

    evaluated by trapezoid quadrature over s.  initial_kT > 0 averages
    the initial packet over a thermal velocity spread, which adds
    m kT G(t)^2 to the noise variance.  Returns (x, P) with P normalized.
    """
    hbar, m = osc.hbar, osc.mass
    if t == 0.0:
        phi_qp, phi_qq, x2 = 0.0, 1.0, 0.0
    else:
        if green is None:
            n = max(512, int(50 * t * max(osc.omega0, bath.gamma, 1.0)))
            green = green_initial_value(bath, osc, np.linspace(0.0, t, min(n, 20001)))
        flow = green.mean_flow(t)
        phi_qq, phi_qp = float(flow[0, 0]), float(flow[0, 1])
        if bath.gamma == 0.0:
            x2 = 0.0
        else:
            if moments is None:
                moments = fluctuation_moments(bath, osc, th, green.times,
                                              allow_low_temperature=allow_low_temperature,
                                              green=green)
            x2 = float(CubicSpline(moments.times, moments.xx)(t))
    if initial_kT > 0.0:
        x2 = x2 + m * initial_kT * phi_qp**2

    sigma, d = cat.sigma, cat.d
    sigma_p = hbar / (2.0 * sigma)
    # every term of the integrand decays at least as fast as this width
    w_eff = math.sqrt((sigma * phi_qq) ** 2 + x2)
    s_max = 10.0 * hbar / w_eff
    x_half = 0.5 * d * abs(phi_qq) + 8.0 * math.sqrt(w_eff**2 + (sigma_p * phi_qp) ** 2 + sigma**2)
    if x is None:
        x = np.linspace(-x_half, x_half, 1201)
    else:
        x = np.asarray(x, dtype=float)
    n_s = int(max(2049, 8 * s_max * np.max(np.abs(x)) / (2 * np.pi * hbar)))
    n_s = min(n_s | 1, 200_001)
    s = np.linspace(-s_max, s_max, n_s)
    wt = cat_wigner_ft(cat, osc, phi_qp * s, phi_qq * s) * np.exp(-x2 * s**2 / (2 * hbar**2))
    kernel = np.cos(np.outer(x, s) / hbar)
    pd = (kernel @ wt) * (s[1] - s[0]) / (2 * np.pi * hbar)
    norm = np.trapezoid(pd, x)
    return x, pd / norm
