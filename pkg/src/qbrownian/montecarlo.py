"""Classical Langevin Monte Carlo oracles.

Used by the kramers-compare pipeline and the acceptance tests as
independent references: an exact-discretization Ornstein-Uhlenbeck
sampler for the damped oscillator, and a white-noise path average for
the driven mean-square displacement.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .baths import OscillatorSpec

__all__ = ["McMoments", "classical_langevin_moments", "driven_msd_mc"]


@dataclass
class McMoments:
    """Sample moments with standard errors at the requested times."""

    times: np.ndarray
    mean_q: np.ndarray
    mean_p: np.ndarray
    var_q: np.ndarray
    var_p: np.ndarray
    cov_qp: np.ndarray
    se_mean_q: np.ndarray
    se_mean_p: np.ndarray
    se_var_q: np.ndarray
    se_var_p: np.ndarray
    se_cov_qp: np.ndarray
    n_paths: int


def classical_langevin_moments(osc: OscillatorSpec, gamma: float, kT: float,
                               mean0, cov0, sample_times, n_paths: int = 100_000,
                               seed: int = 0) -> McMoments:
    """Moments of dq = p/m dt, dp = (-K q - gamma p) dt + sqrt(2 gamma m kT) dW.

    The linear SDE is advanced with its exact Gaussian one-step law
    (matrix exponential plus Lyapunov-equation covariance), so the only
    error is statistical.
    """
    m, k = osc.mass, osc.spring_constant
    a = np.array([[0.0, 1.0 / m], [-k, -gamma]])
    d = np.array([[0.0, 0.0], [0.0, 2.0 * gamma * m * kT]])
    sig_inf = solve_continuous_lyapunov(a, -d)
    rng = np.random.default_rng(seed)
    t = np.asarray(sample_times, dtype=float)
    z = rng.multivariate_normal(np.asarray(mean0, float), np.asarray(cov0, float),
                                size=n_paths)
    out = {key: np.empty(t.size) for key in
           ("mq", "mp", "vq", "vp", "cqp", "smq", "smp", "svq", "svp", "scqp")}

    t_prev = 0.0
    for j, tj in enumerate(t):
        dt = tj - t_prev
        if dt > 0:
            md = expm(a * dt)
            qcov = sig_inf - md @ sig_inf @ md.T
            qcov = 0.5 * (qcov + qcov.T)
            z = z @ md.T + rng.multivariate_normal(np.zeros(2), qcov, size=n_paths)
            t_prev = tj
        qs, ps = z[:, 0], z[:, 1]
        n = n_paths
        dqs, dps = qs - qs.mean(), ps - ps.mean()
        out["mq"][j], out["mp"][j] = qs.mean(), ps.mean()
        out["vq"][j] = np.sum(dqs**2) / (n - 1)
        out["vp"][j] = np.sum(dps**2) / (n - 1)
        out["cqp"][j] = np.sum(dqs * dps) / (n - 1)
        out["smq"][j] = qs.std(ddof=1) / np.sqrt(n)
        out["smp"][j] = ps.std(ddof=1) / np.sqrt(n)
        out["svq"][j] = np.std(dqs**2, ddof=1) / np.sqrt(n)
        out["svp"][j] = np.std(dps**2, ddof=1) / np.sqrt(n)
        out["scqp"][j] = np.std(dqs * dps, ddof=1) / np.sqrt(n)
    return McMoments(t, out["mq"], out["mp"], out["vq"], out["vp"], out["cqp"],
                     out["smq"], out["smp"], out["svq"], out["svp"], out["scqp"],
                     n_paths)


def driven_msd_mc(green_spline, strength: float, t: float, n_paths: int = 10_000,
                  n_steps: int = 400, seed: int = 0):
    """Monte Carlo <x_d^2>(t) for a delta-correlated random force.

    x_d(t) = int_0^t G(t - s) f(s) ds with <f f'> = strength * delta;
    each path draws f on a uniform grid with variance strength/ds.
    Returns (estimate, standard_error).
    """
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, t, n_steps + 1)
    ds = s[1] - s[0]
    g_rev = green_spline(t - s)
    # trapezoid weights against the white-noise samples
    w = np.full(n_steps + 1, ds)
    w[0] *= 0.5
    w[-1] *= 0.5
    vals = np.empty(n_paths)
    block = 2000
    for lo in range(0, n_paths, block):
        nb = min(block, n_paths - lo)
        f = rng.normal(0.0, np.sqrt(strength / ds), size=(nb, n_steps + 1))
        x = (f * (g_rev * w)).sum(axis=1)
        vals[lo:lo + nb] = x**2
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_paths))
