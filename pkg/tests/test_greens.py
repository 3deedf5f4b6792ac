import numpy as np
import pytest

from qbrownian.baths import BathKind, BathSpec, OscillatorSpec
from qbrownian.greens import green_initial_value, green_stationary

OSC = OscillatorSpec(1.0, 1.0, 1.0)
OHMIC = BathSpec(BathKind.OHMIC, gamma=0.2)
SRT = BathSpec(BathKind.SINGLE_RELAXATION_TIME, gamma=0.2, tau=0.25)


def srt_green_roots_oracle(bath, osc, t):
    """Partial-fraction inversion over the cubic pole structure:
    alpha = (1 - i z tau)/P(z) with P = i m tau z^3 - m z^2 - i(m g + K tau) z + K,
    G(t) = -i sum_k (1 - i z_k tau) exp(-i z_k t)/P'(z_k)."""
    m, k = osc.mass, osc.spring_constant
    g, tau = bath.mass * bath.gamma, bath.tau
    coeffs = [1j * m * tau, -m, -1j * (g + k * tau), k]
    roots = np.roots(coeffs)
    dP = np.polyder(np.array(coeffs))
    out = np.zeros_like(np.asarray(t, dtype=float), dtype=complex)
    for z in roots:
        out += -1j * (1 - 1j * z * tau) * np.exp(-1j * z * np.asarray(t)) / np.polyval(dP, z)
    return out.real


def test_ohmic_closed_form():
    t = np.linspace(0, 30, 601)
    tab = green_stationary(OHMIC, OSC, t)
    w1 = np.sqrt(1 - 0.01)
    expected = np.exp(-0.1 * t) * np.sin(w1 * t) / w1
    assert np.max(np.abs(tab.g - expected)) < 1e-12
    assert tab.g[0] == 0.0
    assert tab.gdot[0] == pytest.approx(1.0)


def test_undamped_oscillator():
    t = np.linspace(0, 10, 201)
    free = BathSpec(BathKind.OHMIC, gamma=0.0)
    tab = green_stationary(free, OSC, t)
    assert np.allclose(tab.g, np.sin(t), atol=1e-12)
    tab2 = green_initial_value(free, OSC, t)
    assert np.max(np.abs(tab2.g - np.sin(t))) < 1e-9


def test_overdamped_ohmic():
    over = BathSpec(BathKind.OHMIC, gamma=3.0)
    t = np.linspace(0, 20, 401)
    tab = green_stationary(over, OSC, t)
    gi = green_initial_value(over, OSC, t)
    assert np.all(np.isfinite(tab.g))
    assert np.max(np.abs(tab.g - gi.g)) < 1e-8
    assert np.all(tab.g[1:] > 0)  # no oscillation when overdamped


def test_free_particle_green():
    t = np.linspace(0, 10, 201)
    fp = OscillatorSpec(1.0, 0.0, 1.0)
    tab = green_stationary(OHMIC, fp, t)
    assert np.allclose(tab.g, (1 - np.exp(-0.2 * t)) / 0.2, atol=1e-12)


def test_initial_conditions_all_baths():
    t = np.linspace(0, 5, 101)
    for bath in (OHMIC, SRT):
        tab = green_initial_value(bath, OSC, t)
        assert tab.g[0] == 0.0
        assert tab.gdot[0] == pytest.approx(1.0 / OSC.mass, abs=1e-12)


def test_ohmic_route_agreement():
    # stationary (spectral) and initial-value (time-domain) routes build
    # the same function
    t = np.linspace(0, 50, 2001)
    gs = green_stationary(OHMIC, OSC, t)
    gi = green_initial_value(OHMIC, OSC, t)
    peak = np.max(np.abs(gs.g))
    assert np.max(np.abs(gs.g - gi.g)) < 1e-6 * peak


def test_srt_route_agreement_and_oracle():
    t = np.linspace(0, 30, 1201)
    gs = green_stationary(SRT, OSC, t)
    gi = green_initial_value(SRT, OSC, t)
    peak = np.max(np.abs(gs.g))
    assert np.max(np.abs(gs.g - gi.g)) < 2e-6 * peak
    oracle = srt_green_roots_oracle(SRT, OSC, t)
    assert np.max(np.abs(gi.g - oracle)) < 1e-6 * peak
    assert np.max(np.abs(gs.g - oracle)) < 2e-6 * peak


def test_srt_approaches_stationary_form():
    # after the bath relaxation time the initial-value solution follows
    # the Ohmic stationary solution up to O(gamma tau, (w0 tau)^2) shifts
    t = np.linspace(0, 40, 1601)
    gi = green_initial_value(SRT, OSC, t)
    go = green_stationary(OHMIC, OSC, t)
    late = t > 10 * SRT.tau
    peak = np.max(np.abs(go.g))
    assert np.max(np.abs(gi.g[late] - go.g[late])) < 0.15 * peak


def test_causality_check_runs():
    t = np.linspace(0, 20, 801)
    tab = green_stationary(SRT, OSC, t, causality_tol=1e-6)
    assert np.all(np.isfinite(tab.g))


def test_gddot_consistency():
    # tabulated G'' must satisfy the local Ohmic equation
    t = np.linspace(0, 20, 801)
    tab = green_initial_value(OHMIC, OSC, t)
    resid = tab.gddot + 0.2 * tab.gdot + tab.g
    assert np.max(np.abs(resid)) < 1e-10
    # and the SRT table must obey m G'' + mu*G' + K G = 0 via quadrature
    tab2 = green_initial_value(SRT, OSC, np.linspace(0, 10, 4001))
    tt = tab2.times
    i = 2500
    kern = SRT.memory_kernel(tt[i] - tt[: i + 1])
    conv = np.trapezoid(kern * tab2.gdot[: i + 1], tt[: i + 1])
    assert tab2.gddot[i] + conv + tab2.g[i] == pytest.approx(0.0, abs=5e-6)


def test_mean_flow_identity_at_zero():
    t = np.linspace(0, 5, 201)
    for bath in (OHMIC, SRT):
        tab = green_initial_value(bath, OSC, t)
        assert np.allclose(tab.mean_flow(0.0), np.eye(2), atol=1e-10)
        flow = tab.mean_flow(2.0)
        # det of the flow contracts like exp(-gamma_eff t); positive
        assert 0 < np.linalg.det(flow) <= 1.0 + 1e-9


def test_rejects_ill_posed_and_bad_grids():
    free_undamped = BathSpec(BathKind.OHMIC, gamma=0.0)
    fp = OscillatorSpec(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        green_stationary(free_undamped, fp, np.linspace(0, 1, 11))
    with pytest.raises(ValueError):
        green_stationary(OHMIC, OSC, np.array([0.0, 0.1, 0.3]))
    with pytest.raises(ValueError):
        green_initial_value(OHMIC, OSC, np.linspace(1.0, 2.0, 11))
