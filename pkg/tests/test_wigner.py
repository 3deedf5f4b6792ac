import numpy as np
import pytest

from qbrownian.baths import OscillatorSpec, ThermalSpec, occupation_factor
from qbrownian.wigner import (
    CatSpec,
    GridResolutionError,
    GridSpec,
    cat_wigner,
    equilibrium_wigner,
    gaussian_wigner,
    load_grid,
    marginal_p,
    marginal_q,
    moments,
    save_grid,
)

OSC = OscillatorSpec(1.0, 1.0, 1.0)


def cat_density_oracle(x, d, sigma):
    """|psi(x, 0)|^2 for the two-packet superposition."""
    pref = (8 * np.pi * sigma**2) ** -0.5 / (1 + np.exp(-d**2 / (8 * sigma**2)))
    return pref * (np.exp(-(x - d / 2) ** 2 / (2 * sigma**2))
                   + np.exp(-(x + d / 2) ** 2 / (2 * sigma**2))
                   + 2 * np.exp(-(x**2 + d**2 / 4) / (2 * sigma**2)))


def test_gaussian_peak_and_norm():
    grid = GridSpec(-8, 8, -8, 8, 257, 257)  # odd so the origin is a node
    w = gaussian_wigner(0.0, 0.0, 1.0, grid, OSC)
    assert w.values.max() == pytest.approx(1 / np.pi, rel=1e-12)
    assert w.integral() == pytest.approx(1.0, abs=1e-6)


def test_gaussian_offset_marginal_mean():
    grid = GridSpec(-10, 14, -8, 8, 256, 256)
    w = gaussian_wigner(2.0, 0.0, 1.0, grid, OSC)
    mq, mp, *_ = moments(w)
    assert mq == pytest.approx(2.0, abs=1e-8)
    assert mp == pytest.approx(0.0, abs=1e-10)
    w3 = gaussian_wigner(3.0, 0.0, 1.0, grid, OSC)
    assert moments(w3)[0] == pytest.approx(3.0, abs=1e-8)


def test_gaussian_grid_too_small():
    with pytest.raises(GridResolutionError):
        gaussian_wigner(0.0, 0.0, 2.0, GridSpec(-5, 5, -5, 5, 64, 64), OSC)


def test_gaussian_uncertainty_bound():
    grid = GridSpec(-9, 9, -9, 9, 256, 256)
    for sq in (0.5, 1.0, 1.4):
        w = gaussian_wigner(0.0, 0.0, sq, grid, OSC)
        _, _, q2, p2, qp = moments(w)
        assert q2 * p2 - qp**2 >= 0.25 - 1e-6


def test_cat_norm_and_degenerate_limit():
    grid = GridSpec(-12, 12, -6, 6, 256, 512)
    cat = CatSpec(d=10.0, sigma=1.0)
    w = cat_wigner(cat, grid, OSC)
    assert w.integral() == pytest.approx(1.0, abs=1e-6)
    # d = 0 collapses to the single packet
    w0 = cat_wigner(CatSpec(d=0.0, sigma=1.0), grid, OSC)
    g = gaussian_wigner(0.0, 0.0, 1.0, grid, OSC)
    assert np.max(np.abs(w0.values - g.values)) < 1e-12
    assert CatSpec(0.0, 1.0).normalization() == pytest.approx(0.25)


def test_cat_fringe_wavelength():
    d, sigma = 10.0, 1.0
    grid = GridSpec(-12, 12, -6, 6, 257, 1025)
    w = cat_wigner(CatSpec(d, sigma), grid, OSC)
    iq0 = np.argmin(np.abs(w.q))
    s = w.values[iq0]
    spec = np.abs(np.fft.rfft(s))
    freqs = 2 * np.pi * np.fft.rfftfreq(s.size, w.dp)
    k_peak = freqs[np.argmax(spec[5:]) + 5]  # skip the envelope lobe
    assert k_peak == pytest.approx(d, rel=0.05)  # cos(p d / hbar)


def test_cat_parity():
    grid = GridSpec(-12, 12, -6, 6, 257, 513)
    w = cat_wigner(CatSpec(8.0, 1.0), grid, OSC)
    assert np.max(np.abs(w.values - w.values[::-1, :])) < 1e-14
    assert np.max(np.abs(w.values - w.values[:, ::-1])) < 1e-14


def test_cat_resolution_errors():
    with pytest.raises(GridResolutionError):
        cat_wigner(CatSpec(d=10.0, sigma=1.0), GridSpec(-12, 12, -6, 6, 128, 32), OSC)
    with pytest.raises(GridResolutionError):
        cat_wigner(CatSpec(d=30.0, sigma=1.0), GridSpec(-12, 12, -6, 6, 256, 512), OSC)


def test_cat_marginal_matches_wavefunction():
    grid = GridSpec(-14, 14, -6, 6, 513, 513)
    d, sigma = 10.0, 1.0
    w = cat_wigner(CatSpec(d, sigma), grid, OSC)
    pd = marginal_q(w)
    assert np.max(np.abs(pd - cat_density_oracle(w.q, d, sigma))) < 1e-4
    assert np.trapezoid(pd, w.q) == pytest.approx(1.0, abs=1e-6)


def test_cat_first_moments():
    grid = GridSpec(-14, 14, -6, 6, 512, 512)
    w = cat_wigner(CatSpec(10.0, 1.0), grid, OSC)
    mq, mp, q2, p2, qp = moments(w)
    assert q2 == pytest.approx(25.0 + 1.0, rel=1e-4)  # d^2/4 + sigma^2
    assert mq == pytest.approx(0.0, abs=1e-9)


def test_equilibrium_values():
    th0 = ThermalSpec(kT=0.0)
    grid = GridSpec(-8, 8, -8, 8, 257, 257)
    w = equilibrium_wigner(OSC, th0, grid)
    assert w.values.max() == pytest.approx(1 / np.pi, rel=1e-12)
    th = ThermalSpec(kT=5.0)
    grid_hot = GridSpec(-25, 25, -25, 25, 257, 257)
    w2 = equilibrium_wigner(OSC, th, grid_hot)
    assert w2.integral() == pytest.approx(1.0, abs=1e-6)
    _, _, q2, p2, qp = moments(w2)
    two_n1 = occupation_factor(OSC, th)
    assert p2 == pytest.approx(two_n1 / 2, rel=1e-6)  # (2N+1) m hbar w0 / 2
    assert q2 == pytest.approx(two_n1 / 2, rel=1e-6)  # (2N+1) hbar / 2 m w0
    pd = marginal_q(w2)
    var = np.trapezoid(pd * w2.q**2, w2.q)
    assert var == pytest.approx(two_n1 / 2, rel=1e-6)


def test_equilibrium_classical_limit():
    th = ThermalSpec(kT=200.0)
    grid = GridSpec(-150, 150, -150, 150, 257, 257)
    w = equilibrium_wigner(OSC, th, grid)
    boltzmann = np.exp(-(np.add.outer(w.q**2, w.p**2)) / (2 * th.kT)) / (2 * np.pi * th.kT)
    # residual quantum correction is O((hbar w0 / kT)^2 / 12) ~ 2e-6
    assert np.max(np.abs(w.values - boltzmann)) < 1e-5 * boltzmann.max()


def test_equilibrium_rejects_free_particle():
    with pytest.raises(ValueError):
        equilibrium_wigner(OscillatorSpec(1.0, 0.0, 1.0), ThermalSpec(1.0),
                           GridSpec(-5, 5, -5, 5, 64, 64))


def test_marginal_p_normalization():
    grid = GridSpec(-12, 12, -6, 6, 256, 512)
    w = cat_wigner(CatSpec(8.0, 1.0), grid, OSC)
    pp = marginal_p(w)
    assert np.trapezoid(pp, w.p) == pytest.approx(1.0, abs=1e-6)


def test_dump_roundtrip(tmp_path):
    grid = GridSpec(-12, 12, -6, 6, 96, 128)
    w = cat_wigner(CatSpec(8.0, 1.0), grid, OSC)
    path = tmp_path / "state.wgrid"
    save_grid(path, w)
    back = load_grid(path)
    assert np.array_equal(back.values, w.values)
    assert np.allclose(back.q, w.q) and np.allclose(back.p, w.p)
    with pytest.raises(ValueError):
        other = tmp_path / "junk.bin"
        other.write_bytes(b"not a grid")
        load_grid(other)
