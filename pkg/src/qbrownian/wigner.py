"""Wigner distributions on a uniform (q, p) grid.

Construction of Gaussian and two-packet (cat) states, the thermal
equilibrium distribution, marginals and moments, and a small dump format
used by the CLI for checkpointing.  All reductions are trapezoidal on
the uniform grid.
"""

import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baths import OscillatorSpec, ThermalSpec, occupation_factor

__all__ = [
    "GridSpec",
    "WignerGrid",
    "CatSpec",
    "GridResolutionError",
    "gaussian_wigner",
    "cat_wigner",
    "equilibrium_wigner",
    "marginal_q",
    "marginal_p",
    "moments",
    "save_grid",
    "load_grid",
    "default_grid",
]


class GridResolutionError(ValueError):
    """Grid does not cover or resolve the requested state."""


@dataclass(frozen=True)
class GridSpec:
    """Axes of a uniform phase-space grid: [q_min, q_max] x [p_min, p_max]."""

    q_min: float
    q_max: float
    p_min: float
    p_max: float
    nq: int = 256
    np_: int = 256

    def axes(self):
        return (np.linspace(self.q_min, self.q_max, self.nq),
                np.linspace(self.p_min, self.p_max, self.np_))


@dataclass
class WignerGrid:
    """Real W(q, p) sampled with q as the leading index."""

    q: np.ndarray
    p: np.ndarray
    values: np.ndarray
    osc: Optional[OscillatorSpec] = None
    th: Optional[ThermalSpec] = None

    def __post_init__(self):
        if self.values.shape != (self.q.size, self.p.size):
            raise ValueError(f"values shape {self.values.shape} does not match axes "
                             f"({self.q.size}, {self.p.size})")

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.p, axis=1), self.q))

    def copy_with(self, values) -> "WignerGrid":
        return WignerGrid(self.q, self.p, values, self.osc, self.th)


@dataclass(frozen=True)
class CatSpec:
    """Two identical Gaussian packets separated by d, each of width sigma."""

    d: float
    sigma: float

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("separation d must be >= 0")
        if self.sigma <= 0:
            raise ValueError("packet width sigma must be > 0")

    def normalization(self) -> float:
        """N0 = 1 / [2 (1 + exp(-d^2/8 sigma^2))]."""
        return 1.0 / (2.0 * (1.0 + np.exp(-self.d**2 / (8.0 * self.sigma**2))))


def default_grid(osc: OscillatorSpec, th: ThermalSpec, sigma: float, d: float = 0.0,
                 nq: int = 256, np_: int = 256) -> GridSpec:
    """Extents covering packets, fringes and thermal spreading at once."""
    hbar = osc.hbar
    sigma_p = hbar / (2.0 * sigma)
    q_half = max(6.0 * sigma, 0.5 * d + 6.0 * sigma)
    p_half = 6.0 * sigma_p
    if osc.spring_constant > 0:
        two_n1 = occupation_factor(osc, th)
        p_th = np.sqrt(two_n1 * osc.mass * hbar * osc.omega0 / 2.0)
        q_th = np.sqrt(two_n1 * hbar / (2.0 * osc.mass * osc.omega0))
        p_half = max(p_half, 4.0 * p_th)
        q_half = max(q_half, 4.0 * q_th)
    return GridSpec(-q_half, q_half, -p_half, p_half, nq, np_)


def _grid_axes(grid):
    if isinstance(grid, GridSpec):
        return grid.axes()
    if isinstance(grid, WignerGrid):
        return grid.q, grid.p
    q, p = grid
    return np.asarray(q, dtype=float), np.asarray(p, dtype=float)


def gaussian_wigner(q0, p0, sigma_q, grid, osc: Optional[OscillatorSpec] = None,
                    th: Optional[ThermalSpec] = None,
                    sigma_p: Optional[float] = None) -> WignerGrid:
    """Gaussian Wigner function centered at (q0, p0).

    By default the packet is the minimal-uncertainty one with
    sigma_p = hbar/(2 sigma_q); passing sigma_p explicitly gives an
    uncorrelated Gaussian of arbitrary widths (used e.g. for displaced
    thermal states).  The grid must extend at least 6 sigma beyond the
    center in each direction.
    """
    osc = osc or OscillatorSpec()
    if sigma_q <= 0:
        raise ValueError("sigma_q must be > 0")
    if sigma_p is None:
        sigma_p = osc.hbar / (2.0 * sigma_q)
    q, p = _grid_axes(grid)
    if q0 - 6 * sigma_q < q[0] or q0 + 6 * sigma_q > q[-1] \
            or p0 - 6 * sigma_p < p[0] or p0 + 6 * sigma_p > p[-1]:
        raise GridResolutionError(
            f"grid does not cover 6 sigma around ({q0:g}, {p0:g}): "
            f"need q in [{q0 - 6 * sigma_q:g}, {q0 + 6 * sigma_q:g}], "
            f"p in [{p0 - 6 * sigma_p:g}, {p0 + 6 * sigma_p:g}]")
    gq = np.exp(-((q - q0) ** 2) / (2.0 * sigma_q**2))
    gp = np.exp(-((p - p0) ** 2) / (2.0 * sigma_p**2))
    w = np.outer(gq, gp) / (2.0 * np.pi * sigma_q * sigma_p)
    return WignerGrid(q, p, w, osc, th)


def cat_wigner(cat: CatSpec, grid, osc: Optional[OscillatorSpec] = None,
               th: Optional[ThermalSpec] = None) -> WignerGrid:
    """Wigner function of two superposed packets at q = +-d/2:

        W2 = N0 [ W(q + d/2, p) + W(q - d/2, p) + 2 cos(p d / hbar) W(q, p) ]

    with W the minimal-uncertainty packet of width cat.sigma.  The p grid
    must resolve the fringe wavelength 2 pi hbar / d with >= 8 samples.
    """
    osc = osc or OscillatorSpec()
    q, p = _grid_axes(grid)
    hbar = osc.hbar
    sigma, d = cat.sigma, cat.d
    sigma_p = hbar / (2.0 * sigma)
    dp = p[1] - p[0]
    if d > 0 and dp > 2.0 * np.pi * hbar / d / 8.0:
        raise GridResolutionError(
            f"p step {dp:g} too coarse for fringe wavelength {2 * np.pi * hbar / d:g} "
            "(need >= 8 samples per period)")
    if 0.5 * d + 6 * sigma > q[-1] or -0.5 * d - 6 * sigma < q[0]:
        raise GridResolutionError("grid does not cover both packets (d/2 + 6 sigma)")
    if 6 * sigma_p > p[-1] or -6 * sigma_p < p[0]:
        raise GridResolutionError("grid does not cover the packet momentum width")

    def packet(center):
        gq = np.exp(-((q - center) ** 2) / (2.0 * sigma**2))
        gp = np.exp(-(p**2) / (2.0 * sigma_p**2))
        return np.outer(gq, gp) / (2.0 * np.pi * sigma * sigma_p)

    n0 = cat.normalization()
    w = packet(-0.5 * d) + packet(0.5 * d)
    w += 2.0 * np.cos(np.outer(np.ones_like(q), p) * d / hbar) * packet(0.0)
    return WignerGrid(q, p, n0 * w, osc, th)


def equilibrium_wigner(osc: OscillatorSpec, th: ThermalSpec, grid) -> WignerGrid:
    """Thermal equilibrium distribution

        W0 = exp{ -(p^2 + m^2 w0^2 q^2) / ((2N+1) m hbar w0) } / ((2N+1) pi hbar),

    stationary under the whole constant-coefficient family.  K = 0 has no
    normalizable equilibrium and is rejected.
    """
    if osc.spring_constant <= 0:
        raise ValueError("no normalizable equilibrium state for K = 0")
    q, p = _grid_axes(grid)
    two_n1 = occupation_factor(osc, th)
    m, w0, hbar = osc.mass, osc.omega0, osc.hbar
    denom = two_n1 * m * hbar * w0
    w = np.exp(-(np.add.outer((m * w0 * q) ** 2, p**2)) / denom) / (two_n1 * np.pi * hbar)
    return WignerGrid(q, p, w, osc, th)


def marginal_q(w: WignerGrid):
    """P(q) = int W dp (trapezoid)."""
    return np.trapezoid(w.values, w.p, axis=1)


def marginal_p(w: WignerGrid):
    """P(p) = int W dq (trapezoid)."""
    return np.trapezoid(w.values, w.q, axis=0)


def moments(w: WignerGrid):
    """(<q>, <p>, <q^2>, <p^2>, <qp>_sym) by grid quadrature."""
    pq = marginal_q(w)
    pp = marginal_p(w)
    norm = np.trapezoid(pq, w.q)
    mq = np.trapezoid(pq * w.q, w.q) / norm
    mp = np.trapezoid(pp * w.p, w.p) / norm
    mq2 = np.trapezoid(pq * w.q**2, w.q) / norm
    mp2 = np.trapezoid(pp * w.p**2, w.p) / norm
    qp = np.trapezoid(np.trapezoid(w.values * np.outer(w.q, w.p), w.p, axis=1), w.q) / norm
    return mq, mp, mq2, mp2, qp


_MAGIC = "qbrownian-wigner-grid v1"


def save_grid(path, w: WignerGrid):
    """Dump format: text header (axes, steps), then float64 values in
    q-index-major order."""
    header = io.StringIO()
    header.write(f"# {_MAGIC}\n")
    header.write(f"# nq={w.q.size} np={w.p.size}\n")
    header.write(f"# q0={float(w.q[0])!r} dq={w.dq!r}\n")
    header.write(f"# p0={float(w.p[0])!r} dp={w.dp!r}\n")
    header.write("# units: W in 1/(length*momentum); layout: q-index major float64\n")
    with open(path, "wb") as fh:
        fh.write(header.getvalue().encode())
        fh.write(np.ascontiguousarray(w.values, dtype=np.float64).tobytes())


def load_grid(path) -> WignerGrid:
    with open(path, "rb") as fh:
        first = fh.readline().decode()
        if _MAGIC not in first:
            raise ValueError(f"{path} is not a Wigner grid dump")
        sizes = dict(tok.split("=") for tok in fh.readline().decode()[1:].split())
        qline = dict(tok.split("=") for tok in fh.readline().decode()[1:].split())
        pline = dict(tok.split("=") for tok in fh.readline().decode()[1:].split())
        fh.readline()  # units line
        nq, np_ = int(sizes["nq"]), int(sizes["np"])
        q = float(qline["q0"]) + float(qline["dq"]) * np.arange(nq)
        p = float(pline["p0"]) + float(pline["dp"]) * np.arange(np_)
        data = np.frombuffer(fh.read(nq * np_ * 8), dtype=np.float64).reshape(nq, np_)
    return WignerGrid(q, p, data.copy())
