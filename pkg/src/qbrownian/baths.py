"""Bath memory models, response function and thermal factors.

Everything downstream (Green functions, fluctuation integrals, Wigner
evolution) is driven by three small value types defined here and by the
complex viscosity mu(z) and susceptibility alpha(z) they induce.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "BathKind",
    "BathSpec",
    "OscillatorSpec",
    "ThermalSpec",
    "ResonancePoleError",
    "memory_fourier",
    "response",
    "occupation_factor",
    "coth",
]


class BathKind(Enum):
    OHMIC = "ohmic"
    SINGLE_RELAXATION_TIME = "single_relaxation_time"


class ResonancePoleError(ValueError):
    """Raised when alpha(omega) is evaluated on an undamped resonance pole."""


@dataclass(frozen=True)
class BathSpec:
    """Heat-bath memory model.

    kind : Ohmic (memoryless, mu(z) = m*gamma) or single relaxation time
        with kernel mu(t) = (m*gamma/tau) exp(-t/tau), t >= 0.
    gamma : decay constant (frequency units), >= 0.
    tau : bath relaxation time, used only by SINGLE_RELAXATION_TIME.
    mass : particle mass the friction constant refers to.
    """

    kind: BathKind = BathKind.OHMIC
    gamma: float = 0.1
    tau: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.mass <= 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if self.kind is BathKind.SINGLE_RELAXATION_TIME and self.tau <= 0:
            raise ValueError("single-relaxation-time bath needs tau > 0")

    @property
    def zeta(self) -> float:
        """Friction constant zeta = m*gamma."""
        return self.mass * self.gamma

    def memory_kernel(self, t):
        """mu(t) for t >= 0. Only defined for the single-relaxation-time
        bath; the Ohmic kernel is a delta and has no pointwise values."""
        if self.kind is BathKind.OHMIC:
            raise ValueError("Ohmic memory kernel is a delta function")
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, (self.mass * self.gamma / self.tau) * np.exp(-np.clip(t, 0, None) / self.tau), 0.0)


@dataclass(frozen=True)
class OscillatorSpec:
    """Oscillator parameters; spring_constant = 0 is the free particle."""

    mass: float = 1.0
    spring_constant: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if self.spring_constant < 0:
            raise ValueError(f"spring_constant must be >= 0, got {self.spring_constant}")
        if self.hbar <= 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")

    @property
    def omega0(self) -> float:
        return np.sqrt(self.spring_constant / self.mass)


@dataclass(frozen=True)
class ThermalSpec:
    """Temperature in energy units (Boltzmann constant absorbed)."""

    kT: float = 0.0

    def __post_init__(self):
        if self.kT < 0:
            raise ValueError(f"kT must be >= 0, got {self.kT}")

    def mean_velocity(self, osc: OscillatorSpec) -> float:
        """Mean thermal velocity sqrt(kT/m)."""
        return np.sqrt(self.kT / osc.mass)


def coth(x):
    """coth(x) for x >= 0, stable at both ends.

    Below x = 1e-4 the Laurent form 1/x + x/3 is used to avoid
    cancellation; x = 0 (or inf) maps to inf (1).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-4
    with np.errstate(divide="ignore"):
        out[small] = 1.0 / x[small] + x[small] / 3.0
    big = ~small
    out[big] = 1.0 / np.tanh(x[big])
    if out.ndim == 0:
        return float(out)
    return out


def memory_fourier(bath: BathSpec, z):
    """Fourier transform mu(z) of the memory kernel, Im z >= 0.

    Ohmic: m*gamma identically. Single relaxation time:
    m*gamma / (1 - i z tau), which tends to the Ohmic value as tau -> 0
    and satisfies Re mu(omega + i0+) >= 0 on the real axis.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < -1e-300):
        raise ValueError("memory_fourier is defined for Im z >= 0 only")
    if bath.kind is BathKind.OHMIC:
        out = np.full_like(z, bath.mass * bath.gamma)
    else:
        out = bath.mass * bath.gamma / (1.0 - 1j * z * bath.tau)
    if out.ndim == 0:
        return complex(out)
    return out


def response(bath: BathSpec, osc: OscillatorSpec, omega):
    """Susceptibility alpha(omega + i0+) = 1/(-m w^2 - i w mu + K).

    Raises ResonancePoleError on the undamped pole (gamma = 0, K > 0,
    omega = +-omega0) instead of returning an infinity.
    """
    omega = np.asarray(omega, dtype=float)
    if bath.gamma == 0.0:
        k = osc.spring_constant
        if k > 0 and np.any(np.isclose(np.abs(omega), osc.omega0, rtol=1e-12, atol=0)):
            raise ResonancePoleError(
                f"alpha has an undamped pole at omega = +-{osc.omega0:g} for gamma = 0"
            )
        if k == 0 and np.any(omega == 0.0):
            raise ResonancePoleError("alpha diverges at omega = 0 for a free undamped particle")
    mu = memory_fourier(bath, omega + 0j)
    out = 1.0 / (-osc.mass * omega**2 - 1j * omega * mu + osc.spring_constant)
    if out.ndim == 0:
        return complex(out)
    return out


def imag_response(bath: BathSpec, osc: OscillatorSpec, omega):
    """Im alpha(omega + i0+), written to stay finite as omega -> 0.

    Im alpha = Re(mu) / (omega * |m omega + i mu|^2), which for K = 0
    behaves like 1/omega near zero and is what the fluctuation
    quadratures integrate against.
    """
    omega = np.asarray(omega, dtype=float)
    mu = memory_fourier(bath, omega + 0j)
    m, k = osc.mass, osc.spring_constant
    denom = np.abs(k - m * omega**2 - 1j * omega * mu) ** 2
    num = omega * mu.real
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, num / denom, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def occupation_factor(osc: OscillatorSpec, th: ThermalSpec) -> float:
    """2(N + 1/2) = coth(hbar omega0 / 2 kT); exactly 1 at kT = 0."""
    if osc.omega0 <= 0:
        raise ValueError("occupation_factor needs omega0 > 0")
    if th.kT == 0.0:
        return 1.0
    return float(coth(osc.hbar * osc.omega0 / (2.0 * th.kT)))
