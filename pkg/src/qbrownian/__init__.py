"""Phase-space simulator for the damped quantum oscillator.

Wigner distributions evolved under the constant-coefficient master /
pre-master family, the exact local-in-time equation, and the Gaussian
transition kernel, with the decoherence attenuation factors of cat
states extracted from the resulting densities.
"""

from .baths import (
    BathKind,
    BathSpec,
    OscillatorSpec,
    ResonancePoleError,
    ThermalSpec,
    memory_fourier,
    occupation_factor,
    response,
)
from .greens import GreenTable, green_initial_value, green_stationary
from .quadrature import (
    CorrelationFunctions,
    DriveKind,
    DriveSpec,
    FluctuationMoments,
    LowTemperatureError,
    commutator_x,
    correlation_functions,
    driven_msd,
    fluctuation_moments,
    mean_square_displacement,
    position_autocorrelation,
)
from .wigner import (
    CatSpec,
    GridSpec,
    WignerGrid,
    cat_wigner,
    equilibrium_wigner,
    gaussian_wigner,
    load_grid,
    marginal_p,
    marginal_q,
    moments,
    save_grid,
)
from .evolve import (
    EvolutionConfig,
    HPZCoefficients,
    WignerTrajectory,
    evolve_hpz,
    evolve_lambda,
    hpz_coefficients,
    kernel_propagate,
    probability_density_fourier,
)
from .decoherence import (
    AttenuationSeries,
    Regime,
    attenuation_from_density,
    closed_form_driven,
    closed_form_entangled,
    closed_form_thermal_initial,
    closed_form_zero_T_initial,
    momentum_space_diagnostic,
    simulate_attenuation_fourier,
)

__version__ = "0.1.0"
