"""Photon-number quantization of the thermal EM field in 1D layered media.

The package solves the scalar wave equation across a stack of homogeneous
layers, builds the outgoing Green's function, and derives from it local
densities of states, position-resolved mean photon numbers and effective
temperatures, self-consistent temperature profiles of passive layers, and
the spectral force densities acting on the structure.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateBasisError,
    DivergentSourceError,
    InterfacePointError,
    MissingTemperatureError,
    PhotonStackError,
)
from .stack import (
    ConstantIndex,
    Layer,
    LayerSlices,
    LayerStack,
    TabulatedIndex,
    TemperatureProfile,
    build_stack,
    load_stack,
    serialize_stack,
)
from .greens import (
    BasisPair,
    VARIANT_FLIPPED,
    VARIANT_NORMAL,
    WaveBasis,
    greens_function,
    region_integrals,
    solve_bases,
    solve_wave_basis,
)
from .spectral import (
    LdosTriplet,
    PhotonNumberTriplet,
    TemperatureTriplet,
    effective_temperatures,
    ldos,
    ldos_closure_residuals,
    ldos_gradient,
    occupation_temperature,
    photon_numbers,
    source_occupation,
)
from .thermo import (
    BalanceResult,
    default_balance_grid,
    net_emission,
    solve_self_consistent,
)
from .mechanics import (
    EnergyPressureSample,
    ForceDensitySample,
    IntegratedForce,
    SpectralField,
    energy_pressure,
    force_density,
    frequency_integrated_force,
    net_force,
    net_force_occupation_route,
    spectral_field,
)
from .scan import GridSpec, ScanResult, ScanSpec, run_scan
