"""Numeric data for consequences and axiom systems."""

from .noise import (
    CONSEQUENCE_LEVELS,
    FAMILIES,
    SYSTEM_LEVELS,
    NoiseSpec,
    apply_noise,
    exponential_rate,
    lognormal_shape,
    noise_draws,
)
from .ode import Trajectory, integrate_batch, integrate_rk45
from .roots import real_roots, solve_last_variable
from .sampling import (
    BOUND,
    CompiledPoly,
    DataTable,
    InducedODE,
    SampleRange,
    biased_data_order,
    gen_biased_system_data,
    gen_consequence_data,
    induced_ode,
    sample_range,
)

__all__ = [
    "BOUND",
    "CONSEQUENCE_LEVELS",
    "CompiledPoly",
    "DataTable",
    "FAMILIES",
    "InducedODE",
    "NoiseSpec",
    "SYSTEM_LEVELS",
    "SampleRange",
    "Trajectory",
    "apply_noise",
    "biased_data_order",
    "exponential_rate",
    "gen_biased_system_data",
    "gen_consequence_data",
    "induced_ode",
    "integrate_batch",
    "integrate_rk45",
    "lognormal_shape",
    "noise_draws",
    "real_roots",
    "sample_range",
    "solve_last_variable",
]
