"""Convexification-based recovery of c(x) in c u_tt = Lap u from single-source boundary data."""

from ._core import (
    ConfigError,
    InputError,
    NumericalError,
    PolyBasis,
    __version__,
    c_from_tau,
    carleman_sweep,
    default_config,
    double_time_integral,
    phantom,
    phantom_names,
    pick_arrival,
    project_basis,
    run_scenario,
    travel_times,
)

__all__ = [
    "ConfigError",
    "InputError",
    "NumericalError",
    "PolyBasis",
    "__version__",
    "c_from_tau",
    "carleman_sweep",
    "default_config",
    "double_time_integral",
    "phantom",
    "phantom_names",
    "pick_arrival",
    "project_basis",
    "run_scenario",
    "travel_times",
]
