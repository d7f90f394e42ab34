"""Reproduction ratios and principal eigenvalues of time-periodic
cooperative reaction-diffusion systems on an interval.

Thin wrapper over the compiled extension; every entry point takes the JSON
config text used by the command-line tool.
"""

from ._core import (
    ComputeError,
    ConfigError,
    lambda_star,
    periodic,
    r0,
    spectral_radius,
    sweep_csv,
    validate,
    zika,
)

__all__ = [
    "ComputeError",
    "ConfigError",
    "lambda_star",
    "periodic",
    "r0",
    "spectral_radius",
    "sweep_csv",
    "validate",
    "zika",
]
