"""Optimal allocation and selection for one- and two-stage stratified samples."""

from ._core import (
    Constraint,
    Stratum,
    StratallocError,
    alloc_neyman,
    alloc_proportional,
    alloc_uniform,
    beat_1st,
    beat_1st_files,
    beat_2st_files,
    compute_threshold,
    deff_extended,
    deff_simple,
    effst_compute,
    inclusion_probabilities,
    rho_from_population,
    rho_from_sample,
    run_cli,
    sampford_select,
)

__version__ = "0.1.0"

__all__ = [
    "Constraint",
    "Stratum",
    "StratallocError",
    "alloc_neyman",
    "alloc_proportional",
    "alloc_uniform",
    "beat_1st",
    "beat_1st_files",
    "beat_2st_files",
    "compute_threshold",
    "deff_extended",
    "deff_simple",
    "effst_compute",
    "inclusion_probabilities",
    "rho_from_population",
    "rho_from_sample",
    "run_cli",
    "sampford_select",
]
