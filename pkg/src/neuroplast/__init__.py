"""Phenotype-structured tumour/axon model: simulation, denervation and calibration."""

from neuroplast.model import (
    ModelParams,
    OnsetConvention,
    PRESETS,
    preset,
    validate_params,
)
from neuroplast.solver import SimGrid, Trajectory, build_grid, simulate
from neuroplast.denervation import DenervationSchedule, invasive_potential

__all__ = [
    "ModelParams",
    "OnsetConvention",
    "PRESETS",
    "preset",
    "validate_params",
    "SimGrid",
    "Trajectory",
    "build_grid",
    "simulate",
    "DenervationSchedule",
    "invasive_potential",
]

__version__ = "0.1.0"
