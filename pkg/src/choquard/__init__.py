"""Numerical laboratory for critical Choquard equations with Riesz-potential nonlinearities.

Radial ground states on the Nehari manifold, sharp Hardy-Littlewood-Sobolev
and Sobolev constants, bubble asymptotics and semiclassical concentration.
"""
from .constants import (critical_level, extremal_field, hls_constant, sharp_constants,
                        shl_constant, sobolev_constant)
from .functional import EnergyBreakdown, ProblemParams, energy, energy_gradient, nehari_residual
from .grid import Field, RadialGrid, make_grid
from .riesz import RieszKernel, build_kernel, double_energy, riesz_apply
from .solver import SolveReport, SolverConfig, ground_state, nehari_project, ray_max

__version__ = "0.1.0"

__all__ = [
    "critical_level", "extremal_field", "hls_constant", "sharp_constants", "shl_constant",
    "sobolev_constant", "EnergyBreakdown", "ProblemParams", "energy", "energy_gradient",
    "nehari_residual", "Field", "RadialGrid", "make_grid", "RieszKernel", "build_kernel",
    "double_energy", "riesz_apply", "SolveReport", "SolverConfig", "ground_state",
    "nehari_project", "ray_max",
]
