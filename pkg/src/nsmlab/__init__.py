"""Pseudo-spectral Navier-Stokes-Maxwell simulator and estimate lab."""
from ._kernels import BACKEND
from .spectral import Grid, SpectralField, make_grid

__version__ = "0.1.0"

__all__ = ["BACKEND", "Grid", "SpectralField", "make_grid", "__version__"]
