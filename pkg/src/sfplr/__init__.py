"""Linearity tests for semi-functional partially linear regression models."""
from .estimation import FitConfig, MixedDataset, SFPLRFit, fit
from .fda import FunctionalSample, Grid
from .fpca import EigenSystem, empirical_eigen
from .linearity import TestConfig, TestReport, run_test

__version__ = "0.1.0"

__all__ = [
    "EigenSystem",
    "FitConfig",
    "FunctionalSample",
    "Grid",
    "MixedDataset",
    "SFPLRFit",
    "TestConfig",
    "TestReport",
    "empirical_eigen",
    "fit",
    "run_test",
    "__version__",
]
