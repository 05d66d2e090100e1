"""Fiducial, confidence and objective-Bayes distributions.

Submodules
----------
numerics      quadrature, root finding, special functions, seeded RNG
models        catalog sampling models and their sufficient statistics
fiducial1d    right/left/arithmetic/geometric fiducials for a scalar parameter
stepwise      step-by-step joint fiducials for multi-parameter models
crnef         conditionally reducible natural exponential families
gfd           generalized fiducial densities
inference     confidence curves, coverage, risk and Bayes comparisons
cli           the ``fid`` command
"""

from . import crnef, fiducial1d, gfd, inference, models, numerics, stepwise
from .errors import BoundaryError, BracketError, ConfigError, DomainError, FiducialError, IntegrationError
from .fiducial1d import Fiducial1D, Variant, fiducial
from .models import ModelSpec, model

__version__ = "0.1.0"

__all__ = [
    "crnef",
    "fiducial1d",
    "gfd",
    "inference",
    "models",
    "numerics",
    "stepwise",
    "BoundaryError",
    "BracketError",
    "ConfigError",
    "DomainError",
    "FiducialError",
    "IntegrationError",
    "Fiducial1D",
    "Variant",
    "fiducial",
    "ModelSpec",
    "model",
]
