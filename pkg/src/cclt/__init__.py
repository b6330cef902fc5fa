"""Conditional central limit theorems via exchangeable pairs.

Models, conditional-moment residuals, change-of-variable transforms, explicit
Wasserstein bounds and the numerical machinery that checks them.
"""

from . import models  # noqa: F401  (registers the concrete models)
from .core import (
    BoundReport, LatticeSpec, ModelState, MomentProfile, PairConstants, PairStep, ResidualSummary,
    build_model, model_contract, registered_models,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "LatticeSpec", "ModelState", "MomentProfile", "PairConstants", "PairStep",
    "ResidualSummary", "build_model", "model_contract", "registered_models",
]
