"""becpde: simulator and verification lab for a degenerate fourth-order
parabolic condensation model on (0, L).

The package provides the regularized weight construction, a conservative
flux-form spatial discretization with exact discrete mass conservation, an
implicit adaptive time stepper with blow-up and dead-core event detection,
the tracked estimate functionals, and a randomized verification lab for the
weighted interpolation inequalities the analysis rests on.
"""

__version__ = "0.1.0"

from . import functionals, grid, lab, model, params, regularization, stepper
from .errors import DomainError, InternalError, ValidationError
from .params import Params, RawParams, holder_exponents, nstar_root, physical_params, validate

__all__ = [
    "DomainError",
    "InternalError",
    "Params",
    "RawParams",
    "ValidationError",
    "functionals",
    "grid",
    "holder_exponents",
    "lab",
    "model",
    "nstar_root",
    "params",
    "physical_params",
    "regularization",
    "stepper",
    "validate",
]
