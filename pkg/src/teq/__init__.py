"""Time-energy cost of quantum operations.

Submodules: ``matcore`` (linear algebra), ``ucost`` (unitaries and Kraus
stacks), ``povm`` (measurement bounds), ``optics`` (linear-optics models),
``usd`` (unambiguous discrimination of symmetric families), ``cli``.
"""

from .matcore import DomainError, NumericError, TeqError, Tolerance
from .povm import BoundReport, EnumerationBudget, Povm, povm_cost, validate_povm
from .ucost import KrausStack, maxnorm_unitary, partial_u_bounds

__all__ = [
    "BoundReport",
    "DomainError",
    "EnumerationBudget",
    "KrausStack",
    "NumericError",
    "Povm",
    "TeqError",
    "Tolerance",
    "maxnorm_unitary",
    "partial_u_bounds",
    "povm_cost",
    "validate_povm",
]
