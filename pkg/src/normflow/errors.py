"""Exception types shared across the package.

Input problems (bad dimensions, undecidable signs, malformed configs) derive
from ``ValueError``; a failed quantitative bound is a ``BoundViolation`` and
carries a machine-readable witness so the CLI can dump it and exit with a
distinct code.
"""

from __future__ import annotations

from typing import Any


class DimensionMismatchError(ValueError):
    """Two objects with incompatible numbers of degrees of freedom."""


class AmbiguousSignError(ValueError):
    """Float-mode inner product too close to zero to classify.

    Raised when |<omega, q>| <= tol but q is not in the declared lattice;
    the caller cannot know whether q is resonant.
    """


class DegenerateLatticeError(ValueError):
    """No nonresonant integer vector exists in the requested ball."""


class NotCorankOneError(ValueError):
    """Resonance lattice rank is not n - 1."""


class NoLimitError(ValueError):
    """An exp-polynomial with a nu = 0, s > 0 term has no limit at infinity."""


class TermBudgetError(RuntimeError):
    """An exp-polynomial exceeded the per-coefficient term cap."""


class DomainError(ValueError):
    """Evaluation point outside the guaranteed analyticity domain."""


class BoundViolation(RuntimeError):
    """A certified bound failed on concrete data.

    Parameters
    ----------
    module, operation : str
        Where the bound was checked.
    witness : dict
        Indices and values identifying the violating coefficient or point.
    """

    def __init__(self, module: str, operation: str, witness: dict[str, Any], message: str = ""):
        self.module = module
        self.operation = operation
        self.witness = witness
        text = message or f"bound violated in {module}.{operation}: {witness}"
        super().__init__(text)
