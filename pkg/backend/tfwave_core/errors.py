"""
Exception hierarchy for tfwave_core.

Every error raised by the numerical library derives from TfwaveError, so the
CLI error handler can categorise failures without string matching.
"""

from __future__ import annotations

from typing import Optional


class TfwaveError(Exception):
    """Base class for all library errors."""


class GammaPoleError(TfwaveError, ValueError):
    """Gamma evaluated at a non-positive integer."""


class GammaOverflowError(TfwaveError, OverflowError):
    """Gamma argument beyond the double-precision range (x > 171.6)."""


class MittagLefflerConvergenceError(TfwaveError, ArithmeticError):
    """The evaluation scheme could not certify the requested tolerance."""

    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message} (achieved relative error {achieved_error:.3e})")
        self.achieved_error = achieved_error


class InsufficientPointsError(TfwaveError, ValueError):
    """Time series too short for the requested quadrature."""


class ModelValidationError(TfwaveError, ValueError):
    """A domain invariant is violated; the message names the invariant."""

    def __init__(self, invariant: str):
        super().__init__(f"invariant violated: {invariant}")
        self.invariant = invariant


class UnknownNonlinearityError(TfwaveError, ValueError):
    """Nonlinearity kind not in the supported set."""


class NonlinearityMismatchError(TfwaveError, ValueError):
    """Operation requires zero nonlinearities but the model carries some."""


class CirculantEmbeddingError(TfwaveError, ArithmeticError):
    """Circulant embedding produced a negative spectrum."""


class DivisibilityError(TfwaveError, ValueError):
    """Coarsening factor does not divide the number of steps."""


class GridMismatchError(TfwaveError, ValueError):
    """Trajectories or noise paths live on incompatible grids."""


class SolverOverflowError(TfwaveError, ArithmeticError):
    """Non-finite or exploding modal value during a march."""

    def __init__(self, step: int, mode: int, value: float):
        super().__init__(f"overflow guard tripped at step m={step}, mode k={mode + 1} (|v|={value:.3e})")
        self.step = step
        self.mode = mode
        self.value = value


class DegenerateLadderError(TfwaveError, ValueError):
    """Rate fit input with too few or non-positive points."""


class ReferenceResolutionError(TfwaveError, ValueError):
    """Spectral reference does not dominate the FEM space (K < 4M)."""


class ConfigParseError(TfwaveError, ValueError):
    """Malformed or unknown entry in a key=value configuration file."""

    def __init__(self, message: str, line_number: Optional[int] = None, key: Optional[str] = None):
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line_number = line_number
        self.key = key
