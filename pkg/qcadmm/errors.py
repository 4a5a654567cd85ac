"""
Exception hierarchy shared by every qcadmm module.
"""
from typing import Optional


class QCADMMError(Exception):
    """Base class for all errors raised by the package."""


class InvalidArgumentError(QCADMMError, ValueError):
    """An argument is outside its valid range or has the wrong shape."""


class QuantizationRequiredError(InvalidArgumentError):
    """A quantity that only exists for a positive quantization step was requested with delta = 0."""


class NumericalError(QCADMMError, ArithmeticError):
    """A numerical routine failed (no convergence, singular solve, eigensolver failure)."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual

    def __str__(self) -> str:
        base = super().__str__()
        if self.residual is None:
            return base
        return f"{base} (residual={self.residual:.3e})"
