"""
Deterministic rounding quantizer onto the lattice {t * delta : t integer}.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True)
class QuantizerConfig:
    """Quantization resolution; delta = 0 disables quantization."""

    delta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.delta) or self.delta < 0:
            raise InvalidArgumentError(f"delta must be a finite nonnegative number, got {self.delta}")

    @property
    def is_identity(self) -> bool:
        return self.delta == 0.0


def quantize_scalar(y: float, q: QuantizerConfig) -> float:
    """
    Round y to the lattice point t*delta with (t - 1/2)delta <= y < (t + 1/2)delta.

    Boundary points round up, so Q(-1.5) = -1 for delta = 1.
    """
    if not math.isfinite(y):
        raise InvalidArgumentError(f"cannot quantize non-finite value {y}")
    if q.is_identity:
        return y
    return math.floor(y / q.delta + 0.5) * q.delta


def quantize_array(w: np.ndarray, q: QuantizerConfig) -> np.ndarray:
    """Entrywise quantization of an array of any shape; returns a new array."""
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError("cannot quantize non-finite entries")
    if q.is_identity:
        return w.copy()
    return np.floor(w / q.delta + 0.5) * q.delta


def quantize_vector(w: np.ndarray, q: QuantizerConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quantize a vector and report the quantization error.

    Returns:
        Tuple of (w_q, e) with e = w_q - w and ||e||_2 <= delta * sqrt(L) / 2
    """
    w = np.asarray(w, dtype=float)
    w_q = quantize_array(w, q)
    return w_q, w_q - w


def error_bound(length: int, q: QuantizerConfig) -> float:
    """Worst-case Euclidean quantization error of a length-L vector."""
    return 0.5 * q.delta * math.sqrt(length)
