"""
Small dense linear-algebra helpers shared by the services.
"""
from typing import Tuple

import numpy as np
import scipy.linalg

from ..errors import InvalidArgumentError, NumericalError

PINV_RCOND = 1e-10


def as_agent_matrix(v, n_agents: int, name: str = "vector") -> np.ndarray:
    """
    Return an agent-stacked vector as an (N, M) float array.

    Args:
        v: Array of shape (N, M), or flat of length N*M (agent-major)
        n_agents: Number of agents N
        name: Name used in error messages

    Returns:
        Array of shape (N, M)
    """
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 1:
        if arr.size % n_agents != 0 or arr.size == 0:
            raise InvalidArgumentError(
                f"{name} has length {arr.size}, not a positive multiple of N={n_agents}"
            )
        arr = arr.reshape(n_agents, -1)
    elif arr.ndim != 2 or arr.shape[0] != n_agents:
        raise InvalidArgumentError(f"{name} has shape {arr.shape}, expected ({n_agents}, M)")
    return arr


def min_norm_solve(a: np.ndarray, b: np.ndarray, rcond: float = PINV_RCOND) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minimal-norm least-squares solution of a @ x = b.

    Singular values below rcond * sigma_max are treated as zero.

    Args:
        a: Matrix of shape (p, q)
        b: Right-hand side of shape (p,) or (p, k)

    Returns:
        Tuple of (solution x, residual b - a @ x)
    """
    try:
        x, _, _, _ = scipy.linalg.lstsq(a, b, cond=rcond, lapack_driver="gelsd")
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"least-squares solve failed: {e}") from e
    return x, b - a @ x


def soft_threshold(v: np.ndarray, threshold) -> np.ndarray:
    """Entrywise soft-thresholding, the prox of threshold * ||.||_1."""
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def symmetric_eigenvalues(a: np.ndarray) -> np.ndarray:
    """
    Ascending eigenvalues of a symmetric matrix.

    Raises:
        NumericalError: if the eigensolver fails or returns non-finite values
    """
    try:
        eigs = scipy.linalg.eigvalsh(a)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"symmetric eigensolver failed: {e}") from e
    if not np.all(np.isfinite(eigs)):
        raise NumericalError("symmetric eigensolver returned non-finite eigenvalues")
    return eigs
