"""
Accelerated proximal gradient (FISTA-type) for strongly convex composite problems.
"""
import math
from typing import Callable, Tuple

import numpy as np

from ..errors import NumericalError

GradFn = Callable[[np.ndarray], np.ndarray]
ProxFn = Callable[[np.ndarray, float], np.ndarray]


def gradient_mapping_norm(x: np.ndarray, grad: GradFn, prox: ProxFn, lipschitz: float) -> float:
    """||L (x - prox_{h/L}(x - grad(x)/L))||, zero exactly at a minimizer of g + h."""
    step = 1.0 / lipschitz
    return float(lipschitz * np.linalg.norm(x - prox(x - step * grad(x), step)))


def accelerated_proximal_gradient(
    grad: GradFn,
    prox: ProxFn,
    x0: np.ndarray,
    lipschitz: float,
    strong_convexity: float = 0.0,
    tol: float = 1e-10,
    max_iterations: int = 100_000,
    relative: bool = True,
) -> Tuple[np.ndarray, float, int]:
    """
    Minimize g + h where g is L-smooth (and mu-strongly convex) and h has an easy prox.

    Uses the constant momentum (sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu)) when
    mu > 0 and the usual t-sequence otherwise. Stops once the gradient
    mapping at the returned point is at most tol (times 1 + ||x|| if relative).

    Args:
        grad: Gradient of g
        prox: prox(v, step) of step * h
        x0: Starting point
        lipschitz: Lipschitz constant L of grad
        strong_convexity: Strong convexity modulus mu of g (0 if unknown)
        tol: Stopping tolerance on the gradient mapping
        max_iterations: Iteration cap
        relative: Scale tol by (1 + ||x||)

    Returns:
        Tuple of (x, residual, iterations)

    Raises:
        NumericalError: if the tolerance is not met within max_iterations
    """
    if lipschitz <= 0 or not math.isfinite(lipschitz):
        raise NumericalError(f"invalid Lipschitz constant {lipschitz}")
    step = 1.0 / lipschitz
    momentum = None
    if strong_convexity > 0:
        ratio = math.sqrt(strong_convexity / lipschitz)
        momentum = (1.0 - ratio) / (1.0 + ratio)

    x = np.array(x0, dtype=float)
    y = x.copy()
    t = 1.0
    residual = math.inf

    for it in range(1, max_iterations + 1):
        x_new = prox(y - step * grad(y), step)
        threshold = tol * (1.0 + float(np.linalg.norm(x_new))) if relative else tol

        # cheap test at y first, exact test at the candidate only when it passes
        if lipschitz * np.linalg.norm(x_new - y) <= threshold:
            residual = gradient_mapping_norm(x_new, grad, prox, lipschitz)
            if residual <= threshold:
                return x_new, residual, it

        if momentum is None:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_new
            t = t_new
        else:
            beta = momentum
        y = x_new + beta * (x_new - x)
        x = x_new

    residual = gradient_mapping_norm(x, grad, prox, lipschitz)
    raise NumericalError(
        f"proximal gradient did not reach tolerance {tol:g} in {max_iterations} iterations",
        residual=residual,
    )
