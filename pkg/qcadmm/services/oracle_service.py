"""
Centralized ground truth: the minimizer of sum_i f_i over a single variable.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from ..errors import InvalidArgumentError, NumericalError
from ..utils.linalg_utils import soft_threshold
from ..utils.prox_utils import accelerated_proximal_gradient, gradient_mapping_norm
from .objective_service import LeastSquaresL1, LocalObjective, QuadraticBox, ScaledQuadratic, check_problem

logger = logging.getLogger(__name__)

REFERENCE_TOL = 1e-10
REFERENCE_MAX_ITERATIONS = 1_000_000


@dataclass(frozen=True)
class ReferenceSolution:
    x_star: np.ndarray
    objective_value: float
    optimality_residual: float
    smooth_only: bool
    iterations: int = 0

    def to_dict(self) -> Dict:
        return {
            "x_star": self.x_star.tolist(),
            "objective_value": self.objective_value,
            "optimality_residual": self.optimality_residual,
            "smooth_only": self.smooth_only,
            "iterations": self.iterations,
        }


def _summed_smooth(objs: List[LocalObjective]) -> Tuple[np.ndarray, np.ndarray]:
    hess = sum(obj.smooth_hessian() for obj in objs)
    lin = sum(obj.smooth_linear() for obj in objs)
    return hess, lin


def _box_intersection(objs: List[LocalObjective], dim: int) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    boxes = [obj for obj in objs if isinstance(obj, QuadraticBox)]
    if not boxes:
        return None
    lo = np.max([obj.lo for obj in boxes], axis=0)
    hi = np.min([obj.hi for obj in boxes], axis=0)
    if np.any(lo > hi):
        raise InvalidArgumentError("intersection of the agents' boxes is empty")
    return lo, hi


def _summed_prox(objs: List[LocalObjective], dim: int):
    """prox of the summed non-smooth parts: soft-threshold by the total l1 weight, then clip."""
    total_xi = sum(obj.xi for obj in objs if isinstance(obj, LeastSquaresL1))
    box = _box_intersection(objs, dim)

    def prox(v: np.ndarray, step: float) -> np.ndarray:
        out = soft_threshold(v, step * total_xi) if total_xi > 0 else np.array(v, dtype=float)
        if box is not None:
            out = np.clip(out, box[0], box[1])
        return out

    return prox


def optimality_residual(objs: List[LocalObjective], x, smooth_only: bool = False) -> float:
    """
    Distance of 0 from the summed subdifferential at x, measured as a residual.

    Smooth problems use ||sum_i grad g_i(x)||; otherwise the gradient mapping
    of the summed problem with step 1 / sum_i M_gi.
    """
    dim = check_problem(objs)
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,) or not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"x must be a finite vector of length {dim}")

    hess, lin = _summed_smooth(objs)
    if smooth_only or not any(obj.has_nonsmooth for obj in objs):
        return float(np.linalg.norm(hess @ x + lin))

    lipschitz = sum(obj.big_m_g for obj in objs)
    return gradient_mapping_norm(x, lambda v: hess @ v + lin, _summed_prox(objs, dim), lipschitz)


def verify_optimality(objs: List[LocalObjective], x, tol: float = REFERENCE_TOL, smooth_only: bool = False) -> bool:
    """Whether 0 lies within tol of the summed subdifferential at x."""
    return optimality_residual(objs, x, smooth_only=smooth_only) <= tol


def solve_reference(
    objs: List[LocalObjective],
    smooth_only: bool = False,
    tol: float = REFERENCE_TOL,
    max_iterations: int = REFERENCE_MAX_ITERATIONS,
) -> ReferenceSolution:
    """
    Solve min_x sum_i f_i(x) (or sum_i g_i(x) when smooth_only).

    Args:
        objs: Local objectives, one per agent
        smooth_only: Drop the non-smooth parts h_i
        tol: Residual tolerance (scaled by the data magnitude for direct solves)
        max_iterations: Iteration cap for the iterative path

    Returns:
        ReferenceSolution with the minimizer and its residual

    Raises:
        NumericalError: if the solution misses its tolerance
    """
    if tol <= 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    dim = check_problem(objs)
    iterations = 0

    if all(isinstance(obj, ScaledQuadratic) for obj in objs):
        # separable with Hessian a multiple of I: clamping the free minimizer is exact
        x = -sum(obj.b for obj in objs) / (2.0 * sum(obj.a for obj in objs))
        box = None if smooth_only else _box_intersection(objs, dim)
        if box is not None:
            x = np.clip(x, box[0], box[1])
    elif smooth_only or not any(obj.has_nonsmooth for obj in objs):
        hess, lin = _summed_smooth(objs)
        try:
            x = scipy.linalg.solve(hess, -lin, assume_a="pos")
        except (scipy.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"reference linear solve failed: {e}") from e
    else:
        hess, lin = _summed_smooth(objs)
        x, _, iterations = accelerated_proximal_gradient(
            lambda v: hess @ v + lin,
            _summed_prox(objs, dim),
            np.zeros(dim),
            lipschitz=sum(obj.big_m_g for obj in objs),
            strong_convexity=sum(obj.m_g for obj in objs),
            tol=tol,
            max_iterations=max_iterations,
            relative=False,
        )

    residual = optimality_residual(objs, x, smooth_only=smooth_only)
    if iterations == 0:
        # direct solves are exact up to rounding, which grows with the data
        hess, lin = _summed_smooth(objs)
        limit = tol * (1.0 + float(np.linalg.norm(hess @ x)) + float(np.linalg.norm(lin)))
        if not residual <= limit:
            raise NumericalError(f"reference solution misses tolerance {limit:.3e}", residual=residual)
    if smooth_only:
        value = float(sum(obj.smooth_value(x) for obj in objs))
    else:
        value = float(sum(obj.value(x) for obj in objs))

    logger.debug(
        "Reference solution (smooth_only=%s): residual %.2e after %d iterations",
        smooth_only, residual, iterations,
    )
    return ReferenceSolution(
        x_star=x,
        objective_value=value,
        optimality_residual=residual,
        smooth_only=smooth_only,
        iterations=iterations,
    )
