"""
Local objectives f_i = g_i + h_i and the per-agent x-update solver.

Every smooth part used here is a convex quadratic, grad g_i(x) = H_i x + c_i,
which the oracle exploits. The x-update of agent i minimizes

    f_i(x) + rho*|N_i|*||x||^2 + (alpha - rho*neighborhood_sum)^T x

where neighborhood_sum = |N_i| x_i + sum_j x_j (quantized or not, as the
caller decides).
"""
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Type

import numpy as np
import scipy.linalg

from ..errors import InvalidArgumentError, NumericalError
from ..utils.linalg_utils import soft_threshold, symmetric_eigenvalues
from ..utils.prox_utils import accelerated_proximal_gradient, gradient_mapping_norm

logger = logging.getLogger(__name__)

PROBLEM_STREAM = 1
SCENARIOS = ("quadratic_box", "lasso", "quadratic", "two_node")

INNER_TOL = 1e-10
INNER_MAX_ITERATIONS = 100_000


def _vector(values, name: str, dim: Optional[int] = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise InvalidArgumentError(f"{name} has length {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return arr


class LocalObjective(ABC):
    """Per-agent convex objective with a strongly convex quadratic smooth part."""

    variant: str = ""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension M of the decision variable."""

    @property
    @abstractmethod
    def m_g(self) -> float:
        """Strong convexity modulus of g_i."""

    @property
    @abstractmethod
    def big_m_g(self) -> float:
        """Lipschitz modulus of grad g_i."""

    @property
    def has_nonsmooth(self) -> bool:
        return False

    @abstractmethod
    def smooth_hessian(self) -> np.ndarray:
        """H_i with grad g_i(x) = H_i x + c_i."""

    @abstractmethod
    def smooth_linear(self) -> np.ndarray:
        """c_i with grad g_i(x) = H_i x + c_i."""

    @abstractmethod
    def smooth_value(self, x: np.ndarray) -> float:
        """g_i(x)."""

    def nonsmooth_value(self, x: np.ndarray) -> float:
        """h_i(x); +inf outside a constraint set."""
        return 0.0

    def prox_nonsmooth(self, v: np.ndarray, step: float) -> np.ndarray:
        """prox of step * h_i at v."""
        return np.array(v, dtype=float)

    def value(self, x) -> float:
        x = self._check_point(x)
        return self.smooth_value(x) + self.nonsmooth_value(x)

    def gradient_smooth(self, x) -> np.ndarray:
        x = self._check_point(x)
        return self.smooth_hessian() @ x + self.smooth_linear()

    def _check_point(self, x) -> np.ndarray:
        return _vector(x, "x", self.dim)

    def _linear_term(self, rho: float, degree: int, neighborhood_sum, alpha) -> np.ndarray:
        if rho <= 0:
            raise InvalidArgumentError(f"rho must be positive, got {rho}")
        if int(degree) != degree or degree < 1:
            raise InvalidArgumentError(f"degree must be a positive integer, got {degree}")
        ns = _vector(neighborhood_sum, "neighborhood_sum", self.dim)
        a = _vector(alpha, "alpha", self.dim)
        return a - rho * ns

    def solve_smooth_x_update(self, rho: float, degree: int, neighborhood_sum, alpha) -> np.ndarray:
        """
        Minimizer of the x-update with h_i dropped (the smooth-only update).

        Solves (H_i + 2 rho |N_i| I) x = -(c_i + alpha - rho * neighborhood_sum).
        """
        lin = self._linear_term(rho, degree, neighborhood_sum, alpha)
        system = self.smooth_hessian() + 2.0 * rho * degree * np.eye(self.dim)
        try:
            return scipy.linalg.solve(system, -(self.smooth_linear() + lin), assume_a="pos")
        except (scipy.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"smooth x-update solve failed: {e}") from e

    def solve_x_update(
        self,
        rho: float,
        degree: int,
        neighborhood_sum,
        alpha,
        x_init: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Unique minimizer of f_i(x) + rho*|N_i|*||x||^2 + (alpha - rho*neighborhood_sum)^T x."""
        return self.solve_smooth_x_update(rho, degree, neighborhood_sum, alpha)

    def x_update_residual(self, x, rho: float, degree: int, neighborhood_sum, alpha) -> float:
        """Gradient-mapping residual of the x-update subproblem at x (zero at its minimizer)."""
        x = self._check_point(x)
        lin = self._linear_term(rho, degree, neighborhood_sum, alpha)
        hess = self.smooth_hessian() + 2.0 * rho * degree * np.eye(self.dim)
        lin_total = self.smooth_linear() + lin
        lipschitz = self.big_m_g + 2.0 * rho * degree
        return gradient_mapping_norm(x, lambda v: hess @ v + lin_total, self.prox_nonsmooth, lipschitz)

    @abstractmethod
    def to_dict(self) -> Dict:
        """JSON-serializable description including the variant tag."""


@dataclass(eq=False)
class ScaledQuadratic(LocalObjective):
    """g_i(x) = a ||x||^2 + b^T x, h_i = 0."""

    a: float
    b: np.ndarray
    variant = "scaled_quadratic"

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise InvalidArgumentError(f"a must be positive, got {self.a}")
        self.a = float(self.a)
        self.b = _vector(self.b, "b")

    @property
    def dim(self) -> int:
        return self.b.size

    @property
    def m_g(self) -> float:
        return 2.0 * self.a

    @property
    def big_m_g(self) -> float:
        return 2.0 * self.a

    def smooth_hessian(self) -> np.ndarray:
        return 2.0 * self.a * np.eye(self.dim)

    def smooth_linear(self) -> np.ndarray:
        return self.b

    def smooth_value(self, x: np.ndarray) -> float:
        return float(self.a * x @ x + self.b @ x)

    def gradient_smooth(self, x) -> np.ndarray:
        x = self._check_point(x)
        return 2.0 * self.a * x + self.b

    def solve_smooth_x_update(self, rho: float, degree: int, neighborhood_sum, alpha) -> np.ndarray:
        lin = self._linear_term(rho, degree, neighborhood_sum, alpha)
        return -(lin + self.b) / (2.0 * self.a + 2.0 * rho * degree)

    def to_dict(self) -> Dict:
        return {"variant": self.variant, "a": self.a, "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, data: Dict) -> "ScaledQuadratic":
        return cls(a=data["a"], b=data["b"])


@dataclass(eq=False)
class QuadraticBox(ScaledQuadratic):
    """ScaledQuadratic plus the indicator of the box lo <= x <= hi."""

    lo: np.ndarray = field(default=None)
    hi: np.ndarray = field(default=None)
    variant = "quadratic_box"

    def __post_init__(self):
        super().__post_init__()
        if self.lo is None or self.hi is None:
            raise InvalidArgumentError("QuadraticBox requires lo and hi")
        self.lo = _vector(self.lo, "lo", self.dim)
        self.hi = _vector(self.hi, "hi", self.dim)
        if np.any(self.lo > self.hi):
            raise InvalidArgumentError("box is empty: some lo > hi")

    @property
    def has_nonsmooth(self) -> bool:
        return True

    def nonsmooth_value(self, x: np.ndarray) -> float:
        inside = np.all(x >= self.lo) and np.all(x <= self.hi)
        return 0.0 if inside else math.inf

    def prox_nonsmooth(self, v: np.ndarray, step: float) -> np.ndarray:
        return np.clip(v, self.lo, self.hi)

    def solve_x_update(self, rho, degree, neighborhood_sum, alpha, x_init=None) -> np.ndarray:
        # Hessian is a multiple of I, so clamping the unconstrained minimizer is exact
        return np.clip(self.solve_smooth_x_update(rho, degree, neighborhood_sum, alpha), self.lo, self.hi)

    def gradient_bound(self) -> float:
        """Exact max of ||grad g_i|| over the box (separable, attained coordinatewise at an endpoint)."""
        at_lo = np.abs(2.0 * self.a * self.lo + self.b)
        at_hi = np.abs(2.0 * self.a * self.hi + self.b)
        return float(np.linalg.norm(np.maximum(at_lo, at_hi)))

    def max_norm(self) -> float:
        """sup ||x||_2 over the box."""
        return float(np.linalg.norm(np.maximum(np.abs(self.lo), np.abs(self.hi))))

    def to_dict(self) -> Dict:
        data = super().to_dict()
        data.update({"variant": self.variant, "lo": self.lo.tolist(), "hi": self.hi.tolist()})
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "QuadraticBox":
        return cls(a=data["a"], b=data["b"], lo=data["lo"], hi=data["hi"])


@dataclass(eq=False)
class LeastSquaresL1(LocalObjective):
    """g_i(x) = 1/2 ||A x - y||^2, h_i(x) = xi ||x||_1."""

    a_mat: np.ndarray
    y_vec: np.ndarray
    xi: float = 0.0
    variant = "least_squares_l1"
    _gram: np.ndarray = field(init=False, repr=False)
    _m_g: float = field(init=False, repr=False)
    _big_m_g: float = field(init=False, repr=False)

    def __post_init__(self):
        self.a_mat = np.atleast_2d(np.asarray(self.a_mat, dtype=float))
        if self.a_mat.ndim != 2 or not np.all(np.isfinite(self.a_mat)):
            raise InvalidArgumentError("a_mat must be a finite matrix")
        self.y_vec = _vector(self.y_vec, "y_vec", self.a_mat.shape[0])
        if not (math.isfinite(self.xi) and self.xi >= 0):
            raise InvalidArgumentError(f"xi must be nonnegative, got {self.xi}")
        self.xi = float(self.xi)

        self._gram = self.a_mat.T @ self.a_mat
        eigs = symmetric_eigenvalues(self._gram)
        if eigs[0] <= 0:
            raise InvalidArgumentError("a_mat must have full column rank")
        self._m_g = float(eigs[0])
        self._big_m_g = float(eigs[-1])

    @property
    def dim(self) -> int:
        return self.a_mat.shape[1]

    @property
    def m_g(self) -> float:
        return self._m_g

    @property
    def big_m_g(self) -> float:
        return self._big_m_g

    @property
    def has_nonsmooth(self) -> bool:
        return self.xi > 0

    def smooth_hessian(self) -> np.ndarray:
        return self._gram

    def smooth_linear(self) -> np.ndarray:
        return -(self.a_mat.T @ self.y_vec)

    def smooth_value(self, x: np.ndarray) -> float:
        r = self.a_mat @ x - self.y_vec
        return float(0.5 * r @ r)

    def gradient_smooth(self, x) -> np.ndarray:
        x = self._check_point(x)
        return self.a_mat.T @ (self.a_mat @ x - self.y_vec)

    def nonsmooth_value(self, x: np.ndarray) -> float:
        return float(self.xi * np.abs(x).sum())

    def prox_nonsmooth(self, v: np.ndarray, step: float) -> np.ndarray:
        return soft_threshold(v, self.xi * step)

    def solve_x_update(self, rho, degree, neighborhood_sum, alpha, x_init=None) -> np.ndarray:
        if self.xi == 0:
            return self.solve_smooth_x_update(rho, degree, neighborhood_sum, alpha)

        lin = self._linear_term(rho, degree, neighborhood_sum, alpha) + self.smooth_linear()
        shift = 2.0 * rho * degree
        gram = self._gram

        def grad(v):
            return gram @ v + shift * v + lin

        start = np.zeros(self.dim) if x_init is None else _vector(x_init, "x_init", self.dim)
        x, residual, iterations = accelerated_proximal_gradient(
            grad,
            self.prox_nonsmooth,
            start,
            lipschitz=self._big_m_g + shift,
            strong_convexity=self._m_g + shift,
            tol=INNER_TOL,
            max_iterations=INNER_MAX_ITERATIONS,
            relative=True,
        )
        logger.debug("LASSO x-update converged in %d inner iterations (residual %.2e)", iterations, residual)
        return x

    def to_dict(self) -> Dict:
        return {
            "variant": self.variant,
            "a_mat": self.a_mat.tolist(),
            "y_vec": self.y_vec.tolist(),
            "xi": self.xi,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "LeastSquaresL1":
        return cls(a_mat=data["a_mat"], y_vec=data["y_vec"], xi=data["xi"])


OBJECTIVE_TYPES: Dict[str, Type[LocalObjective]] = {
    ScaledQuadratic.variant: ScaledQuadratic,
    QuadraticBox.variant: QuadraticBox,
    LeastSquaresL1.variant: LeastSquaresL1,
}


def gradient_smooth(obj: LocalObjective, x) -> np.ndarray:
    """grad g_i(x)."""
    return obj.gradient_smooth(x)


def solve_x_update(
    obj: LocalObjective,
    rho: float,
    degree: int,
    neighborhood_sum,
    alpha,
    x_init: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Per-agent x-update; see LocalObjective.solve_x_update."""
    return obj.solve_x_update(rho, degree, neighborhood_sum, alpha, x_init=x_init)


def objective_from_dict(data: Dict) -> LocalObjective:
    variant = data.get("variant") if isinstance(data, dict) else None
    if variant not in OBJECTIVE_TYPES:
        raise InvalidArgumentError(f"unknown objective variant {variant!r}")
    return OBJECTIVE_TYPES[variant].from_dict(data)


def check_problem(objs: List[LocalObjective]) -> int:
    """Validate a list of objectives and return their common dimension M."""
    if not objs:
        raise InvalidArgumentError("at least one objective is required")
    dims = {obj.dim for obj in objs}
    if len(dims) != 1:
        raise InvalidArgumentError(f"objectives disagree on dimension: {sorted(dims)}")
    return dims.pop()


def _positive_normal(rng: np.random.Generator) -> float:
    a = abs(rng.standard_normal())
    while a < 1e-6:
        a = abs(rng.standard_normal())
    return float(a)


def _full_rank_gaussian(rng: np.random.Generator, m: int) -> np.ndarray:
    while True:
        a_mat = rng.standard_normal((m, m))
        if symmetric_eigenvalues(a_mat.T @ a_mat)[0] > 1e-8:
            return a_mat


def build_problem_instance(scenario: str, n: int, m: int, seed: int) -> List[LocalObjective]:
    """
    Seeded random problem instance for one of the experiment scenarios.

    Args:
        scenario: quadratic_box, lasso, quadratic or two_node
        n: Number of agents N
        m: Dimension M
        seed: Random seed

    Returns:
        One objective per agent
    """
    if scenario not in SCENARIOS:
        raise InvalidArgumentError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if int(n) != n or n < 1 or int(m) != m or m < 1:
        raise InvalidArgumentError(f"n and m must be positive integers, got n={n}, m={m}")
    n, m = int(n), int(m)

    if scenario == "two_node":
        if n != 2 or m != 1:
            raise InvalidArgumentError("two_node scenario is defined for n=2, m=1 only")
        return [ScaledQuadratic(a=0.5, b=[1.5]), ScaledQuadratic(a=0.5, b=[3.5])]

    rng = np.random.default_rng([int(seed), PROBLEM_STREAM])
    objs: List[LocalObjective] = []
    for _ in range(n):
        if scenario in ("quadratic", "quadratic_box"):
            a = _positive_normal(rng)
            b = rng.normal(0.0, float(n) ** 2, size=m)  # variance N^4
            if scenario == "quadratic":
                objs.append(ScaledQuadratic(a=a, b=b))
            else:
                bound = float(n) * np.ones(m)
                objs.append(QuadraticBox(a=a, b=b, lo=-bound, hi=bound))
        else:
            a_mat = _full_rank_gaussian(rng, m)
            y_vec = rng.normal(0.0, float(n), size=m)  # variance N^2
            xi = abs(rng.normal(0.0, float(n)))
            objs.append(LeastSquaresL1(a_mat=a_mat, y_vec=y_vec, xi=xi))
    return objs


def scenario_initial_point(scenario: str, n: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Initial (x0, alpha0) as (N, M) arrays: zeros, except the worked two-node example."""
    if scenario == "two_node":
        return np.array([[-1.0], [-1.0]]), np.array([[1.0], [-1.0]])
    return np.zeros((n, m)), np.zeros((n, m))


def save_problem(path: str, objs: List[LocalObjective], scenario: Optional[str] = None) -> None:
    data = {"scenario": scenario, "objectives": [obj.to_dict() for obj in objs]}
    with open(path, "w") as f:
        json.dump(data, f, indent=2)


def load_problem(path: str) -> List[LocalObjective]:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"could not decode problem JSON from {path}: {e}") from e
    objs = [objective_from_dict(item) for item in data.get("objectives", [])]
    check_problem(objs)
    return objs
