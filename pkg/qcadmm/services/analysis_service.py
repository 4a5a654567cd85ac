"""
Closed-form convergence certificates for C-ADMM and QC-ADMM.

Vectors use the package layout: agent-stacked as (N, M), arc-stacked as
(2E, M). The G-norm of u = [z; beta] is sqrt(rho ||z||^2 + ||beta||^2 / rho).
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError, QuantizationRequiredError
from ..utils.linalg_utils import as_agent_matrix, min_norm_solve
from .graph_service import GraphMatrices, NetworkGraph, SpectralData, graph_matrices, spectral_quantities
from .objective_service import LeastSquaresL1, LocalObjective, QuadraticBox, check_problem
from .oracle_service import ReferenceSolution, solve_reference
from .quantizer_service import QuantizerConfig, quantize_array

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimalPoint:
    x_star: np.ndarray
    z_star: np.ndarray
    alpha_star: np.ndarray
    beta_star: np.ndarray


@dataclass(frozen=True)
class ConvergenceCertificate:
    mu: float
    rho: float
    delta_q: float
    delta_rate: float
    eta: float
    tau0: float
    consensus_error_bound: float
    u0_distance: float
    smooth: bool
    spectral: SpectralData
    tau1: Optional[float] = None
    delta_x: Optional[float] = None
    error_term_bound: float = 0.0
    tau: float = 0.0
    omega: Optional[float] = None
    iteration_bound: Optional[int] = None

    @property
    def rate(self) -> float:
        """Per-iteration G-norm contraction factor 1 / (1 + eta)."""
        return 1.0 / (1.0 + self.eta)

    def to_dict(self) -> Dict:
        return {
            "mu": self.mu,
            "rho": self.rho,
            "delta": self.delta_q,
            "delta_rate": self.delta_rate,
            "eta": self.eta,
            "tau0": self.tau0,
            "tau1": self.tau1,
            "delta_x": self.delta_x,
            "error_term_bound": self.error_term_bound,
            "tau": self.tau,
            "consensus_error_bound": self.consensus_error_bound,
            "omega": self.omega,
            "iteration_bound": self.iteration_bound,
            "u0_distance": self.u0_distance,
            "smooth": self.smooth,
            "spectral": self.spectral.to_dict(),
        }


def g_norm(z, beta, rho: float) -> float:
    """sqrt(rho ||z||^2 + ||beta||^2 / rho)."""
    if rho <= 0:
        raise InvalidArgumentError(f"rho must be positive, got {rho}")
    z = np.asarray(z, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return math.sqrt(rho * float(np.sum(z * z)) + float(np.sum(beta * beta)) / rho)


def compute_eta(spec: SpectralData, m_g: float, big_m_g: float, rho: float, mu: float) -> Tuple[float, float]:
    """
    Linear-rate constants of C-ADMM.

    Args:
        spec: Spectral data of the graph
        m_g: Smallest strong convexity modulus over agents
        big_m_g: Largest gradient Lipschitz modulus over agents
        rho: Penalty parameter
        mu: Free parameter, mu > 1

    Returns:
        Tuple of (delta_rate, eta) with eta = sqrt(1 + delta_rate) - 1
    """
    if not mu > 1:
        raise InvalidArgumentError(f"mu must be greater than 1, got {mu}")
    if rho <= 0:
        raise InvalidArgumentError(f"rho must be positive, got {rho}")
    if not (0 < m_g <= big_m_g):
        raise InvalidArgumentError(f"need 0 < m_g <= M_g, got m_g={m_g}, M_g={big_m_g}")

    s_plus = spec.sigma_max_m_plus ** 2
    s_min = spec.sigma_min_nonzero_m_minus ** 2
    first = (mu - 1.0) * s_min / (mu * s_plus)
    second = 4.0 * rho * m_g * s_min / (rho ** 2 * s_plus * s_min + mu * big_m_g ** 2)
    delta_rate = min(first, second)
    return delta_rate, math.sqrt(1.0 + delta_rate) - 1.0


def compute_tau0(delta_q: float, rho: float, m_dim: int, spec: SpectralData) -> float:
    """Bound on the G-norm of the quantization error term (smooth case)."""
    s = spec.sigma_max_m_plus ** 2 + spec.sigma_max_m_minus ** 2
    return 0.25 * delta_q * math.sqrt(rho * m_dim * s)


def compute_tau1(delta_x: float, delta_q: float, m_dim: int, rho: float, spec: SpectralData) -> float:
    """Bound on the G-norm of the error term when the x-update carries a non-smooth part."""
    s = rho * spec.sigma_max_m_plus ** 2 + spec.sigma_max_m_minus ** 2 / rho
    return (0.5 * delta_x + 0.25 * delta_q * math.sqrt(m_dim)) * math.sqrt(s)


def error_term_bound(delta_q: float, rho: float, e_edges: int, m_dim: int) -> float:
    """
    Bound on ||u_e||_G over the whole network, 1/2 delta sqrt(2 rho E M).

    ||u_e||_G^2 = rho * sum_i |N_i| ||e_i||^2 with every ||e_i|| <= delta sqrt(M) / 2.
    tau0 bounds the network error vector by delta sqrt(M) / 2 as a whole and
    coincides with this value only on a single edge.
    """
    return 0.5 * delta_q * math.sqrt(2.0 * rho * e_edges * m_dim)


def consensus_error_bound(rho: float, e_edges: int, sum_m_g: float, m_dim: int, delta_q: float) -> float:
    """(1/2 + 2 rho E / sum_i m_gi) sqrt(M) delta."""
    if sum_m_g <= 0:
        raise InvalidArgumentError(f"sum of strong convexity moduli must be positive, got {sum_m_g}")
    return (0.5 + rho * 2.0 * e_edges / sum_m_g) * math.sqrt(m_dim) * delta_q


def iteration_bound(
    eta: float,
    delta_q: float,
    rho: float,
    e_edges: int,
    spec: SpectralData,
    u0_distance: float,
    tau: float,
) -> Tuple[float, int]:
    """
    Number of QC-ADMM iterations within which the quantized state stops changing.

    Args:
        eta: Linear-rate constant
        delta_q: Quantization step (must be positive)
        rho: Penalty parameter
        e_edges: Number of undirected edges E
        spec: Spectral data
        u0_distance: ||u_Q^0 - u*||_G (or to u'* in the general case)
        tau: Bound on the G-norm of the error term

    Returns:
        Tuple of (omega, iterations) with iterations = ceil(log_{1+eta} omega)
    """
    if delta_q <= 0:
        raise QuantizationRequiredError("iteration bound requires a positive quantization step")
    if eta <= 0:
        raise InvalidArgumentError(f"eta must be positive, got {eta}")
    if rho <= 0 or e_edges < 1:
        raise InvalidArgumentError("rho must be positive and the graph must have an edge")

    scale = (u0_distance + tau) / (eta * delta_q)
    first = 3.0 * math.sqrt(rho) * spec.sigma_max_m_minus * (1.0 + eta) ** 2 * scale
    second = 3.0 * (1.0 + eta) * scale / math.sqrt(2.0 * rho * e_edges)
    omega = max(first, second)
    if omega <= 1.0:
        return omega, 1
    return omega, max(1, math.ceil(math.log(omega) / math.log1p(eta)))


def delta_x_l1(xi_weights: Sequence[float], m_g: float, rho: float, min_degree: int, m_dim: int) -> float:
    """Bound on ||x - x'|| for l1-regularized objectives."""
    xi = np.asarray(xi_weights, dtype=float)
    return math.sqrt(m_dim * float(np.sum(xi * xi))) / (m_g + 2.0 * rho * min_degree)


def delta_x_box(
    alpha0_norms: Sequence[float],
    t_bounds: Sequence[float],
    rho: float,
    degrees: Sequence[int],
    q0: float,
    m_g_list: Sequence[float],
    m_dim: int,
) -> float:
    """Bound on ||x - x'|| for box-constrained objectives (sum of per-agent terms)."""
    if not (len(alpha0_norms) == len(t_bounds) == len(degrees) == len(m_g_list)):
        raise InvalidArgumentError("per-agent inputs must have equal length")
    root_m = math.sqrt(m_dim)
    total = 0.0
    for a0, t, d, m_g in zip(alpha0_norms, t_bounds, degrees, m_g_list):
        first = a0 + t + 6.0 * rho * d * q0
        second = (root_m + 1.0) * t + (4.0 + 6.0 * root_m) * rho * d * q0
        total += max(first, second) / (m_g + 2.0 * rho * d)
    return total


def box_gradient_bounds(objs: Sequence[QuadraticBox]) -> List[float]:
    """t_i = max of ||grad g_i|| over agent i's box."""
    return [obj.gradient_bound() for obj in objs]


def box_q0(objs: Sequence[QuadraticBox], delta_q: float) -> float:
    """sup over the boxes of ||x|| plus the worst-case quantization error."""
    m_dim = objs[0].dim
    return max(obj.max_norm() for obj in objs) + 0.5 * delta_q * math.sqrt(m_dim)


def recover_beta(alpha, m: GraphMatrices) -> np.ndarray:
    """
    Minimal-norm beta (2E, M) with M_- beta = alpha.

    Raises:
        InvalidArgumentError: if alpha is not in the column space of L_-
    """
    alpha = as_agent_matrix(alpha, m.n_agents, name="alpha")
    beta, residual = min_norm_solve(m.m_minus, alpha)
    tol = 1e-9 * (1.0 + float(np.linalg.norm(alpha)))
    if float(np.linalg.norm(residual)) > tol:
        raise InvalidArgumentError("alpha is not in the column space of L_-")
    return beta


def optimal_point(g: NetworkGraph, objs: List[LocalObjective], x_star) -> OptimalPoint:
    """
    u* = [z*; beta*] for a consensus optimum x*.

    alpha* = -grad g(1 x*) is the limit of the alpha recursion: at a
    consensus fixed point the x-update reduces to grad g_i(x*) + alpha_i = 0.
    """
    dim = check_problem(objs)
    if len(objs) != g.n_agents:
        raise InvalidArgumentError(f"expected {g.n_agents} objectives, got {len(objs)}")
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    if x_star.size != dim:
        raise InvalidArgumentError(f"x_star has length {x_star.size}, expected {dim}")

    m = graph_matrices(g)
    stacked = np.tile(x_star, (g.n_agents, 1))
    alpha_star = -np.vstack([obj.gradient_smooth(x_star) for obj in objs])
    return OptimalPoint(
        x_star=x_star,
        z_star=0.5 * m.m_plus.T @ stacked,
        alpha_star=alpha_star,
        beta_star=recover_beta(alpha_star, m),
    )


def initial_u_distance(
    g: NetworkGraph,
    x0,
    alpha0,
    q: QuantizerConfig,
    rho: float,
    optimum: OptimalPoint,
) -> float:
    """||u_Q^0 - u*||_G with z_Q^0 = 1/2 M_+^T Q(x0) and beta_Q^0 recovered from alpha0."""
    m = graph_matrices(g)
    x_q0 = quantize_array(as_agent_matrix(x0, g.n_agents, name="x0"), q)
    z0 = 0.5 * m.m_plus.T @ x_q0
    beta0 = recover_beta(alpha0, m)
    return g_norm(z0 - optimum.z_star, beta0 - optimum.beta_star, rho)


def _general_delta_x(g: NetworkGraph, objs: List[LocalObjective], rho: float, delta_q: float, alpha0) -> float:
    if all(isinstance(obj, LeastSquaresL1) for obj in objs):
        return delta_x_l1(
            [obj.xi for obj in objs],
            min(obj.m_g for obj in objs),
            rho,
            int(g.degrees.min()),
            objs[0].dim,
        )
    if all(isinstance(obj, QuadraticBox) for obj in objs):
        alpha0 = as_agent_matrix(alpha0, g.n_agents, name="alpha0")
        return delta_x_box(
            np.linalg.norm(alpha0, axis=1).tolist(),
            box_gradient_bounds(objs),
            rho,
            g.degrees.tolist(),
            box_q0(objs, delta_q),
            [obj.m_g for obj in objs],
            objs[0].dim,
        )
    raise InvalidArgumentError("general-case certificate needs all-l1 or all-box objectives")


def certify(
    g: NetworkGraph,
    objs: List[LocalObjective],
    rho: float,
    delta_q: float,
    mu: float = 1.5,
    x0=None,
    alpha0=None,
    reference: Optional[ReferenceSolution] = None,
    smooth_reference: Optional[ReferenceSolution] = None,
) -> ConvergenceCertificate:
    """
    Assemble every certificate for one problem, graph and parameter choice.

    Smooth problems are measured against u*; problems with a non-smooth part
    use tau1, a Delta_x bound for their family and the smooth-only optimum u'*.
    Missing oracle solutions are computed here.

    Args:
        g: Network graph
        objs: Local objectives
        rho: Penalty parameter
        delta_q: Quantization step (0 gives no iteration bound)
        mu: Free parameter of the rate, mu > 1
        x0: Initial x as (N, M); zeros by default
        alpha0: Initial alpha as (N, M); zeros by default
        reference: Oracle solution of the full problem
        smooth_reference: Oracle solution with h_i dropped

    Returns:
        The assembled ConvergenceCertificate
    """
    dim = check_problem(objs)
    if len(objs) != g.n_agents:
        raise InvalidArgumentError(f"expected {g.n_agents} objectives, got {len(objs)}")
    q = QuantizerConfig(delta_q)
    x0 = np.zeros((g.n_agents, dim)) if x0 is None else as_agent_matrix(x0, g.n_agents, name="x0")
    alpha0 = np.zeros((g.n_agents, dim)) if alpha0 is None else as_agent_matrix(alpha0, g.n_agents, name="alpha0")

    spec = spectral_quantities(graph_matrices(g))
    delta_rate, eta = compute_eta(
        spec,
        min(obj.m_g for obj in objs),
        max(obj.big_m_g for obj in objs),
        rho,
        mu,
    )
    tau0 = compute_tau0(delta_q, rho, dim, spec)
    tau_error = error_term_bound(delta_q, rho, g.n_edges, dim)
    bound = consensus_error_bound(rho, g.n_edges, sum(obj.m_g for obj in objs), dim, delta_q)

    smooth = not any(obj.has_nonsmooth for obj in objs)
    if smooth:
        if reference is None:
            reference = solve_reference(objs)
        anchor = reference.x_star
        tau1 = delta_x = None
        tau = max(tau0, tau_error)
    else:
        if smooth_reference is None:
            smooth_reference = solve_reference(objs, smooth_only=True)
        anchor = smooth_reference.x_star
        delta_x = _general_delta_x(g, objs, rho, delta_q, alpha0)
        tau1 = compute_tau1(delta_x, delta_q, dim, rho, spec)
        x_part = 0.5 * delta_x * math.sqrt(rho * spec.sigma_max_m_plus ** 2 + spec.sigma_max_m_minus ** 2 / rho)
        tau = max(tau1, x_part + tau_error)

    u0 = initial_u_distance(g, x0, alpha0, q, rho, optimal_point(g, objs, anchor))

    omega = iterations = None
    if delta_q > 0:
        omega, iterations = iteration_bound(eta, delta_q, rho, g.n_edges, spec, u0, tau)

    logger.debug("Certificate: eta=%.4g tau=%.4g bound=%.4g iterations=%s", eta, tau, bound, iterations)
    return ConvergenceCertificate(
        mu=mu,
        rho=rho,
        delta_q=delta_q,
        delta_rate=delta_rate,
        eta=eta,
        tau0=tau0,
        tau1=tau1,
        delta_x=delta_x,
        error_term_bound=tau_error,
        tau=tau,
        consensus_error_bound=bound,
        omega=omega,
        iteration_bound=iterations,
        u0_distance=u0,
        smooth=smooth,
        spectral=spec,
    )
