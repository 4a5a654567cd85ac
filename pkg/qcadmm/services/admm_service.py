"""
C-ADMM and QC-ADMM iteration engines, plus the centralized three-block ADMM
they are derived from.

All agents update synchronously: every x-update of iteration k+1 reads the
iteration-k values. Agent vectors are stored as rows of (N, M) arrays and
arc vectors as rows of (2E, M) arrays.
"""
import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import humanize
import numpy as np

from ..errors import InvalidArgumentError
from ..utils.linalg_utils import as_agent_matrix
from .analysis_service import OptimalPoint, g_norm, optimal_point, recover_beta
from .graph_service import GraphMatrices, NetworkGraph, graph_matrices
from .objective_service import LocalObjective, check_problem, solve_x_update
from .oracle_service import ReferenceSolution
from .quantizer_service import QuantizerConfig, quantize_array

logger = logging.getLogger(__name__)

ENGINES = ("c_admm", "qc_admm")
RUN_CSV_HEADER = [
    "iter",
    "max_agent_error",
    "rms_error",
    "g_norm_u_error",
    "alpha_sum_norm",
    "consensus",
    "fixed_point",
]
DIAGNOSTIC_COLUMNS = ["quantization_error_g_norm", "smooth_gap"]


@dataclass
class AgentState:
    x: np.ndarray
    x_q: np.ndarray
    alpha: np.ndarray


@dataclass
class NetworkState:
    """State of all agents after `iteration` steps, with the auxiliary u_Q = [z_Q; beta_Q]."""

    agents: List[AgentState]
    iteration: int
    beta_q: np.ndarray
    z_q: np.ndarray

    @classmethod
    def from_arrays(cls, x, x_q, alpha, iteration: int, beta_q, z_q) -> "NetworkState":
        agents = [AgentState(x=x[i].copy(), x_q=x_q[i].copy(), alpha=alpha[i].copy()) for i in range(x.shape[0])]
        return cls(agents=agents, iteration=iteration, beta_q=beta_q, z_q=z_q)

    @property
    def x(self) -> np.ndarray:
        return np.vstack([a.x for a in self.agents])

    @property
    def x_q(self) -> np.ndarray:
        return np.vstack([a.x_q for a in self.agents])

    @property
    def alpha(self) -> np.ndarray:
        return np.vstack([a.alpha for a in self.agents])

    @property
    def in_consensus(self) -> bool:
        """Exact equality of all quantized agent values, i.e. L_- x_Q = 0."""
        x_q = self.x_q
        return bool(np.all(x_q == x_q[0]))


@dataclass(frozen=True)
class StepDiagnostics:
    quantization_error_g_norm: float
    smooth_gap: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    rho: float = 1.0
    delta: float = 0.0
    max_iterations: int = 500
    detect_fixed_point: bool = True
    quantize_own: bool = True
    track_smooth_gap: bool = False

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidArgumentError(f"rho must be positive, got {self.rho}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise InvalidArgumentError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        QuantizerConfig(self.delta)

    @property
    def quantizer(self) -> QuantizerConfig:
        return QuantizerConfig(self.delta)


@dataclass(frozen=True)
class RunRow:
    iter: int
    max_agent_error: Optional[float]
    rms_error: Optional[float]
    g_norm_u_error: Optional[float]
    alpha_sum_norm: float
    consensus: bool
    fixed_point: bool
    quantization_error_g_norm: Optional[float] = None
    smooth_gap: Optional[float] = None


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


@dataclass
class RunRecord:
    engine: str
    config: RunConfig
    rows: List[RunRow] = field(default_factory=list)
    fixed_point_iteration: Optional[int] = None
    final_state: Optional[NetworkState] = field(default=None, repr=False)

    @property
    def final_row(self) -> RunRow:
        return self.rows[-1]

    def to_csv(self, path: Optional[str] = None, include_diagnostics: bool = False) -> str:
        """
        Serialize the per-iteration rows as CSV.

        Args:
            path: Optional file to write
            include_diagnostics: Append the quantization-error and smooth-gap columns

        Returns:
            The CSV text
        """
        columns = RUN_CSV_HEADER + (DIAGNOSTIC_COLUMNS if include_diagnostics else [])
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in self.rows:
            values = asdict(row)
            writer.writerow([_csv_cell(values[c]) for c in columns])
        text = buffer.getvalue()
        if path:
            with open(path, "w", newline="") as f:
                f.write(text)
        return text

    def to_dict(self) -> Dict:
        return {
            "engine": self.engine,
            "config": asdict(self.config),
            "fixed_point_iteration": self.fixed_point_iteration,
            "rows": [asdict(row) for row in self.rows],
        }

    def to_json(self, path: Optional[str] = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path:
            with open(path, "w") as f:
                f.write(text)
        return text


@dataclass
class CentralizedState:
    """(x, z, lambda) of the three-block ADMM; lambda = [beta; gamma] stacked over 4E arcs."""

    x: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    iteration: int = 0

    @property
    def beta(self) -> np.ndarray:
        return self.lam[: self.lam.shape[0] // 2]

    @property
    def gamma(self) -> np.ndarray:
        return self.lam[self.lam.shape[0] // 2:]


def init_state(x0, alpha0, g: NetworkGraph, q: QuantizerConfig) -> NetworkState:
    """
    Initial network state.

    Args:
        x0: Initial x as (N, M) or flat N*M
        alpha0: Initial alpha; must lie in the column space of L_-
        g: Network graph
        q: Quantizer

    Returns:
        State with x_q = Q(x0), z_q = 1/2 M_+^T x_q and minimal-norm beta_q
    """
    m = graph_matrices(g)
    x0 = as_agent_matrix(x0, g.n_agents, name="x0")
    alpha0 = as_agent_matrix(alpha0, g.n_agents, name="alpha0")
    if x0.shape != alpha0.shape:
        raise InvalidArgumentError(f"x0 {x0.shape} and alpha0 {alpha0.shape} disagree")
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(alpha0))):
        raise InvalidArgumentError("x0 and alpha0 must be finite")

    x_q = quantize_array(x0, q)
    return NetworkState.from_arrays(
        x=x0,
        x_q=x_q,
        alpha=alpha0,
        iteration=0,
        beta_q=recover_beta(alpha0, m),
        z_q=0.5 * m.m_plus.T @ x_q,
    )


def _sweep(
    s: NetworkState,
    g: NetworkGraph,
    objs: List[LocalObjective],
    rho: float,
    q: QuantizerConfig,
    quantize_own: bool = True,
    track_smooth_gap: bool = False,
) -> Tuple[NetworkState, StepDiagnostics]:
    m = graph_matrices(g)
    degrees = g.degrees
    x_prev, x_q, alpha = s.x, s.x_q, s.alpha

    # neighborhood sums |N_i| own_i + sum_j x_j[Q]
    neighbor_part = (m.l_plus - m.w_degree) @ x_q
    own = x_q if quantize_own else x_prev
    neighborhood = degrees[:, None] * own + neighbor_part

    x_new = np.empty_like(x_prev)
    gap_sq = 0.0
    for i, obj in enumerate(objs):
        x_new[i] = solve_x_update(obj, rho, int(degrees[i]), neighborhood[i], alpha[i], x_init=x_prev[i])
        if track_smooth_gap:
            x_smooth = obj.solve_smooth_x_update(rho, int(degrees[i]), neighborhood[i], alpha[i])
            gap_sq += float(np.sum((x_new[i] - x_smooth) ** 2))

    x_q_new = quantize_array(x_new, q)
    alpha_new = alpha + rho * (m.l_minus @ x_q_new)
    beta_new = s.beta_q + 0.5 * rho * (m.m_minus.T @ x_q_new)
    z_new = 0.5 * m.m_plus.T @ x_q_new

    err = x_q_new - x_new
    diagnostics = StepDiagnostics(
        quantization_error_g_norm=g_norm(0.5 * m.m_plus.T @ err, 0.5 * rho * (m.m_minus.T @ err), rho),
        smooth_gap=float(np.sqrt(gap_sq)) if track_smooth_gap else None,
    )
    state = NetworkState.from_arrays(
        x=x_new,
        x_q=x_q_new,
        alpha=alpha_new,
        iteration=s.iteration + 1,
        beta_q=beta_new,
        z_q=z_new,
    )
    return state, diagnostics


def _check_inputs(s: NetworkState, g: NetworkGraph, objs: List[LocalObjective]) -> None:
    if len(objs) != g.n_agents or len(s.agents) != g.n_agents:
        raise InvalidArgumentError(
            f"graph has {g.n_agents} agents but got {len(objs)} objectives and {len(s.agents)} agent states"
        )
    if check_problem(objs) != s.agents[0].x.size:
        raise InvalidArgumentError("state dimension does not match the objectives")


def c_admm_step(s: NetworkState, g: NetworkGraph, objs: List[LocalObjective], rho: float) -> NetworkState:
    """One synchronous C-ADMM step (no quantization anywhere)."""
    _check_inputs(s, g, objs)
    state, _ = _sweep(s, g, objs, rho, QuantizerConfig(0.0))
    return state


def qc_admm_step(
    s: NetworkState,
    g: NetworkGraph,
    objs: List[LocalObjective],
    rho: float,
    q: QuantizerConfig,
    quantize_own: bool = True,
) -> NetworkState:
    """
    One synchronous QC-ADMM step.

    Each agent solves its x-update against quantized values (its own included
    unless quantize_own is False), quantizes the result and updates alpha
    from the quantized neighborhood.
    """
    _check_inputs(s, g, objs)
    state, _ = _sweep(s, g, objs, rho, q, quantize_own=quantize_own)
    return state


def _stacked_constraint_matrices(m: GraphMatrices) -> Tuple[np.ndarray, np.ndarray]:
    a = np.vstack([m.a1, m.a2])
    n_arcs = m.n_arcs
    b = -np.vstack([np.eye(n_arcs), np.eye(n_arcs)])
    return a, b


def init_centralized_state(x0, alpha0, g: NetworkGraph) -> CentralizedState:
    """z0 = 1/2 M_+^T x0 and lambda0 = [beta0; -beta0] with beta0 recovered from alpha0."""
    m = graph_matrices(g)
    x0 = as_agent_matrix(x0, g.n_agents, name="x0")
    beta0 = recover_beta(alpha0, m)
    return CentralizedState(
        x=x0.copy(),
        z=0.5 * m.m_plus.T @ x0,
        lam=np.vstack([beta0, -beta0]),
    )


def centralized_admm_step(
    state: CentralizedState,
    m: GraphMatrices,
    objs: List[LocalObjective],
    rho: float,
) -> CentralizedState:
    """
    One step of the three-block ADMM on min f(x) s.t. Ax + Bz = 0 with dense A, B.

    A^T A = 2W is block diagonal, so the x-minimization splits per agent into
    the same subproblem the decentralized engines solve.
    """
    if not rho > 0:
        raise InvalidArgumentError(f"rho must be positive, got {rho}")
    a, b = _stacked_constraint_matrices(m)
    degrees = np.diag(m.w_degree)

    # x-step: f(x) + lam^T A x + rho/2 ||A x + B z||^2
    linear = a.T @ state.lam
    coupling = -(a.T @ (b @ state.z))
    x_new = np.empty_like(state.x)
    for i, obj in enumerate(objs):
        x_new[i] = solve_x_update(obj, rho, int(degrees[i]), coupling[i], linear[i], x_init=state.x[i])

    # z-step: B^T B = 2I
    z_new = -0.5 * b.T @ (state.lam / rho + a @ x_new)
    lam_new = state.lam + rho * (a @ x_new + b @ z_new)
    return CentralizedState(x=x_new, z=z_new, lam=lam_new, iteration=state.iteration + 1)


def _row(
    s: NetworkState,
    k: int,
    rho: float,
    x_star: Optional[np.ndarray],
    optimum: Optional[OptimalPoint],
    fixed_point: bool,
    diagnostics: Optional[StepDiagnostics],
) -> RunRow:
    x_q = s.x_q
    max_err = rms = u_err = None
    if x_star is not None:
        diff = x_q - x_star[None, :]
        max_err = float(np.max(np.linalg.norm(diff, axis=1)))
        rms = float(np.linalg.norm(diff) / np.sqrt(x_q.shape[0]))
    if optimum is not None:
        u_err = g_norm(s.z_q - optimum.z_star, s.beta_q - optimum.beta_star, rho)
    return RunRow(
        iter=k,
        max_agent_error=max_err,
        rms_error=rms,
        g_norm_u_error=u_err,
        alpha_sum_norm=float(np.linalg.norm(s.alpha.sum(axis=0))),
        consensus=s.in_consensus,
        fixed_point=fixed_point,
        quantization_error_g_norm=diagnostics.quantization_error_g_norm if diagnostics else None,
        smooth_gap=diagnostics.smooth_gap if diagnostics else None,
    )


def run(
    engine: str,
    config: RunConfig,
    g: NetworkGraph,
    objs: List[LocalObjective],
    x0=None,
    alpha0=None,
    reference: Union[ReferenceSolution, np.ndarray, None] = None,
    optimum: Optional[OptimalPoint] = None,
) -> RunRecord:
    """
    Run an engine and record per-iteration metrics.

    Args:
        engine: "c_admm" or "qc_admm"
        config: Run parameters
        g: Network graph
        objs: One objective per agent
        x0: Initial x (zeros by default)
        alpha0: Initial alpha (zeros by default)
        reference: Optimum x* (or its ReferenceSolution) for the error columns
        optimum: u* (or u'*) for the G-norm column; derived from reference for smooth problems

    Returns:
        RunRecord with rows k = 0..K
    """
    if engine not in ENGINES:
        raise InvalidArgumentError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    dim = check_problem(objs)
    if len(objs) != g.n_agents:
        raise InvalidArgumentError(f"expected {g.n_agents} objectives, got {len(objs)}")

    x0 = np.zeros((g.n_agents, dim)) if x0 is None else x0
    alpha0 = np.zeros((g.n_agents, dim)) if alpha0 is None else alpha0
    x_star = None
    if reference is not None:
        x_star = np.asarray(getattr(reference, "x_star", reference), dtype=float).reshape(-1)
        if x_star.size != dim:
            raise InvalidArgumentError(f"reference has length {x_star.size}, expected {dim}")
    if optimum is None and x_star is not None and not any(obj.has_nonsmooth for obj in objs):
        optimum = optimal_point(g, objs, x_star)

    q = config.quantizer if engine == "qc_admm" else QuantizerConfig(0.0)
    quantize_own = config.quantize_own if engine == "qc_admm" else True
    detect = config.detect_fixed_point and engine == "qc_admm"

    state = init_state(x0, alpha0, g, q)
    m = graph_matrices(g)
    e0 = state.x_q - state.x
    initial_diag = StepDiagnostics(g_norm(0.5 * m.m_plus.T @ e0, 0.5 * config.rho * (m.m_minus.T @ e0), config.rho))
    record = RunRecord(engine=engine, config=config)
    record.rows.append(_row(state, 0, config.rho, x_star, optimum, False, initial_diag))

    started = time.monotonic()
    logger.info(
        "Starting %s: N=%d E=%d M=%d rho=%g delta=%g max_iter=%s",
        engine, g.n_agents, g.n_edges, dim, config.rho, q.delta, humanize.intcomma(config.max_iterations),
    )
    for k in range(1, config.max_iterations + 1):
        previous = state
        state, diag = _sweep(
            previous, g, objs, config.rho, q,
            quantize_own=quantize_own,
            track_smooth_gap=config.track_smooth_gap,
        )
        fixed = detect and state.in_consensus and np.array_equal(state.x_q, previous.x_q)
        record.rows.append(_row(state, k, config.rho, x_star, optimum, bool(fixed), diag))
        if fixed:
            record.fixed_point_iteration = k
            logger.info("%s reached a fixed point at iteration %d", engine, k)
            break

    record.final_state = state
    logger.info(
        "Finished %s after %s iterations in %s",
        engine, humanize.intcomma(len(record.rows) - 1), humanize.naturaldelta(time.monotonic() - started),
    )
    return record
