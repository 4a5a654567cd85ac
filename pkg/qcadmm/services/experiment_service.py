"""
Experiment service: composes graphs, problems, the oracle, certificates and
the engines into seeded runs and parameter sweeps.
"""
import csv
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Tuple

import humanize
import numpy as np

from ..errors import InvalidArgumentError, QCADMMError
from ..utils.parse_utils import parse_float_list, parse_int_list
from .admm_service import ENGINES, RunConfig, RunRecord, run
from .analysis_service import ConvergenceCertificate, certify, optimal_point
from .graph_service import NetworkGraph, random_connected_graph
from .objective_service import SCENARIOS, LocalObjective, build_problem_instance, scenario_initial_point
from .oracle_service import REFERENCE_TOL, ReferenceSolution, solve_reference

logger = logging.getLogger(__name__)

SWEEP_CSV_HEADER = [
    "scenario",
    "n",
    "e",
    "m",
    "delta",
    "rho",
    "seed",
    "final_error",
    "iters_to_fixed_point",
    "error_bound",
    "iter_bound",
    "bound_ok",
]

# slack for comparing measured errors with closed-form bounds
BOUND_RTOL = 1e-9
UNQUANTIZED_ATOL = 1e-6


@dataclass
class ExperimentConfig:
    """Sweep over the product of e, delta and rho values, repeated for every seed."""

    scenario: str = "quadratic_box"
    n: int = 40
    e: List[int] = field(default_factory=lambda: [300])
    m: int = 3
    delta: List[float] = field(default_factory=lambda: [1.0])
    rho: List[float] = field(default_factory=lambda: [1.0])
    seeds: List[int] = field(default_factory=lambda: [0])
    max_iterations: int = 500
    output_path: Optional[str] = None
    engine: str = "qc_admm"
    mu: float = 1.5
    detect_fixed_point: bool = True
    quantize_own: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidArgumentError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.engine not in ENGINES:
            raise InvalidArgumentError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        self.n = int(self.n)
        self.m = int(self.m)
        self.e = parse_int_list(self.e)
        self.delta = parse_float_list(self.delta)
        self.rho = parse_float_list(self.rho)
        self.seeds = parse_int_list(self.seeds)
        self.max_iterations = int(self.max_iterations)
        self.mu = float(self.mu)

    def sweep_points(self) -> List[Tuple[int, float, float]]:
        """(e, delta, rho) combinations in a fixed order."""
        return list(itertools.product(self.e, self.delta, self.rho))

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"could not decode config JSON from {path}: {e}") from e
        if not isinstance(data, dict):
            raise InvalidArgumentError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    n: int
    e: int
    m: int
    delta: float
    rho: float
    seed: int
    final_error: Optional[float] = None
    iters_to_fixed_point: Optional[int] = None
    error_bound: Optional[float] = None
    iter_bound: Optional[int] = None
    bound_ok: bool = False
    iterations_run: int = 0
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepAverage:
    """Arithmetic means over the seeds of one sweep point; failed runs are excluded."""

    e: int
    delta: float
    rho: float
    runs: int
    failures: int
    mean_final_error: Optional[float]
    mean_iters_to_fixed_point: Optional[float]
    mean_error_bound: Optional[float]
    mean_iter_bound: Optional[float]
    bound_ok_rate: Optional[float]


@dataclass
class SweepSummary:
    rows: List[SweepRow] = field(default_factory=list)
    averages: List[SweepAverage] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "rows": [asdict(row) for row in self.rows],
            "averages": [asdict(avg) for avg in self.averages],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SweepSummary":
        return cls(
            rows=[SweepRow(**row) for row in data.get("rows", [])],
            averages=[SweepAverage(**avg) for avg in data.get("averages", [])],
        )


@dataclass
class RunOutcome:
    """Everything produced by one seeded run."""

    graph: NetworkGraph
    objectives: List[LocalObjective]
    reference: ReferenceSolution
    smooth_reference: Optional[ReferenceSolution]
    certificate: ConvergenceCertificate
    record: RunRecord

    def summary(self) -> Dict:
        row = self.record.final_row
        return {
            "n": self.graph.n_agents,
            "e": self.graph.n_edges,
            "m": self.objectives[0].dim,
            "engine": self.record.engine,
            "iterations_run": row.iter,
            "fixed_point_iteration": self.record.fixed_point_iteration,
            "final_row": asdict(row),
            "x_star": self.reference.x_star.tolist(),
            "certificate": self.certificate.to_dict(),
        }


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def summarize(rows: List[SweepRow]) -> List[SweepAverage]:
    """Per-(e, delta, rho) averages, in order of first appearance."""
    groups: Dict[Tuple[int, float, float], List[SweepRow]] = {}
    for row in rows:
        groups.setdefault((row.e, row.delta, row.rho), []).append(row)

    averages = []
    for (e, delta, rho), group in groups.items():
        ok = [r for r in group if r.error is None]
        averages.append(SweepAverage(
            e=e,
            delta=delta,
            rho=rho,
            runs=len(group),
            failures=len(group) - len(ok),
            mean_final_error=_mean([r.final_error for r in ok if r.final_error is not None]),
            mean_iters_to_fixed_point=_mean([r.iters_to_fixed_point for r in ok if r.iters_to_fixed_point is not None]),
            mean_error_bound=_mean([r.error_bound for r in ok if r.error_bound is not None]),
            mean_iter_bound=_mean([r.iter_bound for r in ok if r.iter_bound is not None]),
            bound_ok_rate=_mean([1.0 if r.bound_ok else 0.0 for r in ok]),
        ))
    return averages


def bounds_satisfied(outcome: RunOutcome) -> bool:
    """
    Whether a finished run respects its certificate.

    At a fixed point the consensus error must not exceed its bound and the
    fixed point must appear within iteration_bound + 1 steps (the detecting
    step repeats the converged state). A run without a fixed point only
    fails when it ran past that step count. Unquantized runs are compared
    with a zero bound up to UNQUANTIZED_ATOL.
    """
    cert = outcome.certificate
    record = outcome.record
    final_error = record.final_row.max_agent_error
    x_norm = float(np.linalg.norm(outcome.reference.x_star))

    if cert.delta_q == 0:
        return final_error <= cert.consensus_error_bound + UNQUANTIZED_ATOL * (1.0 + x_norm)

    limit = cert.iteration_bound + 1
    if record.fixed_point_iteration is None:
        return record.config.max_iterations <= limit
    error_ok = final_error <= cert.consensus_error_bound * (1.0 + BOUND_RTOL) + BOUND_RTOL
    return error_ok and record.fixed_point_iteration <= limit


class ExperimentService:
    """Runs seeded instances and parameter sweeps."""

    def __init__(self, workers: int = 1, mu: float = 1.5, reference_tol: float = REFERENCE_TOL):
        """
        Initialize the experiment service.

        Args:
            workers: Concurrent runs in a sweep
            mu: Default rate parameter for certificates
            reference_tol: Oracle tolerance
        """
        if workers < 1:
            raise InvalidArgumentError(f"workers must be at least 1, got {workers}")
        self.workers = workers
        self.mu = mu
        self.reference_tol = reference_tol

    def build_graph(self, n: int, e: int, seed: int) -> NetworkGraph:
        return random_connected_graph(n, e, seed)

    def run_instance(
        self,
        scenario: str,
        n: int,
        e: int,
        m: int,
        seed: int,
        config: RunConfig,
        engine: str = "qc_admm",
        mu: Optional[float] = None,
        objectives: Optional[List[LocalObjective]] = None,
    ) -> RunOutcome:
        """
        Build the seeded graph and problem, solve the reference, certify and run.

        Args:
            scenario: Problem family
            n, e, m: Agents, edges and dimension
            seed: Seed of both the graph and the problem
            config: Engine parameters
            engine: "c_admm" or "qc_admm"
            mu: Rate parameter (service default if None)
            objectives: Use these objectives instead of generating them

        Returns:
            RunOutcome of the run
        """
        mu = self.mu if mu is None else mu
        graph = self.build_graph(n, e, seed)
        objs = objectives if objectives is not None else build_problem_instance(scenario, n, m, seed)
        if len(objs) != graph.n_agents:
            raise InvalidArgumentError(f"problem has {len(objs)} agents but the graph has {graph.n_agents}")
        x0, alpha0 = scenario_initial_point(scenario, n, objs[0].dim)

        reference = solve_reference(objs, tol=self.reference_tol)
        smooth_reference = None
        optimum = None
        if any(obj.has_nonsmooth for obj in objs):
            smooth_reference = solve_reference(objs, smooth_only=True, tol=self.reference_tol)
            optimum = optimal_point(graph, objs, smooth_reference.x_star)

        delta = config.delta if engine == "qc_admm" else 0.0
        certificate = certify(
            graph, objs, config.rho, delta, mu=mu,
            x0=x0, alpha0=alpha0,
            reference=reference, smooth_reference=smooth_reference,
        )
        record = run(engine, config, graph, objs, x0=x0, alpha0=alpha0, reference=reference, optimum=optimum)
        return RunOutcome(
            graph=graph,
            objectives=objs,
            reference=reference,
            smooth_reference=smooth_reference,
            certificate=certificate,
            record=record,
        )

    def certify_instance(
        self,
        scenario: str,
        n: int,
        e: int,
        m: int,
        seed: int,
        rho: float,
        delta: float,
        mu: Optional[float] = None,
        objectives: Optional[List[LocalObjective]] = None,
    ) -> ConvergenceCertificate:
        graph = self.build_graph(n, e, seed)
        objs = objectives if objectives is not None else build_problem_instance(scenario, n, m, seed)
        x0, alpha0 = scenario_initial_point(scenario, n, objs[0].dim)
        return certify(graph, objs, rho, delta, mu=self.mu if mu is None else mu, x0=x0, alpha0=alpha0)

    def _run_point(self, cfg: ExperimentConfig, e: int, delta: float, rho: float, seed: int) -> SweepRow:
        base = dict(scenario=cfg.scenario, n=cfg.n, e=e, m=cfg.m, delta=delta, rho=rho, seed=seed)
        try:
            run_config = RunConfig(
                rho=rho,
                delta=delta,
                max_iterations=cfg.max_iterations,
                detect_fixed_point=cfg.detect_fixed_point,
                quantize_own=cfg.quantize_own,
            )
            outcome = self.run_instance(cfg.scenario, cfg.n, e, cfg.m, seed, run_config, engine=cfg.engine, mu=cfg.mu)
        except QCADMMError as err:
            logger.warning("Run failed (e=%d delta=%g rho=%g seed=%d): %s", e, delta, rho, seed, err)
            return SweepRow(**base, error=str(err))

        cert = outcome.certificate
        return SweepRow(
            **base,
            final_error=outcome.record.final_row.max_agent_error,
            iters_to_fixed_point=outcome.record.fixed_point_iteration,
            error_bound=cert.consensus_error_bound,
            iter_bound=cert.iteration_bound,
            bound_ok=bounds_satisfied(outcome),
            iterations_run=outcome.record.final_row.iter,
        )

    def run_experiment(self, cfg: ExperimentConfig) -> SweepSummary:
        """
        Run every (sweep point, seed) combination of an experiment.

        Runs execute concurrently but rows come back in sweep order, so the
        summary depends only on the configuration. A failing run is recorded
        with its error message and does not stop the sweep.
        """
        tasks = [(e, delta, rho, seed) for (e, delta, rho) in cfg.sweep_points() for seed in cfg.seeds]
        started = time.monotonic()
        logger.info(
            "Sweep %s: %s runs over %d points with %d workers",
            cfg.scenario, humanize.intcomma(len(tasks)), len(cfg.sweep_points()), self.workers,
        )

        if self.workers == 1:
            rows = [self._run_point(cfg, *task) for task in tasks]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                rows = list(pool.map(lambda task: self._run_point(cfg, *task), tasks))

        summary = SweepSummary(rows=rows, averages=summarize(rows))
        failures = sum(1 for row in rows if row.error is not None)
        logger.info(
            "Sweep finished in %s (%s failed)",
            humanize.naturaldelta(time.monotonic() - started), humanize.intcomma(failures),
        )
        if cfg.output_path:
            if cfg.output_path.endswith(".json"):
                emit_json(summary, cfg.output_path)
            else:
                emit_csv(summary, cfg.output_path)
        return summary


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> SweepSummary:
    return ExperimentService(workers=workers, mu=cfg.mu).run_experiment(cfg)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def summary_csv(summary: SweepSummary) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_CSV_HEADER)
    for row in summary.rows:
        values = asdict(row)
        writer.writerow([_cell(values[c]) for c in SWEEP_CSV_HEADER])
    return buffer.getvalue()


def emit_csv(summary: SweepSummary, path: str) -> None:
    """Write one line per (sweep point, seed) run under SWEEP_CSV_HEADER."""
    with open(path, "w", newline="") as f:
        f.write(summary_csv(summary))


def emit_json(summary: SweepSummary, path: str) -> None:
    with open(path, "w") as f:
        json.dump(summary.to_dict(), f, indent=2)


def load_summary(path: str) -> SweepSummary:
    with open(path, "r") as f:
        return SweepSummary.from_dict(json.load(f))
