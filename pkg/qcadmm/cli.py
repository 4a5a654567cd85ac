"""
Command-line interface: `qcadmm run | sweep | certify | graph | serve`.
"""
import functools
import json
import logging
from dataclasses import asdict

import click

from . import __version__
from .config import get_config
from .errors import QCADMMError
from .services.admm_service import ENGINES, RunConfig
from .services.experiment_service import ExperimentConfig, ExperimentService, emit_csv, emit_json
from .services.graph_service import graph_matrices, spectral_quantities
from .services.objective_service import SCENARIOS, load_problem, save_problem
from .utils.log_utils import configure_logging
from .utils.parse_utils import parse_float_list, parse_int_list

logger = logging.getLogger(__name__)

SWEEP_PARAMS = ("delta", "rho", "e")


def _handle_errors(func):
    """Report package errors as click errors (exit code 1)."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except QCADMMError as e:
            raise click.ClickException(str(e)) from e

    return wrapper


def _instance_options(func):
    options = [
        click.option("--scenario", type=click.Choice(SCENARIOS), default=None, help="Problem family."),
        click.option("--n", "n", type=int, default=None, help="Number of agents N."),
        click.option("--e", "e", type=int, default=None, help="Number of edges E."),
        click.option("--m", "m", type=int, default=None, help="Dimension M."),
        click.option("--delta", type=float, default=None, help="Quantization step (0 disables)."),
        click.option("--rho", type=float, default=None, help="Penalty parameter."),
        click.option("--mu", type=float, default=None, help="Rate parameter mu > 1."),
        click.option("--seed", type=int, default=None, help="Seed of graph and problem."),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="ExperimentConfig JSON; flags override its values."),
        click.option("--load-problem", "load_problem_path", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Replay objectives from a JSON dump."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _resolve(ctx, config_path, **flags) -> ExperimentConfig:
    """Merge defaults, an optional config file and explicit flags (in that order)."""
    app_config = ctx.obj["config"]
    values = {
        "delta": [app_config.DELTA],
        "rho": [app_config.RHO],
        "mu": app_config.MU,
        "max_iterations": app_config.MAX_ITERATIONS,
    }
    if config_path:
        values.update(ExperimentConfig.from_json(config_path).to_dict())

    for name, value in flags.items():
        if value is None:
            continue
        if name == "seed":
            values["seeds"] = [value]
        elif name in ("e", "delta", "rho"):
            values[name] = [value]
        else:
            values[name] = value
    return ExperimentConfig.from_dict(values)


def _with_problem(cfg: ExperimentConfig, load_path):
    """Objectives from a dump (adjusting n and m), or None to generate them."""
    if not load_path:
        return cfg, None
    objs = load_problem(load_path)
    cfg.n = len(objs)
    cfg.m = objs[0].dim
    return cfg, objs


@click.group()
@click.option("--env", "env_name", default=None, help="Configuration name (development, production, testing).")
@click.option("--log-level", default=None, help="Override QCADMM_LOG_LEVEL.")
@click.version_option(version=__version__)
@click.pass_context
def cli(ctx, env_name, log_level):
    """Quantized consensus ADMM simulator."""
    config = get_config(env_name)
    configure_logging(log_level or config.LOG_LEVEL)
    ctx.ensure_object(dict)
    ctx.obj["config"] = config
    ctx.obj["env"] = env_name


@cli.command("run")
@_instance_options
@click.option("--max-iter", "max_iterations", type=int, default=None, help="Iteration cap.")
@click.option("--engine", type=click.Choice(ENGINES), default=None, help="Engine to run.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Write the per-iteration record here.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", help="Record format.")
@click.option("--diagnostics", is_flag=True, help="Add quantization-error and smooth-gap columns to CSV output.")
@click.option("--dump-problem", type=click.Path(dir_okay=False), default=None, help="Save the objectives as JSON.")
@click.option("--no-detect-fixed-point", is_flag=True, help="Always run max-iter iterations.")
@click.option("--own-unquantized", is_flag=True, help="Agents use their own unquantized value in the x-update.")
@click.pass_context
@_handle_errors
def run_command(ctx, config_path, load_problem_path, out_path, fmt, diagnostics, dump_problem,
                no_detect_fixed_point, own_unquantized, **flags):
    """Run one engine on one seeded instance."""
    cfg = _resolve(ctx, config_path, **flags)
    cfg, objs = _with_problem(cfg, load_problem_path)

    run_config = RunConfig(
        rho=cfg.rho[0],
        delta=cfg.delta[0],
        max_iterations=cfg.max_iterations,
        detect_fixed_point=cfg.detect_fixed_point and not no_detect_fixed_point,
        quantize_own=cfg.quantize_own and not own_unquantized,
        track_smooth_gap=diagnostics,
    )
    service = ExperimentService(mu=cfg.mu, reference_tol=ctx.obj["config"].REFERENCE_TOL)
    outcome = service.run_instance(
        cfg.scenario, cfg.n, cfg.e[0], cfg.m, cfg.seeds[0], run_config,
        engine=cfg.engine, objectives=objs,
    )

    if dump_problem:
        save_problem(dump_problem, outcome.objectives, scenario=cfg.scenario)
    if out_path:
        if fmt == "json":
            outcome.record.to_json(out_path)
        else:
            outcome.record.to_csv(out_path, include_diagnostics=diagnostics)
        logger.info("Wrote run record to %s", out_path)
    click.echo(json.dumps(outcome.summary(), indent=2))


@cli.command("sweep")
@_instance_options
@click.option("--param", type=click.Choice(SWEEP_PARAMS), default=None, help="Parameter to sweep.")
@click.option("--values", "values_text", default=None, help="Comma-separated sweep values.")
@click.option("--seeds", "seeds_text", default=None, help="Seeds as '1,2,3' or '1-50'.")
@click.option("--max-iter", "max_iterations", type=int, default=None, help="Iteration cap.")
@click.option("--engine", type=click.Choice(ENGINES), default=None, help="Engine to run.")
@click.option("--workers", type=int, default=None, help="Concurrent runs (QCADMM_WORKERS by default).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Write the summary here.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", help="Summary format.")
@click.pass_context
@_handle_errors
def sweep_command(ctx, config_path, load_problem_path, param, values_text, seeds_text, workers, out_path, fmt, **flags):
    """Sweep delta, rho or e over seeds and summarize the bound checks."""
    cfg = _resolve(ctx, config_path, **flags)
    if load_problem_path:
        raise click.UsageError("--load-problem is not supported by sweep; each seed draws its own problem")
    if (param is None) != (values_text is None):
        raise click.UsageError("--param and --values must be given together")
    if param == "e":
        cfg.e = parse_int_list(values_text)
    elif param is not None:
        setattr(cfg, param, parse_float_list(values_text))
    if seeds_text is not None:
        cfg.seeds = parse_int_list(seeds_text)

    service = ExperimentService(
        workers=workers or ctx.obj["config"].SWEEP_WORKERS,
        mu=cfg.mu,
        reference_tol=ctx.obj["config"].REFERENCE_TOL,
    )
    summary = service.run_experiment(cfg)
    if out_path:
        if fmt == "json":
            emit_json(summary, out_path)
        else:
            emit_csv(summary, out_path)
        logger.info("Wrote sweep summary to %s", out_path)
    click.echo(json.dumps([asdict(avg) for avg in summary.averages], indent=2))


@cli.command("certify")
@_instance_options
@click.pass_context
@_handle_errors
def certify_command(ctx, config_path, load_problem_path, **flags):
    """Print the convergence certificate of one instance as JSON."""
    cfg = _resolve(ctx, config_path, **flags)
    cfg, objs = _with_problem(cfg, load_problem_path)
    service = ExperimentService(mu=cfg.mu, reference_tol=ctx.obj["config"].REFERENCE_TOL)
    cert = service.certify_instance(
        cfg.scenario, cfg.n, cfg.e[0], cfg.m, cfg.seeds[0],
        rho=cfg.rho[0], delta=cfg.delta[0], objectives=objs,
    )
    click.echo(json.dumps(cert.to_dict(), indent=2))


@cli.command("graph")
@click.option("--n", "n", type=int, required=True, help="Number of agents N.")
@click.option("--e", "e", type=int, required=True, help="Number of edges E.")
@click.option("--seed", type=int, default=0, help="Seed of the edge removal order.")
@click.option("--export", "export_path", type=click.Path(dir_okay=False), default=None, help="Write the graph JSON here.")
@_handle_errors
def graph_command(n, e, seed, export_path):
    """Generate a connected graph and print its spectral quantities."""
    service = ExperimentService()
    g = service.build_graph(n, e, seed)
    if export_path:
        g.save(export_path)
    spectral = spectral_quantities(graph_matrices(g))
    click.echo(json.dumps({"n": g.n_agents, "e": g.n_edges, "spectral": spectral.to_dict()}, indent=2))


@cli.command("serve")
@click.pass_context
def serve_command(ctx):
    """Run the HTTP API."""
    from . import create_app

    config = ctx.obj["config"]
    app = create_app(ctx.obj["env"])
    app.run(host=config.HOST, port=config.PORT, debug=config.DEBUG)


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
