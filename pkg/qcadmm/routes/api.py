"""
API routes for programmatic access to graphs, certificates and runs.
"""
from flask import Blueprint, request, jsonify, current_app

from .. import __version__
from ..services.admm_service import ENGINES, RunConfig
from ..services.graph_service import graph_matrices, spectral_quantities

api_bp = Blueprint("api", __name__)

INSTANCE_FIELDS = ("scenario", "n", "e", "m", "seed")


def _instance_args(data):
    """Pull the instance fields from a request body; returns (args, error message)."""
    if not data:
        return None, "Invalid request."
    missing = [name for name in INSTANCE_FIELDS if name not in data]
    if missing:
        return None, f"Missing fields: {', '.join(missing)}."
    try:
        args = {
            "scenario": str(data["scenario"]),
            "n": int(data["n"]),
            "e": int(data["e"]),
            "m": int(data["m"]),
            "seed": int(data["seed"]),
        }
    except (TypeError, ValueError):
        return None, "Fields n, e, m and seed must be integers."
    return args, None


def _float_field(data, name, default):
    value = data.get(name, default)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValueError(f"Field {name} must be a number.")


@api_bp.route("/health", methods=["GET"])
def health():
    """Liveness check."""
    return jsonify(status="ok", version=__version__)


@api_bp.route("/graph", methods=["POST"])
def graph():
    """Generate a seeded random connected graph and report its spectral quantities."""
    service = current_app.experiment_service
    data = request.get_json(silent=True)
    if not data or not all(k in data for k in ("n", "e", "seed")):
        return jsonify(error="Fields n, e and seed are required."), 400
    try:
        n, e, seed = int(data["n"]), int(data["e"]), int(data["seed"])
    except (TypeError, ValueError):
        return jsonify(error="Fields n, e and seed must be integers."), 400

    g = service.build_graph(n, e, seed)
    spectral = spectral_quantities(graph_matrices(g))
    return jsonify(graph=g.to_dict(), degrees=g.degrees.tolist(), spectral=spectral.to_dict())


@api_bp.route("/certify", methods=["POST"])
def certify():
    """Certificate for a seeded problem instance."""
    config = current_app.config_obj
    service = current_app.experiment_service
    data = request.get_json(silent=True)
    args, message = _instance_args(data)
    if message:
        return jsonify(error=message), 400
    try:
        rho = _float_field(data, "rho", config.RHO)
        delta = _float_field(data, "delta", config.DELTA)
        mu = _float_field(data, "mu", config.MU)
    except ValueError as e:
        return jsonify(error=str(e)), 400

    cert = service.certify_instance(rho=rho, delta=delta, mu=mu, **args)
    return jsonify(certificate=cert.to_dict())


@api_bp.route("/run", methods=["POST"])
def run():
    """Run one engine on a seeded problem instance and return its summary."""
    config = current_app.config_obj
    service = current_app.experiment_service
    data = request.get_json(silent=True)
    args, message = _instance_args(data)
    if message:
        return jsonify(error=message), 400

    engine = data.get("engine", "qc_admm")
    if engine not in ENGINES:
        return jsonify(error=f"Unknown engine {engine}."), 400
    try:
        rho = _float_field(data, "rho", config.RHO)
        delta = _float_field(data, "delta", config.DELTA)
        max_iterations = int(data.get("max_iterations", config.MAX_ITERATIONS))
    except (TypeError, ValueError) as e:
        return jsonify(error=str(e)), 400

    run_config = RunConfig(rho=rho, delta=delta, max_iterations=max_iterations)
    outcome = service.run_instance(config=run_config, engine=engine, **args)
    return jsonify(outcome.summary())
