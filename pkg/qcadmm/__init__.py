"""
Flask application factory for the quantized consensus ADMM simulator.
"""
__version__ = "0.1.0"

import logging

from flask import Flask, jsonify
from werkzeug.exceptions import HTTPException

from .config import get_config, Config
from .errors import InvalidArgumentError, NumericalError, QCADMMError
from .services.experiment_service import ExperimentService
from .routes import register_blueprints
from .utils.log_utils import configure_logging

logger = logging.getLogger(__name__)


def create_app(config_name: str = None) -> Flask:
    """
    Create and configure the Flask application.

    Args:
        config_name: Configuration name (development, production, testing)

    Returns:
        Configured Flask application
    """
    app = Flask(__name__)

    #load configuration
    config = get_config(config_name)
    app.config.from_object(config)

    #store config object for easy access
    app.config_obj = config

    configure_logging(config.LOG_LEVEL)

    # Ensure required directories exist
    config.ensure_directories()

    # Initialize services
    _init_services(app, config)

    # Register blueprints
    register_blueprints(app)

    # Register error handlers
    _register_error_handlers(app)

    # Log startup information
    _log_startup_info(app, config)

    return app


def _init_services(app: Flask, config: Config) -> None:
    """Initialize application services."""
    app.experiment_service = ExperimentService(
        workers=config.SWEEP_WORKERS,
        mu=config.MU,
        reference_tol=config.REFERENCE_TOL,
    )


def _register_error_handlers(app: Flask) -> None:
    """Register error handlers returning JSON bodies."""

    @app.errorhandler(InvalidArgumentError)
    def invalid_argument(e):
        return jsonify(error=str(e)), 400

    @app.errorhandler(NumericalError)
    def numerical_error(e):
        return jsonify(error=str(e), residual=e.residual), 422

    @app.errorhandler(404)
    def not_found(e):
        return jsonify(error="Not found."), 404

    @app.errorhandler(405)
    def method_not_allowed(e):
        return jsonify(error="Method not allowed."), 405

    @app.errorhandler(500)
    def internal_server_error(e):
        return jsonify(error="An unexpected error occurred."), 500

    @app.errorhandler(QCADMMError)
    def qcadmm_error(e):
        return jsonify(error=str(e)), 500

    @app.errorhandler(HTTPException)
    def http_error(e):
        return jsonify(error=e.description), e.code


def _log_startup_info(app: Flask, config: Config) -> None:
    """Log startup information."""
    logger.info("-" * 50)
    logger.info("Starting qcadmm %s API...", __version__)
    logger.info("Defaults: rho=%g mu=%g delta=%g max_iter=%d", config.RHO, config.MU, config.DELTA, config.MAX_ITERATIONS)
    logger.info("Reference tolerance: %g", config.REFERENCE_TOL)
    logger.info("Sweep workers: %d", app.experiment_service.workers)
    logger.info("Output directory: %s", config.OUTPUT_DIR)
    logger.info("-" * 50)
