"""
Route blueprints for the qcadmm HTTP API.
"""
from .api import api_bp

__all__ = ["api_bp"]


def register_blueprints(app):
    """
    Register all blueprints with the Flask app.

    Args:
        app: Flask application instance
    """
    app.register_blueprint(api_bp, url_prefix="/api")
