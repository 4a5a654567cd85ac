"""
Configuration management for the qcadmm simulator.
"""
import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Base configuration class."""

    # Algorithm defaults (rho and mu as suggested for the QC-ADMM certificates)
    RHO = float(os.getenv("QCADMM_RHO", "1.0"))
    MU = float(os.getenv("QCADMM_MU", "1.5"))
    DELTA = float(os.getenv("QCADMM_DELTA", "1.0"))
    MAX_ITERATIONS = int(os.getenv("QCADMM_MAX_ITER", "500"))

    # Oracle settings
    REFERENCE_TOL = float(os.getenv("QCADMM_REFERENCE_TOL", "1e-10"))

    # Sweep settings
    SWEEP_WORKERS = int(os.getenv("QCADMM_WORKERS", "4"))
    OUTPUT_DIR = os.path.expanduser(os.getenv("QCADMM_OUTPUT_DIR", "./results"))

    # Logging
    LOG_LEVEL = os.getenv("QCADMM_LOG_LEVEL", "INFO").upper()

    # HTTP API settings
    HOST = os.getenv("HOST", "127.0.0.1")
    PORT = int(os.getenv("PORT", 8000))
    DEBUG = os.getenv("DEBUG", "false").lower() == "true"

    @classmethod
    def ensure_directories(cls):
        """Ensure required directories exist."""
        os.makedirs(cls.OUTPUT_DIR, exist_ok=True)


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True
    LOG_LEVEL = "DEBUG"


class ProductionConfig(Config):
    """Production configuration."""
    DEBUG = False


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    SWEEP_WORKERS = 1
    MAX_ITERATIONS = 200
    LOG_LEVEL = "WARNING"
    OUTPUT_DIR = os.path.join(os.getenv("TMPDIR", "/tmp"), "qcadmm_test_results")


# Configuration dictionary for easy access
config_by_name = {
    "development": DevelopmentConfig,
    "production": ProductionConfig,
    "testing": TestingConfig,
    "default": Config,
}


def get_config(config_name: str = None) -> Config:
    """Get configuration by name, defaulting to the QCADMM_ENV environment variable."""
    if config_name is None:
        config_name = os.getenv("QCADMM_ENV", "default")
    return config_by_name.get(config_name, Config)
