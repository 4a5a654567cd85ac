"""
Service modules for the simulator's domain logic.
"""
from .graph_service import NetworkGraph, GraphMatrices, SpectralData
from .quantizer_service import QuantizerConfig
from .objective_service import LocalObjective, ScaledQuadratic, QuadraticBox, LeastSquaresL1
from .oracle_service import ReferenceSolution
from .analysis_service import ConvergenceCertificate, OptimalPoint
from .admm_service import NetworkState, RunConfig, RunRecord
from .experiment_service import ExperimentConfig, ExperimentService, SweepSummary

__all__ = [
    "NetworkGraph",
    "GraphMatrices",
    "SpectralData",
    "QuantizerConfig",
    "LocalObjective",
    "ScaledQuadratic",
    "QuadraticBox",
    "LeastSquaresL1",
    "ReferenceSolution",
    "ConvergenceCertificate",
    "OptimalPoint",
    "NetworkState",
    "RunConfig",
    "RunRecord",
    "ExperimentConfig",
    "ExperimentService",
    "SweepSummary",
]
