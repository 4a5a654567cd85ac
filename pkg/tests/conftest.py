import numpy as np
import pytest

from qcadmm import create_app
from qcadmm.services.graph_service import NetworkGraph, random_connected_graph
from qcadmm.services.objective_service import ScaledQuadratic, build_problem_instance


@pytest.fixture
def app():
    app = create_app("testing")
    return app


@pytest.fixture
def two_node_graph():
    return NetworkGraph.from_edges(2, [(0, 1)])


@pytest.fixture
def two_node_objectives():
    # gradients x + 3/2 and x + 7/2
    return [ScaledQuadratic(a=0.5, b=[1.5]), ScaledQuadratic(a=0.5, b=[3.5])]


@pytest.fixture
def two_node_init():
    return np.array([[-1.0], [-1.0]]), np.array([[1.0], [-1.0]])


@pytest.fixture
def path_graph():
    return NetworkGraph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def small_quadratic():
    """(graph, objectives) of a seeded smooth instance with N=6, E=9, M=2."""
    return random_connected_graph(6, 9, 3), build_problem_instance("quadratic", 6, 2, 3)
