"""
Network topologies and the incidence/Laplacian matrices derived from them.

Arc ordering is fixed once for the whole package: edges are sorted
lexicographically with i < j, and every edge (i, j) contributes the arc
(i, j) followed by the arc (j, i). Column q of the incidence matrices
corresponds to arc q.
"""
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..errors import InvalidArgumentError, NumericalError
from ..utils.linalg_utils import as_agent_matrix, min_norm_solve, symmetric_eigenvalues

logger = logging.getLogger(__name__)

GRAPH_STREAM = 0


@dataclass(frozen=True)
class NetworkGraph:
    """Connected undirected simple graph over agents 0..N-1."""

    n_agents: int
    edges: Tuple[Tuple[int, int], ...]
    neighbor_sets: Tuple[Tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def from_edges(cls, n_agents: int, edges: Sequence[Sequence[int]]) -> "NetworkGraph":
        """
        Build a graph from an edge list, validating every invariant.

        Args:
            n_agents: Number of agents N
            edges: Unordered pairs (i, j)

        Returns:
            The validated graph

        Raises:
            InvalidArgumentError: self-loops, duplicates, out-of-range agents,
                or a disconnected graph
        """
        if int(n_agents) != n_agents or n_agents < 1:
            raise InvalidArgumentError(f"n_agents must be a positive integer, got {n_agents}")
        n_agents = int(n_agents)

        normalized = set()
        for edge in edges:
            if len(edge) != 2:
                raise InvalidArgumentError(f"edge {edge!r} is not a pair")
            i, j = int(edge[0]), int(edge[1])
            if i == j:
                raise InvalidArgumentError(f"self-loop at agent {i}")
            if not (0 <= i < n_agents and 0 <= j < n_agents):
                raise InvalidArgumentError(f"edge ({i}, {j}) references an agent outside 0..{n_agents - 1}")
            pair = (min(i, j), max(i, j))
            if pair in normalized:
                raise InvalidArgumentError(f"duplicate edge {pair}")
            normalized.add(pair)

        sorted_edges = tuple(sorted(normalized))
        neighbors: List[List[int]] = [[] for _ in range(n_agents)]
        for i, j in sorted_edges:
            neighbors[i].append(j)
            neighbors[j].append(i)

        graph = cls(
            n_agents=n_agents,
            edges=sorted_edges,
            neighbor_sets=tuple(tuple(sorted(nbrs)) for nbrs in neighbors),
        )
        if not nx.is_connected(graph.to_networkx()):
            raise InvalidArgumentError("graph is not connected")
        return graph

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.neighbor_sets], dtype=int)

    @property
    def arcs(self) -> List[Tuple[int, int]]:
        """Directed arcs in the package-wide order: (i, j) then (j, i) per sorted edge."""
        arcs = []
        for i, j in self.edges:
            arcs.append((i, j))
            arcs.append((j, i))
        return arcs

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_agents))
        g.add_edges_from(self.edges)
        return g

    def to_dict(self) -> Dict:
        return {"n": self.n_agents, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: Dict) -> "NetworkGraph":
        if not isinstance(data, dict) or "n" not in data or "edges" not in data:
            raise InvalidArgumentError("graph JSON must contain 'n' and 'edges'")
        return cls.from_edges(data["n"], data["edges"])

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=4)

    @classmethod
    def load(cls, path: str) -> "NetworkGraph":
        with open(path, "r") as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class GraphMatrices:
    """Base (non-extended) incidence, Laplacian and degree matrices of a graph."""

    m_plus: np.ndarray
    m_minus: np.ndarray
    l_plus: np.ndarray
    l_minus: np.ndarray
    w_degree: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.m_plus.shape[0]

    @property
    def n_arcs(self) -> int:
        return self.m_plus.shape[1]

    @property
    def a1(self) -> np.ndarray:
        """A1 (2E x N): row q selects the tail agent of arc q."""
        return (0.5 * (self.m_plus + self.m_minus)).T

    @property
    def a2(self) -> np.ndarray:
        """A2 (2E x N): row q selects the head agent of arc q."""
        return (0.5 * (self.m_plus - self.m_minus)).T


@dataclass(frozen=True)
class SpectralData:
    sigma_max_m_plus: float
    sigma_max_m_minus: float
    sigma_min_nonzero_m_minus: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "sigma_max_m_plus": self.sigma_max_m_plus,
            "sigma_max_m_minus": self.sigma_max_m_minus,
            "sigma_min_nonzero_m_minus": self.sigma_min_nonzero_m_minus,
        }


def random_connected_graph(n: int, e: int, seed: int) -> NetworkGraph:
    """
    Random connected simple graph with exactly e edges.

    Starts from the complete graph, walks its edges in a seeded random order
    and removes each one whose endpoints stay connected without it, until e
    edges remain.

    Args:
        n: Number of agents (at least 2)
        e: Number of edges, n-1 <= e <= n(n-1)/2
        seed: Seed of the edge shuffle

    Returns:
        The generated graph
    """
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"n must be an integer >= 2, got {n}")
    n = int(n)
    max_edges = n * (n - 1) // 2
    if int(e) != e or not (n - 1 <= e <= max_edges):
        raise InvalidArgumentError(f"e must be an integer in [{n - 1}, {max_edges}], got {e}")
    e = int(e)

    rng = np.random.default_rng([int(seed), GRAPH_STREAM])
    complete = [(i, j) for i in range(n) for j in range(i + 1, n)]
    order = rng.permutation(len(complete))

    g = nx.complete_graph(n)
    to_remove = max_edges - e
    for idx in order:
        if to_remove == 0:
            break
        u, v = complete[idx]
        g.remove_edge(u, v)
        if nx.has_path(g, u, v):
            to_remove -= 1
        else:
            g.add_edge(u, v)

    # a single pass leaves a spanning tree at worst, so this cannot trigger for valid e
    if to_remove != 0:
        raise NumericalError(f"could not remove enough edges to reach e={e}")

    logger.debug("Generated connected graph n=%d e=%d seed=%s", n, e, seed)
    return NetworkGraph.from_edges(n, list(g.edges()))


def build_matrices(g: NetworkGraph) -> GraphMatrices:
    """
    Incidence matrices M+ (unoriented) and M- (oriented), Laplacians and degree matrix.

    Column q of M+ is e_i + e_j and of M- is e_i - e_j for arc q = (i, j).
    """
    arcs = g.arcs
    m_plus = np.zeros((g.n_agents, len(arcs)))
    m_minus = np.zeros((g.n_agents, len(arcs)))
    for q, (i, j) in enumerate(arcs):
        m_plus[i, q] = 1.0
        m_plus[j, q] = 1.0
        m_minus[i, q] = 1.0
        m_minus[j, q] = -1.0

    l_plus = 0.5 * m_plus @ m_plus.T
    l_minus = 0.5 * m_minus @ m_minus.T
    w_degree = 0.5 * (l_plus + l_minus)
    return GraphMatrices(
        m_plus=m_plus,
        m_minus=m_minus,
        l_plus=l_plus,
        l_minus=l_minus,
        w_degree=w_degree,
    )


@lru_cache(maxsize=64)
def graph_matrices(g: NetworkGraph) -> GraphMatrices:
    """Memoized build_matrices; the engines call this once per step."""
    return build_matrices(g)


def spectral_quantities(m: GraphMatrices) -> SpectralData:
    """
    Largest singular values of M+ and M-, and the smallest nonzero one of M-.

    Uses sigma^2(M) = eig(M M^T) = eig(2L); the Kronecker extension with I_M
    leaves these values unchanged.
    """
    eig_plus = symmetric_eigenvalues(2.0 * m.l_plus)
    eig_minus = symmetric_eigenvalues(2.0 * m.l_minus)

    top_minus = max(eig_minus[-1], 0.0)
    cutoff = 1e-10 * max(top_minus, 1.0)
    nonzero = eig_minus[eig_minus > cutoff]
    if nonzero.size == 0:
        raise NumericalError("signed Laplacian has no nonzero eigenvalue; graph must have an edge")

    return SpectralData(
        sigma_max_m_plus=float(np.sqrt(max(eig_plus[-1], 0.0))),
        sigma_max_m_minus=float(np.sqrt(top_minus)),
        sigma_min_nonzero_m_minus=float(np.sqrt(nonzero[0])),
    )


def column_space_residual(v, m: GraphMatrices) -> float:
    """Norm of the part of v (N*M, agent-major) that lies outside range(L-) block-wise."""
    v_mat = as_agent_matrix(v, m.n_agents, name="v")
    _, residual = min_norm_solve(m.l_minus, v_mat)
    return float(np.linalg.norm(residual))


def is_in_column_space_l_minus(v, m: GraphMatrices, tol: Optional[float] = None) -> bool:
    """
    Whether every coordinate slice of v lies in the column space of L-.

    Args:
        v: Vector of length N*M (or an (N, M) array)
        m: Graph matrices
        tol: Residual tolerance; defaults to 1e-9 * (1 + ||v||_2)

    Returns:
        True if the least-squares residual is within tol
    """
    v_mat = as_agent_matrix(v, m.n_agents, name="v")
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.linalg.norm(v_mat)))
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    return column_space_residual(v_mat, m) <= tol
