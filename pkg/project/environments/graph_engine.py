"""
Graphs and the PageRank random walk built on them.

Edge-list files hold one edge per line, ``src dst`` or ``src dst weight``; blank lines
and lines starting with ``#`` are skipped. Vertex ids are remapped to dense 0-based
indices in order of first appearance; the original ids are kept on the Graph.
"""
import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
import pandas as pd

from environments.exceptions import EdgeListFormatError
from markov.exceptions import InvalidParameterError
from markov.sampling_engine import TransitionSampler
from markov.structures import Distribution, MarkovChain, TransitionDataset, frozen_array

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Graph:
    n_vertices: int
    edges: np.ndarray
    weights: np.ndarray = None
    directed: bool = True
    vertex_ids: tuple = None

    def __post_init__(self):
        edges = frozen_array(np.reshape(self.edges, (-1, 2)), dtype=np.int64)
        if edges.size and (edges.min() < 0 or edges.max() >= self.n_vertices):
            raise InvalidParameterError('Edge endpoints must lie in [0, {}).'.format(self.n_vertices))
        object.__setattr__(self, 'edges', edges)
        if self.weights is not None:
            weights = frozen_array(self.weights)
            if weights.shape != (edges.shape[0],) or (weights.size and weights.min() <= 0):
                raise InvalidParameterError('Edge weights must be positive, one per edge.')
            object.__setattr__(self, 'weights', weights)

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def arcs(self):
        """ Directed arcs and their weights; undirected edges contribute both directions. """
        weights = np.ones(self.n_edges) if self.weights is None else np.asarray(self.weights)
        if self.directed:
            return self.edges, weights
        return np.concatenate([self.edges, self.edges[:, ::-1]]), np.concatenate([weights, weights])

    def in_degrees(self):
        arcs, _ = self.arcs()
        return np.bincount(arcs[:, 1], minlength=self.n_vertices)


def generate_ba(n, m, m0=None, seed=0, weighted=False):
    """ Generates a Barabasi-Albert preferential-attachment graph.

    The seed network is a clique on ``m0`` vertices (``m + 1`` by default); every new
    vertex attaches to ``m`` distinct existing vertices with probability proportional
    to their degree, so the graph has m0 * (m0 - 1) / 2 + m * (n - m0) edges.

    Args:
        n: Number of vertices.
        m: Edges added per new vertex.
        m0: Size of the seed clique, at least 2 so the clique has edges.
        seed: Seed for the attachment process and for the optional weights.
        weighted: Attach |N(0, 1)| weights to the edges.

    Returns: An undirected Graph.
    """
    m0 = m + 1 if m0 is None else m0
    if not (1 <= m <= m0 < n) or m0 < 2:
        raise InvalidParameterError('generate_ba needs 1 <= m <= m0 < n and m0 >= 2, got n={}, m={}, m0={}.'.format(
            n, m, m0
        ))
    network = nx.barabasi_albert_graph(n, m, seed=seed, initial_graph=nx.complete_graph(m0))
    edges = np.array(list(network.edges()), dtype=np.int64)
    weights = None
    if weighted:
        weights = np.abs(np.random.default_rng(seed).standard_normal(edges.shape[0]))
        weights = np.maximum(weights, np.finfo(float).tiny)
    return Graph(n_vertices=n, edges=edges, weights=weights, directed=False)


def load_edge_list(path, directed=True):
    """ Reads an edge-list file into a Graph with dense vertex indices.

    Repeated (src, dst) pairs are merged, summing their weights.
    """
    dense_ids = {}
    edges = {}
    weighted = None
    with open(path) as edge_file:
        for line_number, line in enumerate(edge_file, start=1):
            text = line.strip()
            if not text or text.startswith('#'):
                continue
            fields = text.split()
            if len(fields) not in (2, 3):
                raise EdgeListFormatError(path, line_number, 'expected "src dst [weight]", got {!r}'.format(text))
            if weighted is None:
                weighted = len(fields) == 3
            elif weighted != (len(fields) == 3):
                raise EdgeListFormatError(path, line_number, 'mixes weighted and unweighted edges')
            try:
                weight = float(fields[2]) if weighted else 1.0
            except ValueError:
                raise EdgeListFormatError(path, line_number, 'weight {!r} is not a number'.format(fields[2]))
            if weight <= 0:
                raise EdgeListFormatError(path, line_number, 'weight must be positive')
            src, dst = (dense_ids.setdefault(vertex, len(dense_ids)) for vertex in fields[:2])
            if (src, dst) in edges:
                logger.warning('%s:%d repeats edge %s -> %s; merging.', path, line_number, fields[0], fields[1])
                edges[(src, dst)] += weight
            else:
                edges[(src, dst)] = weight
    if not edges:
        raise EdgeListFormatError(path, 0, 'file holds no edges')

    vertex_ids = tuple(sorted(dense_ids, key=dense_ids.get))
    return Graph(
        n_vertices=len(vertex_ids),
        edges=np.array(list(edges.keys()), dtype=np.int64),
        weights=np.array(list(edges.values())) if weighted else None,
        directed=directed,
        vertex_ids=vertex_ids,
    )


def original_ids(graph):
    if graph.vertex_ids is None:
        return [str(vertex) for vertex in range(graph.n_vertices)]
    return list(graph.vertex_ids)


def save_edge_list(graph, path):
    ids = original_ids(graph)
    with open(path, 'w') as edge_file:
        for index, (src, dst) in enumerate(graph.edges):
            if graph.weights is None:
                edge_file.write('{} {}\n'.format(ids[src], ids[dst]))
            else:
                edge_file.write('{} {} {!r}\n'.format(ids[src], ids[dst], float(graph.weights[index])))


def save_vertex_map(graph, path):
    """ Writes the ``original_id,dense_id`` remap table as CSV. """
    frame = pd.DataFrame({'original_id': original_ids(graph), 'dense_id': np.arange(graph.n_vertices)})
    frame.to_csv(path, index=False)


def pagerank_chain(graph, eta):
    """ The PageRank transition with teleportation ``eta``.

    P(u|v) = (1 - eta) * w(v, u) / sum_u' w(v, u') + eta / |V|; vertices without
    out-arcs jump uniformly.

    Examples:
    >>> cycle = Graph(3, [[0, 1], [1, 2], [2, 0]])
    >>> pagerank_chain(cycle, 0.1).transition[0]
    array([0.03333333, 0.93333333, 0.03333333])
    """
    if not 0.0 <= eta < 1.0:
        raise InvalidParameterError('eta must lie in [0, 1), got {}.'.format(eta))
    n = graph.n_vertices
    arcs, weights = graph.arcs()
    adjacency = np.zeros((n, n))
    np.add.at(adjacency, (arcs[:, 0], arcs[:, 1]), weights)
    out_weight = adjacency.sum(axis=1, keepdims=True)
    dangling = out_weight[:, 0] == 0
    if dangling.any():
        logger.debug('%d dangling vertices get uniform rows.', int(dangling.sum()))
    with np.errstate(invalid='ignore', divide='ignore'):
        transition = np.where(out_weight > 0, (1.0 - eta) * adjacency / out_weight + eta / n, 1.0 / n)
    return MarkovChain(transition, Distribution.uniform(n), 1.0)


def random_walk_dataset(chain, n_samples, seed):
    """ One walk of ``n_samples`` steps from mu0, recorded as (v, v') pairs.

    The action dimension is degenerate (a single action) and rewards are zero.
    """
    if n_samples < 1:
        raise InvalidParameterError('n_samples must be at least 1, got {}.'.format(n_samples))
    rng = np.random.default_rng(seed)
    sampler = TransitionSampler(chain.transition)
    draws = np.empty(n_samples + 1, dtype=np.int64)
    draws[0] = rng.choice(chain.n_states, p=chain.mu0.probs)
    for step in range(n_samples):
        draws[step + 1] = sampler.sample(draws[step:step + 1], rng)[0]
    return TransitionDataset(
        n_states=chain.n_states,
        n_actions=1,
        states=draws[:-1],
        actions=np.zeros(n_samples, dtype=np.int64),
        rewards=np.zeros(n_samples),
        next_states=draws[1:],
        initial_states=draws[:1],
    )
