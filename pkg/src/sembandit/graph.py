"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: directed acyclic graph tools
"""

# Import from Python
import logging
from typing import Iterable, Optional
import numpy as np
import networkx as nx

# Import from this package
from .errors import SembanditError, CycleDetected
from .logger import log_func_call

# Instantiate the module logger
logger = logging.getLogger(__name__)


def _build_digraph(node_count: int, edges: Iterable) -> nx.DiGraph:
    """ Assemble a networkx DiGraph on nodes 1..node_count, checking the edge labels. """

    if not isinstance(node_count, (int, np.integer)) or node_count < 1:
        raise SembanditError(f'node_count must be a positive integer, not: {node_count}')

    graph = nx.DiGraph()
    graph.add_nodes_from(range(1, node_count + 1))
    for edge in edges:
        if len(edge) != 2:
            raise SembanditError(f'Edges must be (i, j) pairs, not: {edge}')
        (src, dst) = (int(edge[0]), int(edge[1]))
        if not (1 <= src <= node_count and 1 <= dst <= node_count):
            raise SembanditError(f'Edge {edge} is outside of the node range 1..{node_count}')
        if src == dst:
            raise CycleDetected([src])
        graph.add_edge(src, dst)

    return graph


@log_func_call(logger)
def validate_and_order(node_count: int, edges: Iterable) -> tuple:
    """ Compute a topological order of a directed graph, or complain if there is none.

    Args:
        node_count (int): number of nodes N. Nodes are labelled 1..N.
        edges (iterable of (int, int)): the directed edges (i, j), meaning i -> j.

    Returns:
        tuple of int: a permutation of 1..N in which i comes before j for every edge i -> j.
        Ties are broken by ascending node index, such that an edgeless graph yields (1, ..., N).

    Raises:
        CycleDetected: if the edges contain a directed cycle. The error carries the nodes of one
            such cycle as its ``witness`` attribute.

    """

    graph = _build_digraph(node_count, edges)

    try:
        return tuple(nx.lexicographical_topological_sort(graph))
    except nx.NetworkXUnfeasible as err:
        witness = [edge[0] for edge in nx.find_cycle(graph)]
        raise CycleDetected(witness) from err


class DagSkeleton:
    """ An immutable directed acyclic graph on nodes 1..N, node N being the reward node.

    Args:
        node_count (int): number of nodes N.
        edges (iterable of (int, int)): the directed edges (i, j), meaning i -> j.
        max_in_degree (int, optional): declared max in-degree d. If set, it must match the
            value recomputed from the edges. Defaults to None.
        depth (int, optional): declared max causal depth L. If set, it must match the value
            recomputed from the edges. Defaults to None.

    The causal depth L_i of node i is the length of the longest directed path ending at i.

    """

    def __init__(self, node_count: int, edges: Iterable, max_in_degree: Optional[int] = None,
                 depth: Optional[int] = None) -> None:

        edges = [(int(src), int(dst)) for (src, dst) in edges]
        self._order = validate_and_order(node_count, edges)
        self._graph = nx.freeze(_build_digraph(node_count, edges))
        self._n = int(node_count)
        self._edges = frozenset(edges)

        self._parents = {i: tuple(sorted(self._graph.predecessors(i))) for i in self.nodes}
        self._depths = {}
        for i in self._order:
            self._depths[i] = max((self._depths[j] + 1 for j in self._parents[i]), default=0)

        if max_in_degree is not None and max_in_degree != self.max_in_degree:
            raise SembanditError(f'Declared max in-degree {max_in_degree} does not match the' +
                                 f' edges (recomputed: {self.max_in_degree})')
        if depth is not None and depth != self.depth:
            raise SembanditError(f'Declared depth {depth} does not match the edges' +
                                 f' (recomputed: {self.depth})')

    def __repr__(self) -> str:
        return f'DagSkeleton(node_count={self._n}, edges={sorted(self._edges)})'

    def __eq__(self, other) -> bool:
        if not isinstance(other, DagSkeleton):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._n, self._edges))

    @property
    def n_nodes(self) -> int:
        """ The number of nodes N. """
        return self._n

    @property
    def nodes(self) -> range:
        """ The node labels 1..N. """
        return range(1, self._n + 1)

    @property
    def reward_node(self) -> int:
        """ The reward node, i.e. N. """
        return self._n

    @property
    def edges(self) -> frozenset:
        """ The set of directed edges (i, j). """
        return self._edges

    @property
    def graph(self) -> nx.DiGraph:
        """ A frozen networkx view of the graph. """
        return self._graph

    @property
    def order(self) -> tuple:
        """ The topological order, with ties broken by ascending node index. """
        return self._order

    def parents(self, i: int) -> tuple:
        """ Pa(i), sorted. """
        return self._parents[i]

    def children(self, i: int) -> tuple:
        """ The children of node i, sorted. """
        return tuple(sorted(self._graph.successors(i)))

    def ancestors(self, i: int) -> frozenset:
        """ An(i), excluding i itself. """
        return frozenset(nx.ancestors(self._graph, i))

    def descendants(self, i: int) -> frozenset:
        """ De(i), excluding i itself. """
        return frozenset(nx.descendants(self._graph, i))

    def depth_of(self, i: int) -> int:
        """ The causal depth L_i. """
        return self._depths[i]

    @property
    def depths(self) -> dict:
        """ Mapping node -> L_i. """
        return dict(self._depths)

    @property
    def max_in_degree(self) -> int:
        """ d = max_i |Pa(i)|. """
        return max(len(pa) for pa in self._parents.values())

    @property
    def depth(self) -> int:
        """ L = max_i L_i. """
        return max(self._depths.values())

    @property
    def effective_nodes(self) -> frozenset:
        """ An(N) together with N: the nodes that can influence the reward. """
        return self.ancestors(self._n) | {self._n}

    @property
    def effective_in_degree(self) -> int:
        """ d_e, the max in-degree over :py:attr:`effective_nodes`. """
        return max(len(self._parents[i]) for i in self.effective_nodes)

    @property
    def effective_depth(self) -> int:
        """ L_e, the max causal depth over :py:attr:`effective_nodes`. """
        return max(self._depths[i] for i in self.effective_nodes)

    @property
    def adjacency(self) -> np.ndarray:
        """ The N x N boolean matrix with [j-1, i-1] True iff j -> i. """
        out = np.zeros((self._n, self._n), dtype=bool)
        for (src, dst) in self._edges:
            out[src - 1, dst - 1] = True
        return out

    @classmethod
    def from_parents(cls, parents: dict, node_count: Optional[int] = None) -> 'DagSkeleton':
        """ Build a skeleton from a mapping node -> iterable of parents.

        Args:
            parents (dict): node -> parents.
            node_count (int, optional): N. Defaults to max(parents.keys()).

        """

        if node_count is None:
            node_count = max(parents.keys())
        edges = [(j, i) for (i, pa) in parents.items() for j in pa]
        return cls(node_count, edges)
