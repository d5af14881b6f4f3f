"""Threshold networks over correlation matrices and their topology.

Graphs are small (a few hundred nodes at most) and immutable. Adjacency
is kept as sorted integer neighbour tuples so that triangle counts reduce
to merges of sorted lists and BFS touches each edge once per source.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .correlation import CorrelationMatrix

Edge = Tuple[str, str]

DENSITY_CONVENTIONS = ("prose", "paper")
CLUSTERING_RULES = ("paper", "standard")


def edge_key(a: str, b: str) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Graph:
    nodes: Tuple[str, ...]
    edges: FrozenSet[Edge]
    weights: Mapping[Edge, float] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("node labels must be unique")
        present = set(self.nodes)
        edges = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in present or b not in present:
                raise ValueError(f"edge ({a!r}, {b!r}) references an unknown node")
            edges.add(edge_key(a, b))
        object.__setattr__(self, "edges", frozenset(edges))

    @cached_property
    def index(self) -> Dict[str, int]:
        return {label: k for k, label in enumerate(self.nodes)}

    @cached_property
    def neighbors(self) -> Tuple[Tuple[int, ...], ...]:
        adj: List[List[int]] = [[] for _ in self.nodes]
        for a, b in self.edges:
            i, j = self.index[a], self.index[b]
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(nbrs)) for nbrs in adj)

    def degree(self, label: str) -> int:
        return len(self.neighbors[self.index[label]])

    def components(self) -> List[List[int]]:
        """Connected components as lists of node indices, in discovery order."""
        seen = [False] * len(self.nodes)
        out = []
        for source in range(len(self.nodes)):
            if seen[source]:
                continue
            seen[source] = True
            comp = [source]
            queue = deque([source])
            while queue:
                u = queue.popleft()
                for v in self.neighbors[u]:
                    if not seen[v]:
                        seen[v] = True
                        comp.append(v)
                        queue.append(v)
            out.append(sorted(comp))
        return out

    def subgraph(self, labels: Iterable[str]) -> Tuple[Tuple[str, ...], FrozenSet[Edge]]:
        keep = set(labels)
        nodes = tuple(label for label in self.nodes if label in keep)
        edges = frozenset(e for e in self.edges if e[0] in keep and e[1] in keep)
        return nodes, edges


@dataclass(frozen=True)
class ThresholdNetwork(Graph):
    theta: float = 0.0
    window_label: str = ""


@dataclass(frozen=True)
class Cluster(Graph):
    """A connected, maximal component of a threshold network."""

    theta: float = 0.0
    window_label: str = ""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.nodes:
            raise ValueError("a cluster needs at least one node")
        if len(self.components()) != 1:
            raise ValueError("cluster is not connected")

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], nodes: Sequence[str] = ()) -> "Cluster":
        edges = [edge_key(a, b) for a, b in edges]
        labels = list(nodes) or sorted({x for e in edges for x in e})
        return cls(tuple(labels), frozenset(edges))


@dataclass(frozen=True)
class WindowReport:
    window_label: str
    theta: float
    n_nodes: int
    n_edges: int
    density: Optional[float]
    path_length: Optional[float]
    clustering: float
    density_convention: str = "prose"
    clustering_rule: str = "paper"
    total_nodes: int = 0
    total_edges: int = 0
    n_components: int = 0


def build_threshold_network(
    corr: CorrelationMatrix, theta: float = 0.3
) -> ThresholdNetwork:
    """Link every pair whose correlation is greater than or equal to ``theta``."""
    if not -1.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [-1, 1], got {theta}")
    labels = corr.instruments
    values = corr.values
    n = len(labels)
    weights = {}
    for i in range(n):
        for j in range(i + 1, n):
            c = float(values[i, j])
            if c >= theta:
                weights[edge_key(labels[i], labels[j])] = c
    return ThresholdNetwork(labels, frozenset(weights), weights, theta, corr.window_label)


def largest_cluster(net: Graph) -> Cluster:
    """Largest connected component; ties go to the component whose smallest
    label sorts first."""
    if not net.nodes:
        raise ValueError("network has no nodes")
    best = min(
        net.components(),
        key=lambda comp: (-len(comp), min(net.nodes[k] for k in comp)),
    )
    nodes, edges = net.subgraph(net.nodes[k] for k in best)
    weights = {e: net.weights[e] for e in edges if e in net.weights}
    return Cluster(
        nodes,
        edges,
        weights,
        getattr(net, "theta", 0.0),
        getattr(net, "window_label", ""),
    )


def density(cluster: Graph, convention: str = "prose") -> Optional[float]:
    """Realised fraction of possible links.

    ``prose`` gives 2M / (N(N-1)); ``paper`` gives the literal M / (N(N-1)),
    which is exactly half of it. ``None`` when N < 2.
    """
    if convention not in DENSITY_CONVENTIONS:
        raise ValueError(f"density convention must be one of {DENSITY_CONVENTIONS}")
    n, m = len(cluster.nodes), len(cluster.edges)
    if n < 2:
        return None
    numerator = 2 * m if convention == "prose" else m
    return numerator / (n * (n - 1))


def bfs_distances(graph: Graph, source: int) -> List[int]:
    """Hop counts from ``source``; -1 marks unreachable nodes."""
    dist = [-1] * len(graph.nodes)
    dist[source] = 0
    queue = deque([source])
    neighbors = graph.neighbors
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in neighbors[u]:
            if dist[v] < 0:
                dist[v] = du
                queue.append(v)
    return dist


def total_path_length(graph: Graph) -> int:
    """Sum of shortest-path hop counts over unordered pairs of a connected graph."""
    n = len(graph.nodes)
    total = 0
    for source in range(n):
        dist = bfs_distances(graph, source)
        tail = dist[source + 1:]
        if min(tail, default=0) < 0:
            raise ValueError("graph is not connected")
        total += sum(tail)
    return total


def characteristic_path_length(cluster: Graph) -> Optional[float]:
    """Mean shortest-path length over all N(N-1)/2 node pairs; ``None`` if N < 2."""
    n = len(cluster.nodes)
    if n < 2:
        return None
    return total_path_length(cluster) / (n * (n - 1) // 2)


def _count_common(a: Sequence[int], b: Sequence[int]) -> int:
    i = j = count = 0
    while i < len(a) and j < len(b):
        if a[i] < b[j]:
            i += 1
        elif a[i] > b[j]:
            j += 1
        else:
            count += 1
            i += 1
            j += 1
    return count


def local_clustering(graph: Graph, rule: str = "paper") -> List[float]:
    """Per-node C_i = 2 m_i / (n_i (n_i - 1)).

    Under ``paper`` C_i is zero whenever n_i <= 2, so a vertex of degree
    two scores zero even if its neighbours are linked. ``standard`` zeroes
    only n_i < 2.
    """
    if rule not in CLUSTERING_RULES:
        raise ValueError(f"clustering rule must be one of {CLUSTERING_RULES}")
    min_degree = 3 if rule == "paper" else 2
    neighbors = graph.neighbors
    out = []
    for u, nbrs in enumerate(neighbors):
        k = len(nbrs)
        if k < min_degree:
            out.append(0.0)
            continue
        # each neighbour-neighbour link is seen from both ends
        links = sum(_count_common(nbrs, neighbors[v]) for v in nbrs) // 2
        out.append(2 * links / (k * (k - 1)))
    return out


def average_clustering(cluster: Graph, rule: str = "paper") -> float:
    values = local_clustering(cluster, rule)
    if not values:
        raise ValueError("average clustering needs at least one node")
    return sum(values) / len(values)


def window_report(
    corr: CorrelationMatrix,
    theta: float = 0.3,
    convention: str = "prose",
    rule: str = "paper",
) -> WindowReport:
    net = build_threshold_network(corr, theta)
    cluster = largest_cluster(net)
    return WindowReport(
        window_label=corr.window_label,
        theta=theta,
        n_nodes=len(cluster.nodes),
        n_edges=len(cluster.edges),
        density=density(cluster, convention),
        path_length=characteristic_path_length(cluster),
        clustering=average_clustering(cluster, rule),
        density_convention=convention,
        clustering_rule=rule,
        total_nodes=len(net.nodes),
        total_edges=len(net.edges),
        n_components=len(net.components()),
    )
