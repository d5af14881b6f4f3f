"""Jaccard similarity between threshold-network edge sets across windows."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import AbstractSet, List, Optional, Sequence, Tuple, Union

from .netgraph import Edge, Graph, edge_key

EdgeSource = Union[Graph, AbstractSet[Edge]]


@dataclass(frozen=True)
class SimilarityMatrix:
    window_labels: Tuple[str, ...]
    values: Tuple[Tuple[Optional[float], ...], ...]
    theta: Optional[float] = None

    def __getitem__(self, pair: Tuple[int, int]) -> Optional[float]:
        a, b = pair
        return self.values[a][b]

    def adjacent(self) -> List[Optional[float]]:
        """J(w, w-1) for w = 1 .. W-1."""
        return [self.values[w][w - 1] for w in range(1, len(self.window_labels))]


def _edge_set(source: EdgeSource) -> AbstractSet[Edge]:
    if isinstance(source, Graph):
        return source.edges
    return {edge_key(a, b) for a, b in source}


def link_counts(a: EdgeSource, b: EdgeSource) -> Tuple[int, int]:
    """(common links N1, total links N = |E_a| + |E_b|), matched by label pair."""
    ea, eb = _edge_set(a), _edge_set(b)
    return len(ea & eb), len(ea) + len(eb)


def jaccard(a: EdgeSource, b: EdgeSource) -> Optional[float]:
    """J = N1 / (N - N1), i.e. shared links over distinct links.

    Returns ``None`` when both edge sets are empty; one empty set against a
    non-empty one gives 0.
    """
    common, total = link_counts(a, b)
    if total == 0:
        return None
    return common / (total - common)


def similarity_matrix(
    clusters: Sequence[EdgeSource],
    labels: Optional[Sequence[str]] = None,
    theta: Optional[float] = None,
) -> SimilarityMatrix:
    if len(clusters) < 2:
        raise ValueError(f"need at least 2 windows, got {len(clusters)}")
    if labels is None:
        labels = [getattr(c, "window_label", "") or str(k) for k, c in enumerate(clusters)]
    if len(labels) != len(clusters):
        raise ValueError("one label per cluster required")
    edge_sets = [_edge_set(c) for c in clusters]
    w = len(edge_sets)
    grid: List[List[Optional[float]]] = [[None] * w for _ in range(w)]
    for i in range(w):
        for j in range(i, w):
            grid[i][j] = grid[j][i] = jaccard(edge_sets[i], edge_sets[j])
    return SimilarityMatrix(tuple(labels), tuple(tuple(row) for row in grid), theta)


def regime_flags(sim: SimilarityMatrix, drop: float = 0.5) -> List[Tuple[str, float]]:
    """Windows whose similarity to the previous window collapses.

    Window w is flagged when J(w, w-1) < drop * median of all defined
    adjacent-window similarities. Returns (label, J) pairs in window order.
    """
    if not 0.0 < drop < 1.0:
        raise ValueError(f"drop must lie in (0, 1), got {drop}")
    if len(sim.window_labels) < 2:
        raise ValueError("need at least 2 windows")
    adjacent = sim.adjacent()
    defined = [x for x in adjacent if x is not None]
    if not defined:
        return []
    cutoff = drop * statistics.median(defined)
    return [
        (sim.window_labels[w], x)
        for w, x in enumerate(adjacent, start=1)
        if x is not None and x < cutoff
    ]
