"""Consistency graphs over user datasets and consistent-group search.

A group of users can share one classifier only if their pooled data is
consistent. Pairwise label conflicts give a graph whose cliques contain all
such groups; for the powerset class the two notions coincide, which is what
makes finding a consistent group at least as hard as finding a large clique.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .hypotheses import HypothesisClass, Powerset, as_arrays, compress
from .learner import SearchCapExceeded

PAIRWISE = "pairwise"
ORACLE = "oracle"


@dataclass(frozen=True)
class ConsistencyGraph:
    n: int
    edges: frozenset
    basis: str

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def is_clique(self, vertices) -> bool:
        return all(self.has_edge(i, j) for i, j in combinations(sorted(vertices), 2))

    def to_edge_list(self) -> str:
        return "".join(f"{i} {j}\n" for i, j in sorted(self.edges))


def _label_conflict(a, b) -> bool:
    pts = np.concatenate([a[0], b[0]])
    labels = np.concatenate([a[1], b[1]])
    pts, labels = compress(pts, labels)
    return pts.size != np.unique(pts).size


def build_consistency_graph(datasets, cls: HypothesisClass, basis: str = PAIRWISE) -> ConsistencyGraph:
    """Edge ``(i, j)`` iff ``S_i`` and ``S_j`` can be labelled together.

    ``pairwise``: no point carries both labels in ``S_i | S_j``.
    ``oracle``: the consistency oracle accepts ``S_i | S_j``.
    """
    if basis not in (PAIRWISE, ORACLE):
        raise ValueError(f"unknown basis {basis!r}")
    data = [compress(*as_arrays(s)) for s in datasets]
    edges = set()
    for i, j in combinations(range(len(data)), 2):
        if basis == PAIRWISE:
            ok = not _label_conflict(data[i], data[j])
        else:
            pooled = (np.concatenate([data[i][0], data[j][0]]), np.concatenate([data[i][1], data[j][1]]))
            ok = cls.consistent(pooled) is not None
        if ok:
            edges.add((i, j))
    return ConsistencyGraph(len(data), frozenset(edges), basis)


def group_is_consistent(datasets, cls: HypothesisClass, group) -> bool:
    if not group:
        return True
    parts = [as_arrays(datasets[i]) for i in group]
    pooled = (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))
    return cls.consistent(pooled) is not None


def max_consistent_group_exhaustive(datasets, cls: HypothesisClass, min_size: int = 1, cap: int = 25):
    """Largest group with a jointly consistent pooled dataset, or ``None``.

    Sizes are tried from ``n`` down to ``min_size``; within a size the
    lexicographically first group wins. Groups containing a pair the oracle
    already rejects are skipped, since supersets of inconsistent sets stay
    inconsistent.
    """
    n = len(datasets)
    if n > cap:
        raise SearchCapExceeded(f"exponential search cap: n={n} > {cap}")
    data = [compress(*as_arrays(s)) for s in datasets]
    bad_pairs = {
        (i, j)
        for i, j in combinations(range(n), 2)
        if cls.consistent((np.concatenate([data[i][0], data[j][0]]), np.concatenate([data[i][1], data[j][1]]))) is None
    }
    self_bad = {i for i in range(n) if cls.consistent(data[i]) is None}
    for size in range(n, max(min_size, 1) - 1, -1):
        for group in combinations(range(n), size):
            if self_bad.intersection(group) or any(p in bad_pairs for p in combinations(group, 2)):
                continue
            if group_is_consistent(data, cls, group):
                return group
    if min_size <= 0:
        return ()
    return None


def greedy_consistent_group(graph: ConsistencyGraph) -> tuple[int, ...]:
    """Clique built by scanning vertices in decreasing degree order."""
    if graph.n == 0:
        return ()
    degree = [0] * graph.n
    for i, j in graph.edges:
        degree[i] += 1
        degree[j] += 1
    order = sorted(range(graph.n), key=lambda v: (-degree[v], v))
    clique: list[int] = []
    for v in order:
        if all(graph.has_edge(v, u) for u in clique):
            clique.append(v)
    return tuple(sorted(clique))


def datasets_from_graph(n: int, edges) -> tuple[Powerset, list]:
    """Encode a graph as user datasets whose consistent groups are exactly its cliques.

    Each missing edge ``(i, j)`` gets a private point that ``i`` labels 0 and
    ``j`` labels 1.
    """
    present = {(min(i, j), max(i, j)) for i, j in edges}
    missing = [p for p in combinations(range(n), 2) if p not in present]
    cls = Powerset(max(1, len(missing)))
    pts: list[list[int]] = [[] for _ in range(n)]
    labels: list[list[int]] = [[] for _ in range(n)]
    for x, (i, j) in enumerate(missing):
        pts[i].append(x)
        labels[i].append(0)
        pts[j].append(x)
        labels[j].append(1)
    datasets = [(np.asarray(p, np.int64), np.asarray(y, np.int64)) for p, y in zip(pts, labels)]
    return cls, datasets
