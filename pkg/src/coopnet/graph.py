"""Simple undirected graphs, edge-list I/O and structural properties.

Graphs are stored in CSR form (``indptr``/``indices``) with dense integer
node ids so that the game engine can run fully vectorised.  The original
node tokens from the input file are kept in ``labels``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, EmptyGraphError, ParseError


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Immutable simple undirected graph.

    ``indices[indptr[i]:indptr[i + 1]]`` is the sorted neighbour list of
    node ``i``.  Top-level graphs never contain isolated nodes; induced
    subgraphs may.
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        labels: Sequence[str] | None = None,
        allow_isolated: bool = False,
    ) -> "NetworkGraph":
        """Build a graph on nodes ``0..n-1``; loops and duplicates are dropped."""
        if labels is None:
            labels = [str(i) for i in range(n)]
        if len(labels) != n:
            raise ConfigError("labels must have one entry per node")
        if len(set(labels)) != n:
            raise ConfigError("node labels must be unique")
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ConfigError("edge endpoint out of range")
        e = e[e[:, 0] != e[:, 1]]
        both = np.concatenate([e, e[:, ::-1]])
        both = np.unique(both, axis=0) if both.size else both
        deg = np.bincount(both[:, 0], minlength=n) if both.size else np.zeros(n, np.int64)
        if not allow_isolated and n and (deg == 0).any():
            raise DataError("graph contains isolated nodes")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        # np.unique sorts lexicographically, so rows are grouped by source and
        # neighbours come out sorted.
        indices = both[:, 1].astype(np.int64) if both.size else np.zeros(0, np.int64)
        return cls(indptr, indices, tuple(str(x) for x in labels))

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.node_count)]

    def edges(self) -> np.ndarray:
        """Edge array of shape (m, 2) with ``u < v``, sorted."""
        src = np.repeat(np.arange(self.node_count), self.degrees)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    def index_of(self, label: str) -> int:
        try:
            return self.label_index[label]
        except KeyError:
            raise DataError(f"unknown node {label!r}") from None

    @property
    def label_index(self) -> dict[str, int]:
        cache = self.__dict__.get("_label_cache")
        if cache is None:
            cache = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_label_cache", cache)
        return cache

    def to_sparse(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices))
        n = self.node_count
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def components(self) -> list[np.ndarray]:
        """Connected components as sorted node-index arrays."""
        k, comp = sp.csgraph.connected_components(self.to_sparse(), directed=False)
        return [np.flatnonzero(comp == c) for c in range(k)]


def load_edge_list(source: TextIO) -> NetworkGraph:
    """Parse a whitespace-separated edge list into a simple graph.

    Self-loops are dropped, parallel edges collapsed and nodes that end up
    without an incident edge are removed.  Node ids are numbered in order of
    first appearance.
    """
    index: dict[str, int] = {}
    edges = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 2 node tokens, got {len(tokens)}", line=lineno)
        a, b = tokens
        if a == b:
            continue
        for tok in (a, b):
            if tok not in index:
                index[tok] = len(index)
        edges.append((index[a], index[b]))
    if not edges:
        raise EmptyGraphError("graph is empty after removing loops and isolated nodes")
    # Only endpoints of non-loop edges were registered, so no node is isolated.
    labels = sorted(index, key=index.get)
    return NetworkGraph.from_edges(len(labels), edges, labels)


def read_edge_list(path) -> NetworkGraph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh)


def write_edge_list(g: NetworkGraph, stream: TextIO, header: Sequence[str] = ()) -> None:
    for line in header:
        stream.write(f"# {line}\n")
    for u, v in g.edges():
        stream.write(f"{g.labels[u]}\t{g.labels[v]}\n")


@dataclass(frozen=True)
class NetworkProperties:
    size: int
    edge_count: int
    density: float
    avg_degree: float
    degree_std: float
    clustering_coeff: float

    def as_dict(self) -> dict:
        return {
            "size": self.size,
            "edge_count": self.edge_count,
            "density": self.density,
            "avg_degree": self.avg_degree,
            "degree_std": self.degree_std,
            "clustering_coeff": self.clustering_coeff,
        }


def local_clustering(g: NetworkGraph) -> np.ndarray:
    """Watts-Strogatz local clustering; nodes with degree < 2 get 0."""
    a = g.to_sparse()
    triangles = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    d = g.degrees.astype(float)
    pairs = d * (d - 1) / 2.0
    out = np.zeros(g.node_count)
    np.divide(triangles, pairs, out=out, where=pairs > 0)
    return out


def compute_properties(g: NetworkGraph) -> NetworkProperties:
    n = g.node_count
    if n == 0:
        raise EmptyGraphError("cannot compute properties of an empty graph")
    m = g.edge_count
    d = g.degrees.astype(float)
    density = 2.0 * m / (n * (n - 1)) if n >= 2 else 0.0
    return NetworkProperties(
        size=n,
        edge_count=m,
        density=density,
        avg_degree=2.0 * m / n,
        degree_std=float(d.std()),
        clustering_coeff=float(local_clustering(g).mean()),
    )


def induced_subgraph(g: NetworkGraph, members: Iterable[int]) -> NetworkGraph:
    """Subgraph on ``members`` (internal indices); isolated members are kept."""
    nodes = np.unique(np.fromiter(members, dtype=np.int64))
    if nodes.size == 0:
        raise ConfigError("induced subgraph needs at least one member")
    if nodes[0] < 0 or nodes[-1] >= g.node_count:
        bad = nodes[(nodes < 0) | (nodes >= g.node_count)][0]
        raise DataError(f"unknown member id {int(bad)}")
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[nodes] = np.arange(nodes.size)
    e = g.edges()
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    sub_edges = remap[e[keep]]
    labels = [g.labels[i] for i in nodes]
    return NetworkGraph.from_edges(nodes.size, sub_edges, labels, allow_isolated=True)
