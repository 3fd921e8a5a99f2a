"""Synthetic networks for desk-scale experiments.

Conventions for isolated nodes: ``erdos_renyi`` drops them (labels keep the
original node numbers); the other kinds never produce any.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, DataError
from .graph import NetworkGraph

KINDS = ("lattice2d", "erdos_renyi", "barabasi_albert", "planted_cliques")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    rows: int = 10
    cols: int = 10
    n: int = 100
    p: float = 0.05
    k: int = 2
    cliques: int = 2
    clique_size: int = 5
    bridges: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown generator kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.kind == "lattice2d":
            if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
                raise ConfigError("lattice needs rows, cols >= 1 and at least 2 cells")
        elif self.kind == "erdos_renyi":
            if self.n < 2:
                raise ConfigError("n must be at least 2")
            if not 0 < self.p <= 1:
                raise ConfigError("p must lie in (0, 1]")
        elif self.kind == "barabasi_albert":
            if self.k < 1 or self.n < 2:
                raise ConfigError("need k >= 1 and n >= 2")
            if self.k >= self.n:
                raise ConfigError("attachment count k must be smaller than n")
        elif self.kind == "planted_cliques":
            if self.cliques < 1 or self.clique_size < 2:
                raise ConfigError("need at least one clique of size >= 2")
            if self.bridges < 0:
                raise ConfigError("bridges must be non-negative")
            if self.cliques > 1 and self.bridges < 1:
                raise ConfigError("consecutive cliques need at least one bridge")
            if self.bridges > self.clique_size ** 2:
                raise ConfigError("more bridges than distinct node pairs between two cliques")

    def as_dict(self) -> dict:
        return asdict(self)


def generate(spec: GeneratorSpec) -> NetworkGraph:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    return _BUILDERS[spec.kind](spec, rng)


def _lattice(spec, rng):
    r, c = spec.rows, spec.cols
    ids = np.arange(r * c).reshape(r, c)
    horiz = np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    vert = np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    return NetworkGraph.from_edges(r * c, np.concatenate([horiz, vert]))


def _erdos_renyi(spec, rng):
    n = spec.n
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < spec.p
    edges = np.column_stack([iu[keep], ju[keep]])
    present = np.unique(edges)
    if present.size == 0:
        raise DataError("Erdos-Renyi sample has no edges; raise p or n")
    remap = np.full(n, -1)
    remap[present] = np.arange(present.size)
    return NetworkGraph.from_edges(present.size, remap[edges], [str(i) for i in present])


def _barabasi_albert(spec, rng):
    # Seed with a star on k + 1 nodes, then attach each new node to k
    # distinct targets drawn proportionally to degree.
    n, k = spec.n, spec.k
    edges = [(0, j) for j in range(1, k + 1)]
    targets_pool = [0] * k + list(range(1, k + 1))
    for new in range(k + 1, n):
        chosen: set[int] = set()
        while len(chosen) < k:
            chosen.add(targets_pool[rng.integers(len(targets_pool))])
        for t in sorted(chosen):
            edges.append((new, t))
            targets_pool.extend((new, t))
    return NetworkGraph.from_edges(n, edges)


def _planted(spec, rng):
    c, s = spec.cliques, spec.clique_size
    edges = []
    for q in range(c):
        base = q * s
        edges += [(base + i, base + j) for i in range(s) for j in range(i + 1, s)]
    # Bridge b between clique q and q+1 joins member b of q to member b of
    # q+1 (wrapping), so bridges are distinct edges.
    for q in range(c - 1):
        for b in range(spec.bridges):
            u = q * s + (b % s)
            v = (q + 1) * s + ((b // s + b) % s)
            edges.append((u, v))
    return NetworkGraph.from_edges(c * s, edges)


_BUILDERS = {
    "lattice2d": _lattice,
    "erdos_renyi": _erdos_renyi,
    "barabasi_albert": _barabasi_albert,
    "planted_cliques": _planted,
}
