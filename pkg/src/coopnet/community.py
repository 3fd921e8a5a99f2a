"""Covers (possibly overlapping node groupings) and per-community records."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DataError, InvariantError
from .game import SimulationResult
from .graph import NetworkGraph, compute_properties, induced_subgraph


@dataclass(frozen=True)
class Cover:
    communities: tuple[frozenset[int], ...]
    algorithm: str
    overlapping: bool

    @classmethod
    def build(cls, communities: Iterable[Iterable[int]], algorithm: str, overlapping: bool | None = None) -> "Cover":
        """Drop duplicate communities (keeping first occurrence order)."""
        seen = set()
        unique = []
        for c in communities:
            fs = frozenset(int(x) for x in c)
            if fs and fs not in seen:
                seen.add(fs)
                unique.append(fs)
        if overlapping is None:
            overlapping = sum(len(c) for c in unique) > len(set().union(*unique)) if unique else False
        return cls(tuple(unique), algorithm, overlapping)

    def __len__(self) -> int:
        return len(self.communities)

    def validate(self, g: NetworkGraph) -> None:
        n = g.node_count
        for c in self.communities:
            if any(not 0 <= x < n for x in c):
                raise DataError("cover references a node that is not in the graph")
        if not self.overlapping and self.communities:
            total = sum(len(c) for c in self.communities)
            if total != len(set().union(*self.communities)):
                raise DataError("non-overlapping cover has shared members")

    def membership(self, n: int) -> np.ndarray:
        """Community index per node for disjoint covers (-1 if unassigned)."""
        out = np.full(n, -1, dtype=np.int64)
        for k, c in enumerate(self.communities):
            out[list(c)] = k
        return out


def load_cover(source: TextIO, g: NetworkGraph, algorithm: str = "external") -> Cover:
    """One community per line, whitespace-separated external node ids."""
    communities = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        members = []
        for tok in line.split():
            if tok not in g.label_index:
                raise DataError(f"unknown node {tok!r} (line {lineno})")
            members.append(g.label_index[tok])
        communities.append(members)
    return Cover.build(communities, algorithm)


def read_cover(path, g: NetworkGraph, algorithm: str = "external") -> Cover:
    with open(path, encoding="utf-8") as fh:
        return load_cover(fh, g, algorithm)


def write_cover(cover: Cover, g: NetworkGraph, stream: TextIO, header: Sequence[str] = ()) -> None:
    for line in header:
        stream.write(f"# {line}\n")
    for c in cover.communities:
        stream.write(" ".join(g.labels[i] for i in sorted(c)) + "\n")


def filter_cover(cover: Cover, g: NetworkGraph) -> Cover:
    """Drop singletons and communities spanning the whole network."""
    n = g.node_count
    kept = [c for c in cover.communities if 2 <= len(c) and len(c) < n]
    return Cover(tuple(kept), cover.algorithm, cover.overlapping)


def modularity(g: NetworkGraph, communities: Iterable[Iterable[int]]) -> float:
    """Newman-Girvan modularity of a disjoint partition."""
    m = g.edge_count
    deg = g.degrees
    label = np.full(g.node_count, -1, dtype=np.int64)
    for k, c in enumerate(communities):
        label[list(c)] = k
    e = g.edges()
    same = label[e[:, 0]] == label[e[:, 1]]
    internal = np.bincount(label[e[same, 0]], minlength=label.max() + 1)
    degree_sum = np.bincount(label[label >= 0], weights=deg[label >= 0], minlength=label.max() + 1)
    return float(np.sum(internal / m - (degree_sum / (2.0 * m)) ** 2))


def detect_slpa(g: NetworkGraph, iterations: int = 100, threshold: float = 0.15, seed: int = 0) -> Cover:
    """Speaker-listener label propagation (overlapping).

    Each node's memory starts with its own label.  In every round listeners
    are visited in random order; each neighbour speaks a label drawn from
    its memory in proportion to frequency and the listener stores the most
    frequent label it heard.  Labels held with frequency >= ``threshold``
    become communities; communities contained in another are removed.
    """
    if iterations < 1:
        raise DataError("SLPA needs at least one iteration")
    if not 0 < threshold <= 0.5:
        raise DataError("SLPA threshold must lie in (0, 0.5]")
    rng = random.Random(seed)
    n = g.node_count
    adj = [nb.tolist() for nb in g.adjacency]
    # A memory is the list of every label stored, so a uniform pick from it
    # is frequency-proportional.
    memory = [[i] for i in range(n)]
    order = list(range(n))
    for _ in range(iterations):
        rng.shuffle(order)
        for i in order:
            if not adj[i]:
                continue
            heard = Counter(memory[j][int(rng.random() * len(memory[j]))] for j in adj[i])
            top = max(heard.values())
            best = sorted(lab for lab, c in heard.items() if c == top)
            memory[i].append(best[0] if len(best) == 1 else rng.choice(best))

    groups: dict[int, list[int]] = {}
    for i, mem in enumerate(memory):
        counts = Counter(mem)
        total = len(mem)
        keep = [lab for lab, c in counts.items() if c / total >= threshold]
        if not keep:
            keep = [max(counts, key=lambda lab: (counts[lab], -lab))]
        for lab in keep:
            groups.setdefault(lab, []).append(i)
    candidates = {frozenset(groups[k]) for k in groups}
    # Communities nested inside a larger one are dropped.
    maximal = [c for c in candidates if not any(c < other for other in candidates)]
    maximal.sort(key=lambda c: (min(c), len(c)))
    return Cover.build(maximal, "slpa", overlapping=True)


def detect_lpa(g: NetworkGraph, seed: int = 0, max_iterations: int = 100) -> Cover:
    """Asynchronous label propagation with random tie-breaking (disjoint)."""
    rng = random.Random(seed)
    n = g.node_count
    adj = [nb.tolist() for nb in g.adjacency]
    labels = list(range(n))
    order = list(range(n))

    def best_labels(i):
        counts = Counter(labels[j] for j in adj[i])
        top = max(counts.values())
        return sorted(lab for lab, c in counts.items() if c == top)

    for _ in range(max_iterations):
        rng.shuffle(order)
        for i in order:
            if adj[i]:
                cands = best_labels(i)
                labels[i] = cands[0] if len(cands) == 1 else rng.choice(cands)
        if all(not adj[i] or labels[i] in best_labels(i) for i in range(n)):
            break
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    return Cover.build((groups[k] for k in sorted(groups)), "lpa", overlapping=False)


LABEL_COOPERATIVE = "cooperative"
LABEL_DEFECTIVE = "defective"


@dataclass(frozen=True)
class CommunityRecord:
    community_id: int
    algorithm: str
    members: tuple[int, ...]
    size: int
    density: float
    avg_degree: float
    degree_std: float
    cooperativity: float
    label: str

    FEATURES = ("size", "density", "avg_degree", "degree_std")

    def row(self) -> dict:
        return {
            "community_id": self.community_id,
            "algorithm": self.algorithm,
            "size": self.size,
            "density": self.density,
            "avg_degree": self.avg_degree,
            "degree_std": self.degree_std,
            "cooperativity": self.cooperativity,
            "label": self.label,
        }


def cooperativity_label(value: float) -> str:
    return LABEL_COOPERATIVE if value > 0.5 else LABEL_DEFECTIVE


def community_records(cover: Cover, g: NetworkGraph, sim: SimulationResult) -> list[CommunityRecord]:
    """Structural properties (on the induced subgraph) plus mean member cooperativity."""
    agent = np.asarray(sim.agent_cooperativity, dtype=float)
    if agent.size != g.node_count:
        raise InvariantError(
            f"simulation covers {agent.size} nodes but the graph has {g.node_count}"
        )
    records = []
    for k, c in enumerate(cover.communities):
        members = tuple(sorted(c))
        props = compute_properties(induced_subgraph(g, members))
        coop = float(np.mean(agent[list(members)]))
        records.append(
            CommunityRecord(
                community_id=k,
                algorithm=cover.algorithm,
                members=members,
                size=props.size,
                density=props.density,
                avg_degree=props.avg_degree,
                degree_std=props.degree_std,
                cooperativity=coop,
                label=cooperativity_label(coop),
            )
        )
    return records
