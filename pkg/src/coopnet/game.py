"""Evolutionary Prisoner's Dilemma with replicator-style imitation.

One iteration has two synchronous phases:

1. every node plays one round against each neighbour and sums the payoffs
   (payoffs are reset each iteration);
2. every node ``i`` looks at one uniformly chosen neighbour ``j`` and, if
   ``PO_i < PO_j``, copies ``j``'s strategy with probability
   ``(PO_j - PO_i) / (b * max(d_i, d_j))``.  All copies read the strategy
   vector from before the update and are applied at once.

Strategies are ``1`` for cooperate and ``0`` for defect.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from .errors import ConfigError, DataError, InvariantError
from .graph import NetworkGraph


@dataclass(frozen=True)
class GameConfig:
    b: float = 1.5
    R: float = 1.0
    S: float = 0.0
    P: float = 0.0
    min_iterations: int = 1000
    window: int = 200
    max_iterations: int = 9000
    realizations: int = 200
    master_seed: int = 0
    initial_strategies: tuple[int, ...] | None = None
    check_invariants: bool = False

    @property
    def T(self) -> float:
        return self.b

    def validate(self) -> None:
        if not self.b > 1:
            raise ConfigError(f"b must exceed 1 (got {self.b})")
        if not (self.b > self.R > self.P >= self.S):
            raise ConfigError("payoffs must satisfy T = b > R > P >= S")
        if self.window < 1:
            raise ConfigError("window must be positive")
        if not self.window <= self.min_iterations <= self.max_iterations:
            raise ConfigError("need window <= min_iterations <= max_iterations")
        if self.realizations < 1:
            raise ConfigError("realizations must be positive")
        if self.initial_strategies is not None:
            if any(s not in (0, 1) for s in self.initial_strategies):
                raise ConfigError("initial strategies must be 0 (defect) or 1 (cooperate)")

    def as_dict(self) -> dict:
        d = asdict(self)
        if self.initial_strategies is not None:
            d["initial_strategies"] = list(self.initial_strategies)
        return d


@dataclass
class RealizationState:
    strategies: np.ndarray
    payoffs: np.ndarray
    coop_series: list[float] = field(default_factory=list)
    # Per-node number of cooperative plays in the final measurement window.
    window_counts: np.ndarray | None = None

    @property
    def cooperation_fraction(self) -> float:
        return float(self.strategies.mean())


@dataclass(frozen=True)
class SimulationResult:
    network_cooperativity: float
    agent_cooperativity: np.ndarray
    realization_cooperativity: np.ndarray
    realizations_run: int
    per_realization_iterations: tuple[int, ...]
    converged_flags: tuple[bool, ...]
    realization_seeds: tuple[int, ...]

    @property
    def realization_std(self) -> float:
        return float(np.std(self.realization_cooperativity))


@dataclass(frozen=True)
class SweepPoint:
    b: float
    mean: float
    std: float


def realization_seed(master_seed: int, index: int) -> int:
    """64-bit seed of realization ``index``; independent of scheduling."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _check_graph(g: NetworkGraph) -> None:
    if g.node_count == 0:
        raise DataError("cannot simulate on an empty graph")
    if (g.degrees == 0).any():
        raise DataError("every node needs at least one neighbour to play")


def _payoffs(g: NetworkGraph, s: np.ndarray, cfg: GameConfig) -> np.ndarray:
    deg = g.degrees
    coop_nb = np.add.reduceat(s[g.indices].astype(np.int64), g.indptr[:-1])
    defect_nb = deg - coop_nb
    return np.where(
        s == 1,
        cfg.R * coop_nb + cfg.S * defect_nb,
        cfg.T * coop_nb + cfg.P * defect_nb,
    )


def _step(g: NetworkGraph, s: np.ndarray, cfg: GameConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    n = g.node_count
    deg = g.degrees
    payoff = _payoffs(g, s, cfg)
    u = rng.random((2, n))
    pick = g.indices[g.indptr[:-1] + (u[0] * deg).astype(np.int64)]
    gain = payoff[pick] - payoff
    prob = gain / (cfg.b * np.maximum(deg, deg[pick]))
    if cfg.check_invariants:
        better = gain > 0
        if better.any() and (prob[better] > 1.0 + 1e-12).any():
            raise InvariantError("imitation probability exceeds 1")
    switch = (gain > 0) & (u[1] < prob)
    return np.where(switch, s[pick], s).astype(np.uint8), payoff


def iterate_once(g: NetworkGraph, state: RealizationState, cfg: GameConfig, rng) -> RealizationState:
    """Advance one synchronous play-and-imitate step.

    ``rng`` only needs a numpy-style ``random(size)`` method.
    """
    new_s, payoff = _step(g, np.asarray(state.strategies, dtype=np.uint8), cfg, rng)
    return RealizationState(
        strategies=new_s,
        payoffs=payoff,
        coop_series=[*state.coop_series, float(new_s.mean())],
    )


def initial_strategies(n: int, cfg: GameConfig, rng) -> np.ndarray:
    if cfg.initial_strategies is not None:
        if len(cfg.initial_strategies) != n:
            raise ConfigError(f"initial strategies have length {len(cfg.initial_strategies)}, graph has {n} nodes")
        return np.asarray(cfg.initial_strategies, dtype=np.uint8)
    s = np.zeros(n, dtype=np.uint8)
    s[rng.permutation(n)[: n // 2]] = 1
    return s


def run_realization(g: NetworkGraph, cfg: GameConfig, seed: int) -> tuple[RealizationState, int, bool]:
    """Run one realization until stationary or ``max_iterations``.

    After ``min_iterations`` steps the run stops as soon as the standard
    deviation of the last ``window`` cooperation fractions is at most
    ``1/sqrt(N)``; otherwise it is extended by ``window`` steps at a time.
    """
    cfg.validate()
    _check_graph(g)
    rng = np.random.default_rng(seed)
    n = g.node_count
    w = cfg.window
    s = initial_strategies(n, cfg, rng)
    payoff = np.zeros(n)
    coop_counts = np.empty(cfg.max_iterations, dtype=np.int64)
    history = np.empty((w, n), dtype=np.uint8)
    threshold = 1.0 / math.sqrt(n)
    t = 0

    def advance(k):
        nonlocal s, payoff, t
        for _ in range(k):
            s, payoff = _step(g, s, cfg, rng)
            history[t % w] = s
            coop_counts[t] = int(s.sum())
            t += 1

    advance(cfg.min_iterations)
    converged = False
    while True:
        if np.std(coop_counts[t - w:t] / n) <= threshold:
            converged = True
            break
        if t >= cfg.max_iterations:
            break
        advance(min(w, cfg.max_iterations - t))

    state = RealizationState(
        strategies=s,
        payoffs=payoff,
        coop_series=(coop_counts[:t] / n).tolist(),
        window_counts=history.sum(axis=0, dtype=np.int64),
    )
    return state, t, converged


def _realization_summary(index: int, g: NetworkGraph, cfg: GameConfig):
    seed = realization_seed(cfg.master_seed, index)
    state, iterations, converged = run_realization(g, cfg, seed)
    return seed, state.window_counts, iterations, converged


def simulate(g: NetworkGraph, cfg: GameConfig, workers: int | None = None) -> SimulationResult:
    """Average ``cfg.realizations`` independent runs.

    Per-agent cooperativity is the share of cooperative plays in each run's
    final window, averaged over runs; the network value is the mean of the
    per-run window-averaged cooperation fractions.  Results are reduced in
    realization order, so they do not depend on ``workers``.
    """
    cfg.validate()
    _check_graph(g)
    work = partial(_realization_summary, g=g, cfg=cfg)
    outcomes = parallel_map(work, range(cfg.realizations), workers)

    n, w, r = g.node_count, cfg.window, cfg.realizations
    total = np.zeros(n, dtype=np.int64)
    per_run = np.empty(r)
    for k, (_, counts, _, _) in enumerate(outcomes):
        total += counts
        per_run[k] = counts.sum() / (w * n)
    agent = total / (w * r)
    # One division of the exact integer total: the correctly rounded mean.
    network = float(total.sum() / (w * n * r))

    result = SimulationResult(
        network_cooperativity=network,
        agent_cooperativity=agent,
        realization_cooperativity=per_run,
        realizations_run=r,
        per_realization_iterations=tuple(o[2] for o in outcomes),
        converged_flags=tuple(bool(o[3]) for o in outcomes),
        realization_seeds=tuple(o[0] for o in outcomes),
    )
    if cfg.check_invariants:
        check_result(result)
    return result


def check_result(result: SimulationResult, tol: float = 1e-12) -> None:
    agent = result.agent_cooperativity
    if not (0.0 <= result.network_cooperativity <= 1.0):
        raise InvariantError("network cooperativity outside [0, 1]")
    if agent.size and (agent.min() < 0.0 or agent.max() > 1.0):
        raise InvariantError("agent cooperativity outside [0, 1]")
    if abs(result.network_cooperativity - agent.mean()) > tol:
        raise InvariantError("network cooperativity differs from mean agent cooperativity")


def sweep_temptation(
    g: NetworkGraph,
    cfg: GameConfig,
    b_values: Sequence[float],
    workers: int | None = None,
) -> list[SweepPoint]:
    for b in b_values:
        if not b > 1:
            raise ConfigError(f"b must exceed 1 (got {b})")
    points = []
    for b in b_values:
        res = simulate(g, replace(cfg, b=float(b)), workers=workers)
        points.append(SweepPoint(float(b), res.network_cooperativity, res.realization_std))
    return points
