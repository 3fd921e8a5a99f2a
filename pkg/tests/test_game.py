import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopnet.errors import ConfigError, InvariantError
from coopnet.game import (
    GameConfig,
    RealizationState,
    iterate_once,
    realization_seed,
    run_realization,
    simulate,
    sweep_temptation,
)
from coopnet.generators import GeneratorSpec, generate

from .conftest import complete_graph


class ScriptedRng:
    """Stands in for a numpy Generator; hands out preset uniforms."""

    def __init__(self, *draws):
        self.draws = list(draws)

    def random(self, size):
        out = np.asarray(self.draws.pop(0), dtype=float)
        assert out.shape == size
        return out


def naive_step(adj, strategies, cfg, u):
    """Per-node transcription of one play-and-imitate round."""
    n = len(adj)
    payoff = [0.0] * n
    for i in range(n):
        for j in adj[i]:
            si, sj = strategies[i], strategies[j]
            if si == 1 and sj == 1:
                payoff[i] += cfg.R
            elif si == 1 and sj == 0:
                payoff[i] += cfg.S
            elif si == 0 and sj == 1:
                payoff[i] += cfg.T
            else:
                payoff[i] += cfg.P
    new = list(strategies)
    for i in range(n):
        j = adj[i][int(u[0][i] * len(adj[i]))]
        if payoff[i] < payoff[j]:
            prob = (payoff[j] - payoff[i]) / (cfg.b * max(len(adj[i]), len(adj[j])))
            if u[1][i] < prob:
                new[i] = strategies[j]
    return new, payoff


def state(strategies):
    return RealizationState(np.array(strategies, dtype=np.uint8), np.zeros(len(strategies)))


def test_k2_hand_trace(k2):
    cfg = GameConfig(b=1.5)
    # C (node 0) switches with probability 1.5 / (1.5 * 1) = 1, whatever it draws.
    nxt = iterate_once(k2, state([1, 0]), cfg, ScriptedRng([[0.3, 0.3], [0.999999, 0.0]]))
    assert nxt.payoffs.tolist() == [0.0, 1.5]
    assert nxt.strategies.tolist() == [0, 0]
    assert nxt.coop_series == [0.0]


def test_switch_probability_substitution():
    # PO_j = 2, PO_i = 1, b = 1.5, d_i = 4, d_j = 2 -> (2 - 1) / (1.5 * 4)
    assert (2 - 1) / (1.5 * max(4, 2)) == pytest.approx(0.1667, abs=1e-4)


@pytest.mark.parametrize("fill", [0, 1])
def test_uniform_states_are_absorbing(fill):
    g = generate(GeneratorSpec("barabasi_albert", n=60, k=2, seed=2))
    s = state([fill] * g.node_count)
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = iterate_once(g, s, GameConfig(b=1.9), rng)
    assert set(s.strategies.tolist()) == {fill}
    assert set(s.coop_series) == {float(fill)}


graph_specs = st.sampled_from(
    [
        GeneratorSpec("barabasi_albert", n=30, k=2, seed=5),
        GeneratorSpec("lattice2d", rows=4, cols=5),
        GeneratorSpec("erdos_renyi", n=25, p=0.2, seed=9),
        GeneratorSpec("planted_cliques", cliques=3, clique_size=4, bridges=2),
    ]
)


@settings(max_examples=40, deadline=None)
@given(graph_specs, st.floats(1.01, 2.0), st.integers(0, 2**32 - 1))
def test_step_matches_naive_transcription(spec, b, seed):
    g = generate(spec)
    n = g.node_count
    rng = np.random.default_rng(seed)
    s0 = (rng.random(n) < 0.5).astype(int).tolist()
    u = rng.random((2, n))
    cfg = GameConfig(b=b)
    expected, payoff = naive_step([nb.tolist() for nb in g.adjacency], s0, cfg, u)
    got = iterate_once(g, state(s0), cfg, ScriptedRng(u))
    assert got.strategies.tolist() == expected
    assert np.allclose(got.payoffs, payoff)


def test_full_payoff_matrix_used():
    # Non-zero S and P are honoured even though the default game never uses them.
    g = complete_graph(3)
    cfg = GameConfig(b=2.0, R=1.0, P=0.5, S=0.1)
    nxt = iterate_once(g, state([1, 0, 0]), cfg, ScriptedRng(np.zeros((2, 3))))
    assert nxt.payoffs.tolist() == pytest.approx([0.2, 2.5, 2.5])


def test_all_c_converges_at_min_iterations(k3):
    cfg = GameConfig(initial_strategies=(1, 1, 1))
    st_, iterations, converged = run_realization(k3, cfg, seed=1)
    assert (iterations, converged) == (1000, True)
    assert np.mean(st_.coop_series[-200:]) == 1.0
    assert st_.window_counts.tolist() == [200, 200, 200]


def test_k2_absorbs_to_defection(k2):
    cfg = GameConfig(b=1.5, initial_strategies=(1, 0))
    st_, iterations, converged = run_realization(k2, cfg, seed=4)
    assert st_.coop_series[0] == 0.0
    assert np.mean(st_.coop_series[-200:]) == 0.0
    assert converged and iterations == 1000


def test_realization_is_deterministic():
    g = generate(GeneratorSpec("barabasi_albert", n=80, k=2, seed=1))
    a, ia, _ = run_realization(g, GameConfig(), seed=99)
    b, ib, _ = run_realization(g, GameConfig(), seed=99)
    assert ia == ib
    assert a.coop_series == b.coop_series


def test_initialisation_uses_floor_half():
    g = generate(GeneratorSpec("lattice2d", rows=3, cols=3))
    cfg = GameConfig(min_iterations=1, window=1, max_iterations=1)
    from coopnet.game import initial_strategies

    s = initial_strategies(g.node_count, cfg, np.random.default_rng(3))
    assert s.sum() == 4


def test_iteration_counts_follow_window_extension():
    g = generate(GeneratorSpec("barabasi_albert", n=150, k=2, seed=4))
    cfg = GameConfig(b=1.9, min_iterations=100, window=20, max_iterations=400, realizations=12)
    res = simulate(g, cfg)
    for it, conv in zip(res.per_realization_iterations, res.converged_flags):
        assert 100 <= it <= 400
        assert (it - 100) % 20 == 0
        if not conv:
            assert it == 400


def test_non_convergence_hits_max_iterations():
    # The opening collapse of cooperation on a large lattice is far from
    # stationary (threshold 1/sqrt(2500) = 0.02).
    g = generate(GeneratorSpec("lattice2d", rows=50, cols=50))
    st_, it, conv = run_realization(g, GameConfig(b=1.3, min_iterations=8, window=8, max_iterations=8), 0)
    assert (it, conv) == (8, False)
    assert np.std(st_.coop_series) > 0.02


def test_simulate_all_c():
    g = generate(GeneratorSpec("lattice2d", rows=3, cols=4))
    res = simulate(g, GameConfig(initial_strategies=(1,) * 12, realizations=3))
    assert res.network_cooperativity == 1.0
    assert res.agent_cooperativity.tolist() == [1.0] * 12


def test_simulate_k2_random_init(k2):
    res = simulate(k2, GameConfig(realizations=10, master_seed=5))
    assert res.network_cooperativity == 0.0
    assert res.agent_cooperativity.tolist() == [0.0, 0.0]


def test_network_equals_mean_agent_cooperativity():
    g = generate(GeneratorSpec("barabasi_albert", n=120, k=2, seed=8))
    res = simulate(g, GameConfig(b=1.6, realizations=8, master_seed=2, check_invariants=True))
    assert abs(res.network_cooperativity - res.agent_cooperativity.mean()) <= 1e-12
    assert abs(res.network_cooperativity - res.realization_cooperativity.mean()) <= 1e-12
    assert 0 <= res.agent_cooperativity.min() and res.agent_cooperativity.max() <= 1


def test_realization_seeds_independent_of_count():
    assert realization_seed(7, 3) == realization_seed(7, 3)
    assert realization_seed(7, 3) != realization_seed(7, 4)
    a = simulate(complete_graph(4), GameConfig(realizations=3, master_seed=7))
    b = simulate(complete_graph(4), GameConfig(realizations=5, master_seed=7))
    assert a.realization_seeds == b.realization_seeds[:3]


def test_sweep_all_defect():
    g = generate(GeneratorSpec("lattice2d", rows=4, cols=4))
    cfg = GameConfig(initial_strategies=(0,) * 16, realizations=2)
    pts = sweep_temptation(g, cfg, [1.2, 1.5, 1.9])
    assert [(p.b, p.mean, p.std) for p in pts] == [(1.2, 0.0, 0.0), (1.5, 0.0, 0.0), (1.9, 0.0, 0.0)]


def test_sweep_k2(k2):
    pts = sweep_temptation(k2, GameConfig(realizations=4), [1.2, 1.9])
    assert [p.mean for p in pts] == [0.0, 0.0]


def test_sweep_rejects_b_at_most_one(k2):
    with pytest.raises(ConfigError, match="b must exceed 1"):
        sweep_temptation(k2, GameConfig(), [1.5, 1.0])


@pytest.mark.parametrize(
    "kwargs",
    [dict(b=0.9), dict(b=1.0), dict(window=2000), dict(min_iterations=10000), dict(realizations=0),
     dict(initial_strategies=(0, 2))],
)
def test_invalid_config(kwargs):
    with pytest.raises(ConfigError):
        GameConfig(**kwargs).validate()


def test_invariant_check_detects_out_of_range_probability():
    # With S far below zero the normalisation b * max(d_i, d_j) no longer
    # bounds the payoff gap, so the debug check must fire.
    g = complete_graph(3)
    cfg = GameConfig(b=1.1, R=1.0, P=0.0, S=-5.0, check_invariants=True)
    with pytest.raises(InvariantError):
        iterate_once(g, state([1, 0, 0]), cfg, ScriptedRng(np.zeros((2, 3))))


def test_switch_probability_bound_holds_on_every_state():
    # Exhaustive over all strategy vectors of a small irregular graph.
    g = generate(GeneratorSpec("barabasi_albert", n=8, k=2, seed=1))
    cfg = GameConfig(b=1.2, check_invariants=True)
    for bits in itertools.product((0, 1), repeat=g.node_count):
        iterate_once(g, state(bits), cfg, ScriptedRng(np.full((2, g.node_count), 0.5)))


def test_window_threshold_scales_with_size():
    g = generate(GeneratorSpec("lattice2d", rows=5, cols=5))
    st_, it, conv = run_realization(g, GameConfig(b=1.9), seed=3)
    if conv:
        assert np.std(st_.coop_series[-200:]) <= 1 / math.sqrt(25)


def test_lattice_keeps_cooperators_at_low_temptation():
    # Clusters of cooperators survive on the square lattice when b is close to 1
    # and die out as b grows.
    g = generate(GeneratorSpec("lattice2d", rows=30, cols=30))
    low = simulate(g, GameConfig(b=1.02, realizations=4, master_seed=1))
    high = simulate(g, GameConfig(b=1.3, realizations=4, master_seed=1))
    assert low.network_cooperativity > 0.3
    assert high.network_cooperativity < low.network_cooperativity
