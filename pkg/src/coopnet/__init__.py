"""Cooperativity of networks and their communities under an evolutionary Prisoner's Dilemma."""

__version__ = "0.1.0"

from .errors import ConfigError, CoopnetError, DataError, InvariantError  # noqa: E402
from .game import GameConfig, SimulationResult, simulate, sweep_temptation  # noqa: E402
from .graph import NetworkGraph, compute_properties, load_edge_list, read_edge_list  # noqa: E402

__all__ = [
    "ConfigError",
    "CoopnetError",
    "DataError",
    "GameConfig",
    "InvariantError",
    "NetworkGraph",
    "SimulationResult",
    "compute_properties",
    "load_edge_list",
    "read_edge_list",
    "simulate",
    "sweep_temptation",
]
