"""Distributed property testers (triangle-freeness, bipartiteness,
cycle-freeness, dense-model emulation) on a simulated CONGEST network, with
exact oracles for certifying test instances."""

__version__ = "0.1.0"

from .graph import Graph, connected_components, parse_edge_list, serialize_edge_list
from .sim import (Message, RejectionStats, SimConfig, Simulation, SimulationFault, Transcript,
                  TrialFault, Verdict, VertexAlgorithm, run, run_trials)

__all__ = [
    "Graph", "Message", "RejectionStats", "SimConfig", "Simulation", "SimulationFault",
    "Transcript", "TrialFault", "Verdict", "VertexAlgorithm", "__version__",
    "connected_components", "parse_edge_list", "run", "run_trials", "serialize_edge_list",
]
