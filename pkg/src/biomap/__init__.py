"""Model-free planning for deterministic POMDPs by dead reckoning."""
from .automaton import MarkovAutomaton, determinize, from_graph, is_deterministic, recognizes
from .core import DetPomdpEnv, StepOutcome, TabularMDP, Trajectory
from .envs import MaskConfig, MaskedCliffWalking, build_grouping
from .estimators import BiomapPlanner, QMDPPlanner
from .planner import (ArbiterParams, BiomapBudget, Policy, RecoveredMDP, boundary_arbiter,
                      execute_policy, explore, recover_mdp, run_biomap, solve_policy,
                      transform_weights)
from .vecgraph import CompactVectorGraph, GraphEdge

__version__ = "0.1.0"

__all__ = [
    "ArbiterParams", "BiomapBudget", "BiomapPlanner", "CompactVectorGraph", "DetPomdpEnv",
    "GraphEdge", "MarkovAutomaton", "MaskConfig", "MaskedCliffWalking", "Policy", "QMDPPlanner",
    "RecoveredMDP", "StepOutcome", "TabularMDP", "Trajectory", "boundary_arbiter",
    "build_grouping", "determinize", "execute_policy", "explore", "from_graph",
    "is_deterministic", "recognizes", "recover_mdp", "run_biomap", "solve_policy",
    "transform_weights",
]
