"""Decentralized rollout-sampling policy iteration for finite-horizon
DEC-POMDPs, with benchmark domains, an exact-evaluation oracle, and an
experiment harness."""

from .domains import DomainSpec, make_domain
from .exact import ExactBackend, brute_force_optimal, exact_phi, exact_policy_value, exact_tree_value
from .heuristics import HeuristicPortfolio, sample_beliefs, solve_underlying_mdp
from .improve import ImproveParams, RolloutBackend, decrspi, estimate_phi, improve_agent_node, solve_selection_lp
from .model import (
    Belief,
    ExplicitModel,
    ExplicitSimulator,
    GenerativeSimulator,
    belief_from_particles,
    exact_joint_step_distribution,
    expected_reward,
    sample_state,
)
from .policy import (
    JointPolicy,
    deserialize_policy,
    next_node_distribution,
    random_policy,
    sample_next_nodes,
    serialize_policy,
)
from .rollout import (
    RolloutEstimate,
    hoeffding_epsilon,
    hoeffding_samples,
    rollout,
    rollout_episodes,
    rollout_from_belief,
)

__all__ = [
    "Belief",
    "DomainSpec",
    "ExactBackend",
    "ExplicitModel",
    "ExplicitSimulator",
    "GenerativeSimulator",
    "HeuristicPortfolio",
    "ImproveParams",
    "JointPolicy",
    "RolloutBackend",
    "RolloutEstimate",
    "belief_from_particles",
    "brute_force_optimal",
    "decrspi",
    "deserialize_policy",
    "estimate_phi",
    "exact_joint_step_distribution",
    "exact_phi",
    "exact_policy_value",
    "exact_tree_value",
    "expected_reward",
    "hoeffding_epsilon",
    "hoeffding_samples",
    "improve_agent_node",
    "make_domain",
    "next_node_distribution",
    "random_policy",
    "rollout",
    "rollout_episodes",
    "rollout_from_belief",
    "sample_beliefs",
    "sample_next_nodes",
    "sample_state",
    "serialize_policy",
    "solve_selection_lp",
    "solve_underlying_mdp",
]

__version__ = "0.1.0"
