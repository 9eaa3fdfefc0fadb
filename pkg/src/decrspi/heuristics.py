"""Belief sampling: heuristic trajectory simulation and the belief table.

Reachable state distributions are gathered by simulating whole episodes
under cheap heuristics (uniformly random joint actions, or joint actions
greedy for the underlying fully observable MDP when a tabular model
exists) and collecting the visited states as particles. The table entry
for (t, n) is the particle belief over the states seen right before the
t-th action on the n-th batch of trajectories.
"""

from __future__ import annotations

import numpy as np

from .model import Belief, ExplicitModel, GenerativeSimulator, belief_from_particles, split_joint
from .rngs import substreams

RANDOM_SHARE = 0.55


def solve_underlying_mdp(model: ExplicitModel, horizon: int) -> np.ndarray:
    """Exact finite-horizon Q tables for the centralized MDP over joint actions.

    Returns Q with shape (horizon, S, JA); Q[t-1, s, ja] is the optimal
    expected return of taking joint action ja in state s at step t with
    full state observability.
    """
    if model is None:
        raise ValueError("no explicit model available")
    S, JA = model.num_states, model.num_joint_actions
    Q = np.zeros((horizon, S, JA))
    v_next = np.zeros(S)
    for t in range(horizon, 0, -1):
        Q[t - 1] = model.reward + np.tensordot(model.transition, v_next, axes=([2], [0]))
        v_next = Q[t - 1].max(axis=1)
    return Q


class HeuristicPolicy:
    """A state-conditioned joint-action rule used only during belief sampling."""

    kind: str

    def joint_action(self, t: int, state: int, rng: np.random.Generator):
        raise NotImplementedError


class RandomHeuristic(HeuristicPolicy):
    kind = "random"

    def __init__(self, action_counts):
        self.action_counts = list(action_counts)
        self._uniform = len(set(self.action_counts)) == 1

    def joint_action(self, t, state, rng):
        if self._uniform:
            return tuple(int(a) for a in rng.integers(0, self.action_counts[0],
                                                      size=len(self.action_counts)))
        return tuple(int(rng.integers(0, c)) for c in self.action_counts)


class MdpGreedyHeuristic(HeuristicPolicy):
    """Greedy in the exact Q table of the underlying MDP; ties go to the
    lowest joint-action code."""

    kind = "mdp-greedy"

    def __init__(self, model: ExplicitModel, horizon: int):
        q = solve_underlying_mdp(model, horizon)
        best = q.argmax(axis=2)
        self._actions = [
            [split_joint(int(best[t, s]), model.action_counts) for s in range(model.num_states)]
            for t in range(horizon)
        ]

    def joint_action(self, t, state, rng):
        return self._actions[t - 1][state]


class HeuristicPortfolio:
    """The heuristic mix used to sample beliefs.

    The random policy is always available; the MDP policy joins the mix
    only when an explicit model exists. mdp_share is the probability of
    picking the MDP policy per batch (0.45 by default, so random runs
    55 percent of the time).
    """

    def __init__(self, sim: GenerativeSimulator, model: ExplicitModel | None = None,
                 horizon: int | None = None, mdp_share: float = 1.0 - RANDOM_SHARE):
        self.random = RandomHeuristic(sim.action_counts)
        self.mdp = MdpGreedyHeuristic(model, horizon) if model is not None else None
        self.mdp_share = mdp_share if self.mdp is not None else 0.0

    def choose(self, rng: np.random.Generator) -> HeuristicPolicy:
        if self.mdp is not None and rng.random() < self.mdp_share:
            return self.mdp
        return self.random


def choose_heuristic(portfolio: HeuristicPortfolio, rng: np.random.Generator) -> HeuristicPolicy:
    return portfolio.choose(rng)


class BeliefTable:
    """B[t][n] for t = 1..T (1-based), n = 0..N-1."""

    def __init__(self, beliefs: list[list[Belief]]):
        self.T = len(beliefs)
        self.N = len(beliefs[0])
        self._b = beliefs

    def get(self, t: int, n: int) -> Belief:
        return self._b[t - 1][n]


def sample_beliefs(sim: GenerativeSimulator, portfolio: HeuristicPortfolio,
                   T: int, N: int, K: int, rng: np.random.Generator) -> BeliefTable:
    """Collect the belief table from N batches of K heuristic trajectories.

    For each n one heuristic drives all K trajectories; the particle for
    step t is the state right before the t-th action, so B[1][n] is an
    empirical draw of the initial belief.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    particles = np.zeros((N, T, K), dtype=np.int64)
    for n in range(N):
        h = portfolio.choose(rng)
        streams = substreams(rng, K)
        for k in range(K):
            traj_rng = streams[k]
            s = sim.sample_initial(traj_rng)
            for t in range(1, T + 1):
                particles[n, t - 1, k] = s
                a = h.joint_action(t, s, traj_rng)
                s, _, _ = sim.step(s, a, traj_rng)
    table = [[belief_from_particles(particles[n, t]) for n in range(N)] for t in range(T)]
    return BeliefTable(table)
