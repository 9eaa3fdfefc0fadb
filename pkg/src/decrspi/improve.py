"""Policy improvement: per-agent best response via sampled continuation
matrices, a closed-form selection optimizer, and the backward alternating
maximization loop.

Improvement walks layers from the last step to the first. At each (layer,
node) it repeatedly sweeps the agents; for one agent it builds a candidate
per action by (1) estimating the matrix of expected continuation values per
(own observation, next node) with the other agents' policies fixed, and
(2) picking the node-selection table that maximizes that matrix row by row.
Candidates and the incumbent node are then compared by rollout estimates on
common random numbers, and the node is overwritten only when the best
candidate beats the incumbent by more than a minimum-improvement threshold.

All evaluation and estimation streams are keyed by (layer, node, agent
[, action]) and deliberately not by sweep round: re-running an unchanged
comparison reproduces it exactly, so the sweep loop reaches a fixed point
instead of chasing estimator noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .heuristics import HeuristicPortfolio, sample_beliefs
from .model import Belief, GenerativeSimulator
from .policy import JointPolicy, random_policy
from .rngs import BELIEF_SAMPLING, EVAL, INIT_POLICY, PHI, START_NODE, stream
from .rollout import _CompiledPolicy, rollout_episodes, rollout_from_belief, trajectory_return


@dataclass
class PhiMatrix:
    """Expected continuation value per (own observation, next node).

    reached[o] is False when observation o never occurred in the one-step
    sample; such rows are all-zero and carry no information.
    """

    values: np.ndarray
    reached: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite continuation value")
        if np.any(self.values[~self.reached] != 0.0):
            raise ValueError("unreached rows must be zero")


@dataclass
class OneStepSample:
    """Empirical one-step outcome distributions, grouped by own observation.

    outcomes[o] lists (next_state, joint_obs) pairs with multiplicity; the
    normalized distribution is uniform over that list.
    """

    outcomes: list[list[tuple[int, tuple[int, ...]]]]

    def weights(self, obs: int) -> float:
        return 1.0 / len(self.outcomes[obs]) if self.outcomes[obs] else 0.0


@dataclass
class SelectionSolution:
    """Row-stochastic node-selection table and its objective value."""

    x: np.ndarray
    objective: float


@dataclass
class ImproveParams:
    """Improvement-loop thresholds and sizes."""

    min_improve: float = 1e-4
    max_rounds: int = 100
    k_samples: int = 20
    n_nodes: int = 3

    def __post_init__(self):
        if self.min_improve <= 0 or self.max_rounds <= 0:
            raise ValueError("thresholds must be positive")
        if self.k_samples < 1 or self.n_nodes < 1:
            raise ValueError("counts must be >= 1")


def collect_one_step(sim: GenerativeSimulator, belief: Belief, actions, agent: int,
                     K: int, rng: np.random.Generator) -> OneStepSample:
    """Stage 1: sample K one-step transitions from the belief and bin the
    (next state, joint observation) outcomes by the agent's own observation."""
    outcomes: list[list[tuple[int, tuple[int, ...]]]] = [
        [] for _ in range(sim.obs_counts[agent])
    ]
    for _ in range(K):
        s = belief.sample(rng)
        s2, _, obs = sim.step(s, actions, rng)
        outcomes[obs[agent]].append((s2, obs))
    return OneStepSample(outcomes)


def estimate_phi(sim: GenerativeSimulator, policy: JointPolicy, t: int, belief: Belief,
                 nodes, agent: int, action: int, K: int,
                 rng: np.random.Generator) -> PhiMatrix:
    """Two-stage sampled estimate of the continuation matrix.

    Stage 1 draws K one-step simulations under the candidate action (other
    agents acting from their fixed nodes). Stage 2 fills each (observation,
    next node) cell with the mean of K single-trajectory returns from the
    next layer, resampling outcomes from stage 1 and the other agents' next
    nodes from their own selection rows.
    """
    if t >= policy.T:
        raise ValueError("no successor layer")
    m, N = policy.num_agents, policy.N
    acts = list(policy.joint_action(t, nodes))
    acts[agent] = action
    acts = tuple(acts)
    sample = collect_one_step(sim, belief, acts, agent, K, rng)
    num_obs_i = sim.obs_counts[agent]
    values = np.zeros((num_obs_i, N))
    reached = np.zeros(num_obs_i, dtype=bool)
    fast = _CompiledPolicy(policy)
    for oi in range(num_obs_i):
        pool = sample.outcomes[oi]
        if not pool:
            continue
        reached[oi] = True
        for q_next in range(N):
            total = 0.0
            for _ in range(K):
                s2, obs = pool[int(rng.integers(len(pool)))]
                nxt = list(fast.sample_next(t, nodes, obs, rng))
                nxt[agent] = q_next
                total += trajectory_return(sim, t + 1, policy.T, s2, tuple(nxt), policy,
                                           rng, fast)
            values[oi, q_next] = total / K
    return PhiMatrix(values=values, reached=reached)


def solve_selection_lp(phi: PhiMatrix) -> SelectionSolution:
    """Maximize sum(phi * x) over row-stochastic x with x >= 0.

    The feasible set is a product of per-row simplexes and the objective is
    linear, so an optimum puts full mass on each row's maximal entry; ties
    break to the lowest node index. Unreached rows carry no signal and get
    the uniform distribution.
    """
    num_obs, n_nodes = phi.values.shape
    x = np.zeros((num_obs, n_nodes))
    for o in range(num_obs):
        if phi.reached[o]:
            x[o, int(np.argmax(phi.values[o]))] = 1.0
        else:
            x[o, :] = 1.0 / n_nodes
    return SelectionSolution(x=x, objective=float(np.sum(phi.values * x)))


class RolloutBackend:
    """Simulation-based candidate evaluation for the improvement loop.

    Streams are derived from (seed, family, key), so a repeated call with
    the same key replays identical randomness: that is what makes the
    candidate-vs-incumbent comparisons common-random-number comparisons.
    Per-layer evaluation trajectory and step counters feed the complexity
    accounting.
    """

    name = "rollout"

    def __init__(self, sim: GenerativeSimulator, K: int, seed: int, workers: int = 1):
        self.sim = sim
        self.K = K
        self.seed = seed
        self.workers = workers
        self.eval_trajs: dict[int, int] = {}
        self.eval_steps: dict[int, int] = {}

    def _count(self, t: int, est):
        self.eval_trajs[t] = self.eval_trajs.get(t, 0) + est.samples
        self.eval_steps[t] = self.eval_steps.get(t, 0) + est.steps

    def value(self, policy, t, belief, nodes, key) -> float:
        est = rollout_from_belief(self.sim, t, belief, nodes, policy, self.K,
                                  stream(self.seed, EVAL, *key), workers=self.workers)
        self._count(t, est)
        return est.mean

    def phi(self, policy, t, belief, nodes, agent, action, key) -> PhiMatrix:
        return estimate_phi(self.sim, policy, t, belief, nodes, agent, action,
                            self.K, stream(self.seed, PHI, *key))

    def value_at_initial(self, policy, node, key) -> float:
        est = rollout_episodes(self.sim, policy, self.K,
                               stream(self.seed, START_NODE, *key),
                               nodes=(node,) * policy.num_agents,
                               workers=self.workers)
        self._count(1, est)
        return est.mean


@dataclass
class ImprovementEvent:
    t: int
    n: int
    round: int
    agent: int
    accepted: bool
    gain: float
    value_before: float
    value_after: float


@dataclass
class SolveStats:
    """Instrumentation collected during one solve."""

    node_values: dict[tuple[int, int], float] = field(default_factory=dict)
    events: list[ImprovementEvent] = field(default_factory=list)
    rounds: dict[tuple[int, int], int] = field(default_factory=dict)
    converged: dict[tuple[int, int], bool] = field(default_factory=dict)
    start_values: list[float] = field(default_factory=list)
    eval_trajs: dict[int, int] = field(default_factory=dict)
    eval_steps: dict[int, int] = field(default_factory=dict)


@dataclass
class SolveResult:
    policy: JointPolicy
    stats: SolveStats


def improve_agent_node(policy: JointPolicy, t: int, n: int, belief: Belief, agent: int,
                       params: ImproveParams, backend, key) -> tuple[bool, float, float, float]:
    """Best-response update of one agent's node with the others fixed.

    Builds one candidate per action (action plus optimized selection table
    below the last layer, bare action at it), compares all candidates and
    the incumbent by evaluations sharing one random stream, and commits the
    best candidate only if it beats the incumbent by more than min_improve.

    Returns (accepted, gain, incumbent value, committed value).
    """
    nodes = (n,) * policy.num_agents
    num_actions = policy.agents[agent].num_actions
    candidates = []
    for a in range(num_actions):
        if t < policy.T:
            phi = backend.phi(policy, t, belief, nodes, agent, a, key + (a,))
            candidates.append((a, solve_selection_lp(phi).x))
        else:
            candidates.append((a, None))
    incumbent_action, incumbent_sel = policy.get_node(agent, t, n)
    v_incumbent = backend.value(policy, t, belief, nodes, key)
    best_value, best_candidate = -np.inf, None
    for a, sel in candidates:
        policy.set_node(agent, t, n, a, sel)
        v = backend.value(policy, t, belief, nodes, key)
        if v > best_value:
            best_value, best_candidate = v, (a, sel)
    gain = best_value - v_incumbent
    if gain > params.min_improve:
        policy.set_node(agent, t, n, *best_candidate)
        return True, gain, v_incumbent, best_value
    policy.set_node(agent, t, n, incumbent_action, incumbent_sel)
    return False, gain, v_incumbent, v_incumbent


def decrspi(sim: GenerativeSimulator, portfolio: HeuristicPortfolio, T: int,
            params: ImproveParams, seed: int, backend=None,
            workers: int = 1) -> SolveResult:
    """Full solve: random joint policy, sampled belief table, then backward
    alternating maximization over (layer, node) pairs.

    Every stream derives from the one seed; a repeated call is bit-identical.
    backend defaults to rollout estimation on the given simulator; an exact
    backend may be substituted when a tabular model exists.
    """
    N, K = params.n_nodes, params.k_samples
    m = sim.num_agents
    if backend is None:
        backend = RolloutBackend(sim, K, seed, workers=workers)
    policy = random_policy(m, T, N, sim.action_counts, sim.obs_counts,
                           stream(seed, INIT_POLICY))
    table = sample_beliefs(sim, portfolio, T, N, K, stream(seed, BELIEF_SAMPLING))
    stats = SolveStats()
    for t in range(T, 0, -1):
        for n in range(N):
            belief = table.get(t, n)
            converged = False
            rounds = 0
            for rnd in range(1, params.max_rounds + 1):
                rounds = rnd
                accepted_any = False
                for agent in range(m):
                    accepted, gain, before, after = improve_agent_node(
                        policy, t, n, belief, agent, params, backend, (t, n, agent)
                    )
                    stats.events.append(
                        ImprovementEvent(t, n, rnd, agent, accepted, gain, before, after)
                    )
                    accepted_any |= accepted
                if not accepted_any:
                    converged = True
                    break
            stats.rounds[(t, n)] = rounds
            stats.converged[(t, n)] = converged
            stats.node_values[(t, n)] = backend.value(
                policy, t, belief, (n,) * m, (t, n, m)
            )
    stats.start_values = [
        backend.value_at_initial(policy, n, (n,)) for n in range(N)
    ]
    policy.start_node = int(np.argmax(stats.start_values))
    if hasattr(backend, "eval_trajs"):
        stats.eval_trajs = dict(backend.eval_trajs)
        stats.eval_steps = dict(backend.eval_steps)
    return SolveResult(policy=policy, stats=stats)
