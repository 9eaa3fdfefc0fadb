"""Ground-truth evaluation on tabular models.

Everything here is exact: stochastic-policy values by backward recursion
over (state, joint node tuple), deterministic policy-tree values, the
observation-conditioned continuation matrix, and brute-force optimal
policy search. Budgets are hard errors, never silent truncation, because
these functions serve as test oracles.

Deterministic policy trees are nested tuples (action, children) where
children is one subtree per observation index, empty at the leaves.
"""

from __future__ import annotations

import numpy as np

from .model import Belief, ExplicitModel, all_joint, joint_index
from .policy import JointPolicy

VALUE_BUDGET = 10_000_000
TREE_BUDGET = 1_000_000


class OracleBudgetError(ValueError):
    """The requested exact computation exceeds its size budget."""


def _require_model(model):
    if model is None:
        raise ValueError("no explicit model available")


def value_tables(model: ExplicitModel, policy: JointPolicy, t_from: int = 1,
                 budget: int = VALUE_BUDGET) -> dict[int, np.ndarray]:
    """Exact V[t][s, q] for t = t_from..T, q a flat joint node code."""
    _require_model(model)
    m, N, T = policy.num_agents, policy.N, policy.T
    S = model.num_states
    n_tuples = N ** m
    if S * n_tuples * (T - t_from + 1) > budget:
        raise OracleBudgetError(
            f"value table needs {S * n_tuples * (T - t_from + 1)} cells (budget {budget})"
        )
    node_tuples = list(all_joint([N] * m))
    tables: dict[int, np.ndarray] = {}
    vt = np.empty((S, n_tuples))
    for qi, q in enumerate(node_tuples):
        ja = model.joint_action(policy.joint_action(T, q))
        vt[:, qi] = model.reward[:, ja]
    tables[T] = vt
    for t in range(T - 1, t_from - 1, -1):
        nxt = tables[t + 1].reshape((S,) + (N,) * m)
        vt = np.empty((S, n_tuples))
        for qi, q in enumerate(node_tuples):
            ja = model.joint_action(policy.joint_action(t, q))
            cont = nxt
            for i in range(m):
                rows = policy.agents[i].selections[t - 1, q[i]]  # (obs_i, N)
                cont = np.tensordot(cont, rows, axes=([1], [1]))
            cont = cont.reshape(S, -1)  # (S, joint obs)
            w = np.einsum("sj,sj->s", model.observation[:, ja, :], cont)
            vt[:, qi] = model.reward[:, ja] + model.transition[:, ja, :] @ w
        tables[t] = vt
    return tables


def exact_policy_value(model: ExplicitModel, belief: Belief, policy: JointPolicy,
                       t: int, nodes, budget: int = VALUE_BUDGET) -> float:
    """Exact value of a layered stochastic joint policy from (t, belief, nodes)."""
    tables = value_tables(model, policy, t_from=t, budget=budget)
    qi = joint_index(nodes, [policy.N] * policy.num_agents)
    col = tables[t][:, qi]
    return float(np.dot(belief.probs, col[belief.states]))


def tree_depth(tree) -> int:
    action, children = tree
    return 1 if not children else 1 + tree_depth(children[0])


def exact_tree_value(model: ExplicitModel, state: int, trees, _memo=None) -> float:
    """Bellman value of a joint deterministic policy tree at a state."""
    _require_model(model)
    if _memo is None:
        _memo = {}
    key = (state, trees)
    hit = _memo.get(key)
    if hit is not None:
        return hit
    actions = tuple(tr[0] for tr in trees)
    ja = model.joint_action(actions)
    value = float(model.reward[state, ja])
    if trees[0][1]:
        p_row = model.transition[state, ja]
        for s2 in np.nonzero(p_row)[0]:
            o_row = model.observation[s2, ja]
            acc = 0.0
            for jo in np.nonzero(o_row)[0]:
                obs = model.split_obs(int(jo))
                sub = tuple(tr[1][o] for tr, o in zip(trees, obs))
                acc += o_row[jo] * exact_tree_value(model, int(s2), sub, _memo)
            value += p_row[s2] * acc
    _memo[key] = value
    return value


def exact_phi(model: ExplicitModel, policy: JointPolicy, t: int, belief: Belief,
              nodes, agent: int, action: int, budget: int = VALUE_BUDGET):
    """Exact continuation matrix for one agent's candidate action.

    Entry (o_i, q'_i) sums Pr(s', joint obs | belief, joint action) times the
    probability that the other agents land on each next node tuple times the
    exact next-layer value, over everything except the agent's own
    observation and next node. Rows for observations the agent can never
    receive under (belief, action) are zero and flagged unreached.
    """
    from .improve import PhiMatrix

    _require_model(model)
    if t >= policy.T:
        raise ValueError("no successor layer")
    m, N = policy.num_agents, policy.N
    acts = list(policy.joint_action(t, nodes))
    acts[agent] = action
    ja = model.joint_action(tuple(acts))
    S = model.num_states
    pj = belief.to_dense(S) @ model.transition[:, ja, :]  # (S,)
    pr = pj[:, None] * model.observation[:, ja, :]  # (S, JO)
    nxt = value_tables(model, policy, t_from=t + 1, budget=budget)[t + 1]
    nxt = nxt.reshape((S,) + (N,) * m)
    num_obs_i = model.obs_counts[agent]
    values = np.zeros((num_obs_i, N))
    mass = np.zeros(num_obs_i)
    others = [j for j in range(m) if j != agent]
    for jo in range(model.num_joint_obs):
        w = pr[:, jo]
        total = w.sum()
        obs = model.split_obs(jo)
        mass[obs[agent]] += total
        if total == 0.0:
            continue
        cont = nxt
        for j in sorted(others, reverse=True):
            row = policy.agents[j].selections[t - 1, nodes[j], obs[j]]
            cont = np.tensordot(cont, row, axes=([1 + j], [0]))
        values[obs[agent]] += w @ cont.reshape(S, N)
    return PhiMatrix(values=values, reached=mass > 0.0)


def enumerate_trees(num_actions: int, num_obs: int, depth: int) -> list:
    """All deterministic policy trees of the given depth for one agent."""
    if depth == 1:
        return [(a, ()) for a in range(num_actions)]
    subs = enumerate_trees(num_actions, num_obs, depth - 1)
    out = []

    def fill(children):
        if len(children) == num_obs:
            frozen = tuple(children)
            for a in range(num_actions):
                out.append((a, frozen))
            return
        for sub in subs:
            children.append(sub)
            fill(children)
            children.pop()

    fill([])
    return out


def count_trees(num_actions: int, num_obs: int, depth: int) -> int:
    n = num_actions
    for _ in range(depth - 1):
        n = num_actions * n**num_obs
    return n


def brute_force_optimal(model: ExplicitModel, horizon: int,
                        budget: int = TREE_BUDGET) -> tuple[float, tuple]:
    """Exhaustive search over joint deterministic policy trees at b0."""
    _require_model(model)
    total = 1
    for i in range(model.num_agents):
        total *= count_trees(model.action_counts[i], model.obs_counts[i], horizon)
        if total > budget:
            raise OracleBudgetError(f"joint tree count exceeds budget {budget}")
    per_agent = [
        enumerate_trees(model.action_counts[i], model.obs_counts[i], horizon)
        for i in range(model.num_agents)
    ]
    b0 = model.b0()
    memo: dict = {}
    best_value, best_trees = -np.inf, None
    for trees in all_joint([len(p) for p in per_agent]):
        joint = tuple(per_agent[i][trees[i]] for i in range(model.num_agents))
        value = sum(
            p * exact_tree_value(model, int(s), joint, memo)
            for s, p in zip(b0.states, b0.probs)
        )
        if value > best_value:
            best_value, best_trees = value, joint
    return float(best_value), best_trees


def induced_trees(policy: JointPolicy, start_nodes, t: int = 1) -> tuple:
    """Deterministic trees traced out of a policy whose rows are one-hot."""

    def build(agent, node, layer):
        pol = policy.agents[agent]
        action = int(pol.actions[layer - 1, node])
        if layer == policy.T:
            return (action, ())
        children = []
        for o in range(pol.num_obs):
            row = pol.selections[layer - 1, node, o]
            children.append(build(agent, int(np.argmax(row)), layer + 1))
        return (action, tuple(children))

    return tuple(build(i, start_nodes[i], t) for i in range(policy.num_agents))


class ExactBackend:
    """Drop-in replacement for rollout estimation inside the improvement
    loop: evaluates candidates and continuation matrices exactly. Stream
    keys are accepted and ignored (nothing is random)."""

    name = "exact"

    def __init__(self, model: ExplicitModel, budget: int = VALUE_BUDGET):
        _require_model(model)
        self.model = model
        self.budget = budget

    def value(self, policy, t, belief, nodes, key) -> float:
        return exact_policy_value(self.model, belief, policy, t, nodes, budget=self.budget)

    def phi(self, policy, t, belief, nodes, agent, action, key):
        return exact_phi(self.model, policy, t, belief, nodes, agent, action,
                         budget=self.budget)

    def value_at_initial(self, policy, node, key) -> float:
        nodes = (node,) * policy.num_agents
        return exact_policy_value(self.model, self.model.b0(), policy, 1, nodes,
                                  budget=self.budget)
