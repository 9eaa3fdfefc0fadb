"""Layered stochastic policies and their execution semantics.

Each agent's policy has one layer per time step t = 1..T and N decision
nodes per layer. A node carries an action; on every layer except the last
it also carries a node-selection table, one row per private observation,
giving a distribution over the N nodes of the next layer. Execution is
fully decentralized: an agent's node transition sees only that agent's own
observation.

Time steps are 1-based (t = 1..T, matching the algorithm descriptions);
node, action and observation indices are 0-based array indices.
"""

from __future__ import annotations

import json

import numpy as np

ROW_SUM_TOL = 1e-6
ROW_RENORM_TOL = 1e-12


class AgentPolicy:
    """One agent's layered stochastic policy.

    Attributes:
        actions: int array (T, N); actions[t-1, n] is node n's action at layer t.
        selections: float array (T-1, N, num_obs, N); selections[t-1, n, o]
            is the row-stochastic distribution over layer-(t+1) nodes.
    """

    def __init__(self, actions: np.ndarray, selections: np.ndarray, num_actions: int):
        self.actions = np.asarray(actions, dtype=np.int64)
        self.selections = np.asarray(selections, dtype=np.float64)
        self.num_actions = num_actions
        self.T = self.actions.shape[0]
        self.N = self.actions.shape[1]
        self.num_obs = int(self.selections.shape[2])
        self._validate()

    def _validate(self):
        if self.selections.shape != (self.T - 1, self.N, self.num_obs, self.N):
            raise ValueError(
                f"selection shape {self.selections.shape} != "
                f"{(self.T - 1, self.N, self.num_obs, self.N)}"
            )
        if np.any(self.actions < 0) or np.any(self.actions >= self.num_actions):
            raise ValueError("action index out of range")
        if self.T > 1:
            if np.any(self.selections < 0.0):
                raise ValueError("negative selection probability")
            sums = self.selections.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
                raise ValueError("selection row does not sum to 1")

    def action(self, t: int, node: int) -> int:
        return int(self.actions[t - 1, node])

    def selection_row(self, t: int, node: int, obs: int) -> np.ndarray:
        """The stored distribution over layer-(t+1) nodes. Valid for t < T."""
        if t >= self.T:
            raise ValueError("no successor layer")
        return self.selections[t - 1, node, obs]

    def copy(self) -> "AgentPolicy":
        return AgentPolicy(self.actions.copy(), self.selections.copy(), self.num_actions)


class JointPolicy:
    """One AgentPolicy per agent, sharing T and N.

    start_node is the layer-1 node index every agent begins execution at;
    the solver sets it after training (node n of each agent is improved
    jointly, so a single shared index suffices).
    """

    def __init__(self, agents: list[AgentPolicy], start_node: int = 0):
        if not agents:
            raise ValueError("no agents")
        T, N = agents[0].T, agents[0].N
        for a in agents:
            if a.T != T or a.N != N:
                raise ValueError("agents disagree on T or N")
        self.agents = agents
        self.T = T
        self.N = N
        self.start_node = start_node

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    def node_count(self) -> int:
        return self.num_agents * self.T * self.N

    def joint_action(self, t: int, nodes) -> tuple[int, ...]:
        return tuple(a.actions[t - 1, n] for a, n in zip(self.agents, nodes))

    def set_node(self, agent: int, t: int, node: int, action: int, selection=None):
        """Overwrite one decision node; selection is required for t < T."""
        pol = self.agents[agent]
        pol.actions[t - 1, node] = action
        if t < self.T:
            if selection is None:
                raise ValueError("selection required below the last layer")
            pol.selections[t - 1, node] = selection

    def get_node(self, agent: int, t: int, node: int):
        pol = self.agents[agent]
        sel = pol.selections[t - 1, node].copy() if t < self.T else None
        return int(pol.actions[t - 1, node]), sel

    def copy(self) -> "JointPolicy":
        return JointPolicy([a.copy() for a in self.agents], self.start_node)


def random_policy(num_agents, T, N, action_counts, obs_counts, rng) -> JointPolicy:
    """Uniformly random joint policy: random node actions, selection rows
    drawn uniformly from the probability simplex."""
    agents = []
    for i in range(num_agents):
        actions = rng.integers(0, action_counts[i], size=(T, N))
        if N == 1:
            selections = np.ones((T - 1, N, obs_counts[i], N))
        else:
            selections = rng.dirichlet(np.ones(N), size=(T - 1, N, obs_counts[i]))
        agents.append(AgentPolicy(actions, selections.reshape(T - 1, N, obs_counts[i], N),
                                  action_counts[i]))
    return JointPolicy(agents)


def next_node_distribution(policy: JointPolicy, agent: int, t: int, node: int,
                           obs: int) -> np.ndarray:
    """Read-only accessor for one agent's stored selection row."""
    return policy.agents[agent].selection_row(t, node, obs)


def sample_next_nodes(policy: JointPolicy, t: int, nodes, joint_obs,
                      rng: np.random.Generator) -> tuple[int, ...]:
    """Sample every agent's next node from its own row (product form)."""
    if t >= policy.T:
        raise ValueError("no successor layer")
    N = policy.N
    if N == 1:
        return (0,) * policy.num_agents
    draws = rng.random(policy.num_agents)
    out = []
    for i, (pol, n, o) in enumerate(zip(policy.agents, nodes, joint_obs)):
        row = pol.selections[t - 1, n, o]
        acc = 0.0
        nxt = N - 1
        u = draws[i] * row.sum()
        for j in range(N):
            acc += row[j]
            if u < acc:
                nxt = j
                break
        out.append(nxt)
    return tuple(out)


def serialize_policy(policy: JointPolicy, domain: str = "", seed=None) -> str:
    """Encode a joint policy as a JSON document."""
    doc = {
        "T": policy.T,
        "N": policy.N,
        "domain": domain,
        "seed": seed,
        "start_node": policy.start_node,
        "agents": [
            {
                "num_actions": pol.num_actions,
                "num_obs": pol.num_obs,
                "layers": [
                    {
                        "nodes": [
                            {
                                "action": int(pol.actions[t, n]),
                                **(
                                    {"selection": pol.selections[t, n].tolist()}
                                    if t < policy.T - 1
                                    else {}
                                ),
                            }
                            for n in range(policy.N)
                        ]
                    }
                    for t in range(policy.T)
                ],
            }
            for pol in policy.agents
        ],
    }
    return json.dumps(doc, indent=1)


def _load_row(row, N):
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (N,):
        raise ValueError(f"selection row has length {row.size}, expected {N}")
    if np.any(row < -ROW_SUM_TOL):
        raise ValueError("selection row has a negative entry")
    row = np.clip(row, 0.0, None)
    total = row.sum()
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise ValueError(f"selection row sums to {total!r}")
    if abs(total - 1.0) > ROW_RENORM_TOL:
        row = row / total
    return row


def deserialize_policy(text: str) -> JointPolicy:
    """Decode a policy document, renormalizing rows within tolerance and
    rejecting anything further off the simplex."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed policy document: {e}") from e
    try:
        T, N = int(doc["T"]), int(doc["N"])
        agent_docs = doc["agents"]
    except (KeyError, TypeError) as e:
        raise ValueError(f"policy document missing field: {e}") from e
    agents = []
    for adoc in agent_docs:
        num_actions = int(adoc["num_actions"])
        num_obs = int(adoc["num_obs"])
        layers = adoc["layers"]
        if len(layers) != T:
            raise ValueError(f"expected {T} layers, found {len(layers)}")
        actions = np.zeros((T, N), dtype=np.int64)
        selections = np.ones((T - 1, N, num_obs, N), dtype=np.float64) / N
        for t, layer in enumerate(layers):
            nodes = layer["nodes"]
            if len(nodes) != N:
                raise ValueError(f"layer {t + 1} has {len(nodes)} nodes, expected {N}")
            for n, node in enumerate(nodes):
                actions[t, n] = int(node["action"])
                if t < T - 1:
                    sel = node.get("selection")
                    if sel is None:
                        raise ValueError(f"layer {t + 1} node {n} missing selection")
                    for o, row in enumerate(sel):
                        selections[t, n, o] = _load_row(row, N)
        agents.append(AgentPolicy(actions, selections, num_actions))
    return JointPolicy(agents, start_node=int(doc.get("start_node", 0)))
