"""DEC-POMDP data model: tabular models, the simulator contract, beliefs.

States, per-agent actions, per-agent observations and policy nodes are all
dense integer indices. Joint actions and joint observations travel as
tuples of per-agent indices; tables index them by a row-major flat code
(first agent most significant).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-9


def joint_index(indices, counts) -> int:
    """Flatten per-agent indices into a row-major joint code."""
    code = 0
    for idx, c in zip(indices, counts):
        code = code * c + idx
    return code


def split_joint(code: int, counts) -> tuple[int, ...]:
    """Inverse of joint_index."""
    out = [0] * len(counts)
    for i in range(len(counts) - 1, -1, -1):
        code, out[i] = divmod(code, counts[i])
    return tuple(out)


def all_joint(counts):
    """Iterate every joint tuple in flat-code order."""
    m = len(counts)
    idx = [0] * m
    while True:
        yield tuple(idx)
        i = m - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < counts[i]:
                break
            idx[i] = 0
            i -= 1
        if i < 0:
            return


class Belief:
    """Probability distribution over state indices, stored on its support.

    Supports state spaces far larger than memory would allow dense (the
    sensor-network domains), while small models can materialize a dense
    view with to_dense().
    """

    __slots__ = ("states", "probs", "_cum")

    def __init__(self, states, probs):
        states = np.asarray(states, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        if states.size == 0:
            raise ValueError("empty belief")
        if np.any(probs < -PROB_TOL):
            raise ValueError("negative belief entry")
        total = probs.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"belief sums to {total!r}, not 1")
        keep = probs > 0.0
        self.states = states[keep]
        self.probs = probs[keep]
        self._cum = None

    @classmethod
    def from_dense(cls, vec) -> "Belief":
        vec = np.asarray(vec, dtype=np.float64)
        return cls(np.arange(vec.size), vec)

    @classmethod
    def point_mass(cls, state: int) -> "Belief":
        return cls([state], [1.0])

    def to_dense(self, num_states: int) -> np.ndarray:
        vec = np.zeros(num_states)
        vec[self.states] = self.probs
        return vec

    def prob(self, state: int) -> float:
        hits = np.nonzero(self.states == state)[0]
        return float(self.probs[hits[0]]) if hits.size else 0.0

    def sample(self, rng: np.random.Generator) -> int:
        if self._cum is None:
            self._cum = np.cumsum(self.probs)
        i = int(np.searchsorted(self._cum, rng.random() * self._cum[-1], side="right"))
        return int(self.states[min(i, len(self.states) - 1)])

    def __eq__(self, other):
        return (
            isinstance(other, Belief)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.probs, other.probs)
        )

    def __repr__(self):
        pairs = ", ".join(f"{s}: {p:.4g}" for s, p in zip(self.states, self.probs))
        return f"Belief({{{pairs}}})"


def belief_from_particles(particles) -> Belief:
    """Belief whose mass on each state is its particle frequency."""
    particles = np.asarray(particles, dtype=np.int64)
    if particles.size == 0:
        raise ValueError("no particles")
    states, counts = np.unique(particles, return_counts=True)
    return Belief(states, counts / particles.size)


def sample_state(belief: Belief, rng: np.random.Generator) -> int:
    """Draw a state index from a belief."""
    return belief.sample(rng)


def _check_rows(name: str, table: np.ndarray):
    if np.any(table < -PROB_TOL) or np.any(table > 1.0 + PROB_TOL):
        raise ValueError(f"{name} has entries outside [0, 1]")
    sums = table.sum(axis=-1)
    bad = np.abs(sums - 1.0) > PROB_TOL
    if np.any(bad):
        where = np.argwhere(bad)[0]
        raise ValueError(f"{name} row {tuple(where)} sums to {sums[tuple(where)]!r}")


@dataclass
class ExplicitModel:
    """Full tabular DEC-POMDP.

    Attributes:
        num_agents: m.
        num_states: |S|.
        action_counts: per-agent action-space sizes.
        obs_counts: per-agent observation-space sizes.
        transition: P[s, ja, s'], each row a distribution over s'.
        observation: O[s', ja, jo], each row a distribution over jo.
        reward: R[s, ja], expected immediate reward.
        initial_belief: b0 over states.
        horizon: default episode length for this model.
    """

    num_agents: int
    num_states: int
    action_counts: list[int]
    obs_counts: list[int]
    transition: np.ndarray
    observation: np.ndarray
    reward: np.ndarray
    initial_belief: np.ndarray
    horizon: int

    num_joint_actions: int = field(init=False)
    num_joint_obs: int = field(init=False)

    def __post_init__(self):
        ja = int(np.prod(self.action_counts))
        jo = int(np.prod(self.obs_counts))
        self.num_joint_actions = ja
        self.num_joint_obs = jo
        S = self.num_states
        if self.transition.shape != (S, ja, S):
            raise ValueError(f"transition shape {self.transition.shape} != {(S, ja, S)}")
        if self.observation.shape != (S, ja, jo):
            raise ValueError(f"observation shape {self.observation.shape} != {(S, ja, jo)}")
        if self.reward.shape != (S, ja):
            raise ValueError(f"reward shape {self.reward.shape} != {(S, ja)}")
        if self.initial_belief.shape != (S,):
            raise ValueError("initial_belief shape mismatch")
        _check_rows("transition", self.transition)
        _check_rows("observation", self.observation)
        _check_rows("initial_belief", self.initial_belief[None, :])
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    def joint_action(self, actions) -> int:
        return joint_index(actions, self.action_counts)

    def joint_obs(self, obs) -> int:
        return joint_index(obs, self.obs_counts)

    def split_obs(self, code: int) -> tuple[int, ...]:
        return split_joint(code, self.obs_counts)

    def b0(self) -> Belief:
        return Belief.from_dense(self.initial_belief)


def exact_joint_step_distribution(model: ExplicitModel, belief: Belief, actions) -> np.ndarray:
    """Joint distribution over (next state, joint observation) for one step.

    Returns an array D[s', jo] with D[s', jo] = sum_s b(s) P(s'|s, a) O(jo|s', a).
    """
    ja = model.joint_action(actions)
    b = belief.to_dense(model.num_states)
    next_marginal = b @ model.transition[:, ja, :]
    return next_marginal[:, None] * model.observation[:, ja, :]


def expected_reward(model: ExplicitModel, belief: Belief, actions) -> float:
    """Belief-weighted immediate reward sum_s b(s) R(s, a)."""
    ja = model.joint_action(actions)
    return float(np.dot(belief.probs, model.reward[belief.states, ja]))


class GenerativeSimulator:
    """Black-box reset/step access to a domain.

    This is the only model access the learner itself uses. Implementations
    must be stateless: all episode state lives in the state index passed in
    and out, so one instance can serve many concurrent trajectories as long
    as each owns its rng stream.

    Attributes:
        num_agents, action_counts, obs_counts: space sizes.
        reward_range: (r_min, r_max) bounds on a single step's reward.
    """

    num_agents: int
    action_counts: list[int]
    obs_counts: list[int]
    reward_range: tuple[float, float]

    def sample_initial(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def step(self, state: int, actions, rng: np.random.Generator):
        """Advance one step; returns (next_state, reward, joint_obs tuple)."""
        raise NotImplementedError

    def value_range(self, horizon: int) -> tuple[float, float]:
        """Analytic bounds on any achievable episode return over `horizon` steps."""
        lo, hi = self.reward_range
        return horizon * lo, horizon * hi


class ExplicitSimulator(GenerativeSimulator):
    """Generative interface backed by an ExplicitModel's tables."""

    def __init__(self, model: ExplicitModel):
        self.model = model
        self.num_agents = model.num_agents
        self.action_counts = list(model.action_counts)
        self.obs_counts = list(model.obs_counts)
        self.reward_range = (float(model.reward.min()), float(model.reward.max()))
        self._cum_b0 = np.cumsum(model.initial_belief)
        self._cum_p = np.cumsum(model.transition, axis=-1)
        self._cum_o = np.cumsum(model.observation, axis=-1)

    def sample_initial(self, rng):
        return int(np.searchsorted(self._cum_b0, rng.random() * self._cum_b0[-1], side="right"))

    def step(self, state, actions, rng):
        ja = self.model.joint_action(actions)
        row = self._cum_p[state, ja]
        s2 = int(np.searchsorted(row, rng.random() * row[-1], side="right"))
        s2 = min(s2, self.model.num_states - 1)
        row = self._cum_o[s2, ja]
        jo = int(np.searchsorted(row, rng.random() * row[-1], side="right"))
        jo = min(jo, self.model.num_joint_obs - 1)
        r = float(self.model.reward[state, ja])
        return s2, r, self.model.split_obs(jo)
