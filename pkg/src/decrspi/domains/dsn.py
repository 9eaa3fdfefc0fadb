"""Distributed sensor network: two facing chains of sensors trap moving targets.

Geometry: two chains of L sensors each (m = 2L agents, agents 0..L-1 on
chain 0 and L..2L-1 on chain 1). The strip between them has C = L-1 cells;
cell c is surrounded by sensors c and c+1 of both chains. Sensor c's
track-right aims at cell c and its track-left at cell c-1; aiming outside
the strip is legal, costs the same, and tracks nothing.

Targets carry an energy of 2. Each step, every live target tracked by at
least three of its four surrounding sensors loses one energy (before any
movement); hitting zero captures it, removes it, and pays +10. Every track
action costs 1. Live targets then move independently: left, right or stay
with probability 1/3 each, with infeasible directions' mass going to stay.
Targets may share a cell. When the last target is captured the strip
restarts immediately: fresh targets placed uniformly at random, energy 2,
within the same episode.

Observations are deterministic: each sensor reports two bits, bit 1 for
"left cell occupied by a live target" and bit 0 for the right cell.

State code: each target contributes a digit in base 2C+1 (0 = captured,
else 1 + cell*2 + energy-1), first target most significant.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..model import ExplicitModel, GenerativeSimulator

TRACK_LEFT, TRACK_RIGHT, NONE = 0, 1, 2
CAPTURE_REWARD = 10.0
TRACK_COST = 1.0
INIT_ENERGY = 2
MODEL_ENTRY_BUDGET = 20_000_000


class DsnSimulator(GenerativeSimulator):
    """Generative simulator for the sensor-network strip."""

    def __init__(self, sensors_per_chain: int, targets: int = 2):
        if sensors_per_chain < 2:
            raise ValueError("need at least 2 sensors per chain")
        if targets < 1:
            raise ValueError("need at least 1 target")
        self.L = sensors_per_chain
        self.cells = sensors_per_chain - 1
        self.targets = targets
        self.num_agents = 2 * sensors_per_chain
        self.action_counts = [3] * self.num_agents
        self.obs_counts = [4] * self.num_agents
        self.reward_range = (-float(self.num_agents), CAPTURE_REWARD * targets)
        self.codes_per_target = 2 * self.cells + 1
        self.num_states = self.codes_per_target ** targets

    # -- state coding ------------------------------------------------------

    def decode(self, state: int) -> list[tuple[int, int] | None]:
        """Per-target (cell, energy), or None if captured."""
        out = []
        base = self.codes_per_target
        for _ in range(self.targets):
            state, code = divmod(state, base)
            if code == 0:
                out.append(None)
            else:
                out.append(((code - 1) // 2, (code - 1) % 2 + 1))
        out.reverse()
        return out

    def encode(self, targets) -> int:
        code = 0
        for tgt in targets:
            digit = 0 if tgt is None else 1 + tgt[0] * 2 + (tgt[1] - 1)
            code = code * self.codes_per_target + digit
        return code

    # -- dynamics ----------------------------------------------------------

    def _trackers(self, cell: int, actions) -> int:
        """How many of the four surrounding sensors aim at this cell."""
        L = self.L
        hits = 0
        if actions[cell] == TRACK_RIGHT:
            hits += 1
        if actions[cell + 1] == TRACK_LEFT:
            hits += 1
        if actions[L + cell] == TRACK_RIGHT:
            hits += 1
        if actions[L + cell + 1] == TRACK_LEFT:
            hits += 1
        return hits

    def _track_phase(self, state: int, actions):
        """Deterministic part of a step: energy decrements and captures.

        Returns (per-target (cell, energy) or None after captures, reward).
        """
        tgts = self.decode(state)
        ntrack = len(actions) - (actions.count(NONE) if isinstance(actions, (tuple, list))
                                 else sum(a == NONE for a in actions))
        captures = 0
        out = []
        for tgt in tgts:
            if tgt is None:
                out.append(None)
                continue
            cell, energy = tgt
            if self._trackers(cell, actions) >= 3:
                energy -= 1
                if energy == 0:
                    captures += 1
                    out.append(None)
                    continue
            out.append((cell, energy))
        reward = CAPTURE_REWARD * captures - TRACK_COST * ntrack
        return out, reward

    def _move_options(self, cell: int):
        """Feasible destinations and the probability of staying."""
        left_ok = cell > 0
        right_ok = cell < self.cells - 1
        p_stay = (3 - left_ok - right_ok) / 3.0
        return left_ok, right_ok, p_stay

    def observations(self, targets) -> tuple[int, ...]:
        occupied = [False] * self.cells
        for tgt in targets:
            if tgt is not None:
                occupied[tgt[0]] = True
        obs_chain = []
        for i in range(self.L):
            left = occupied[i - 1] if i - 1 >= 0 else False
            right = occupied[i] if i < self.cells else False
            obs_chain.append(2 * left + right)
        return tuple(obs_chain) * 2

    def sample_initial(self, rng):
        cells = rng.integers(0, self.cells, size=self.targets)
        return self.encode([(int(c), INIT_ENERGY) for c in cells])

    def step(self, state, actions, rng):
        tgts, reward = self._track_phase(state, actions)
        live = [i for i, t in enumerate(tgts) if t is not None]
        if not live:
            cells = rng.integers(0, self.cells, size=self.targets)
            tgts = [(int(c), INIT_ENERGY) for c in cells]
        else:
            u = rng.random(len(live))
            for k, i in enumerate(live):
                cell, energy = tgts[i]
                left_ok, right_ok, p_stay = self._move_options(cell)
                x = u[k]
                if left_ok and x < 1.0 / 3.0:
                    cell -= 1
                elif right_ok and x >= 1.0 - 1.0 / 3.0:
                    cell += 1
                tgts[i] = (cell, energy)
        return self.encode(tgts), reward, self.observations(tgts)

    # -- exact step distribution (for the tabular model) --------------------

    def step_distribution(self, state: int, actions) -> tuple[dict[int, float], float]:
        """Exact next-state distribution and the (deterministic) reward."""
        tgts, reward = self._track_phase(state, actions)
        live = [i for i, t in enumerate(tgts) if t is not None]
        dist: dict[int, float] = {}
        if not live:
            p = 1.0 / self.cells ** self.targets
            for cells in itertools.product(range(self.cells), repeat=self.targets):
                code = self.encode([(c, INIT_ENERGY) for c in cells])
                dist[code] = dist.get(code, 0.0) + p
            return dist, reward
        per_target = []
        for i in live:
            cell, energy = tgts[i]
            left_ok, right_ok, p_stay = self._move_options(cell)
            opts = [(cell, p_stay)]
            if left_ok:
                opts.append((cell - 1, 1.0 / 3.0))
            if right_ok:
                opts.append((cell + 1, 1.0 / 3.0))
            per_target.append(opts)
        for combo in itertools.product(*per_target):
            nxt = list(tgts)
            p = 1.0
            for i, (cell, prob) in zip(live, combo):
                nxt[i] = (cell, nxt[i][1])
                p *= prob
            code = self.encode(nxt)
            dist[code] = dist.get(code, 0.0) + p
        return dist, reward


def build_model(sim: DsnSimulator, horizon: int = 10) -> ExplicitModel:
    """Tabulate the strip as an explicit model. Only tractable for the
    smallest geometries; raises once the dense tables would not fit."""
    S = sim.num_states
    JA = 3 ** sim.num_agents
    JO = 4 ** sim.num_agents
    if S > 100_000:
        raise ValueError(f"{S} states exceed the tabular limit")
    if S * JA * (S + JO) > MODEL_ENTRY_BUDGET:
        raise ValueError(
            f"dense tables would need {S * JA * (S + JO)} entries "
            f"(budget {MODEL_ENTRY_BUDGET})"
        )
    P = np.zeros((S, JA, S))
    O = np.zeros((S, JA, JO))
    R = np.zeros((S, JA))
    obs_code = np.zeros(S, dtype=np.int64)
    for s2 in range(S):
        obs_code[s2] = int(
            np.ravel_multi_index(sim.observations(sim.decode(s2)), [4] * sim.num_agents)
        )
    for s in range(S):
        for ja, actions in enumerate(itertools.product(range(3), repeat=sim.num_agents)):
            dist, reward = sim.step_distribution(s, actions)
            R[s, ja] = reward
            for s2, p in dist.items():
                P[s, ja, s2] = p
    for s2 in range(S):
        O[s2, :, obs_code[s2]] = 1.0
    b0 = np.zeros(S)
    p = 1.0 / sim.cells ** sim.targets
    for cells in itertools.product(range(sim.cells), repeat=sim.targets):
        b0[sim.encode([(c, INIT_ENERGY) for c in cells])] += p
    return ExplicitModel(
        num_agents=sim.num_agents,
        num_states=S,
        action_counts=list(sim.action_counts),
        obs_counts=list(sim.obs_counts),
        transition=P,
        observation=O,
        reward=R,
        initial_belief=b0,
        horizon=horizon,
    )
