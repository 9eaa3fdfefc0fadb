"""SignalMatch: a two-agent verification toy, small enough for brute force.

Two states. The state flips with probability 0.1 each step, regardless of
actions. Each agent privately hears the next state with accuracy 0.8
(independent across agents). Saying the state's index pays +1 when both
agents do it, disagreeing costs 1, agreeing on the wrong index pays 0, so
the agents must coordinate as well as track the signal.
"""

from __future__ import annotations

import numpy as np

from ..model import ExplicitModel, GenerativeSimulator

FLIP = 0.1
HEAR = 0.8


class SignalMatchSimulator(GenerativeSimulator):
    num_agents = 2
    action_counts = [2, 2]
    obs_counts = [2, 2]
    reward_range = (-1.0, 1.0)

    def sample_initial(self, rng):
        return int(rng.random() < 0.5)

    def step(self, state, actions, rng):
        a0, a1 = actions
        if a0 != a1:
            r = -1.0
        elif a0 == state:
            r = 1.0
        else:
            r = 0.0
        u = rng.random(3)
        s2 = state ^ (u[0] < FLIP)
        o0 = s2 if u[1] < HEAR else 1 - s2
        o1 = s2 if u[2] < HEAR else 1 - s2
        return int(s2), r, (int(o0), int(o1))


def build_model(horizon: int = 4) -> ExplicitModel:
    P = np.zeros((2, 4, 2))
    O = np.zeros((2, 4, 4))
    R = np.zeros((2, 4))
    for s in range(2):
        for ja, (a0, a1) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
            P[s, ja, s] = 1.0 - FLIP
            P[s, ja, 1 - s] = FLIP
            if a0 != a1:
                R[s, ja] = -1.0
            elif a0 == s:
                R[s, ja] = 1.0
    for s2 in range(2):
        for jo, (o0, o1) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
            p0 = HEAR if o0 == s2 else 1.0 - HEAR
            p1 = HEAR if o1 == s2 else 1.0 - HEAR
            O[s2, :, jo] = p0 * p1
    return ExplicitModel(
        num_agents=2,
        num_states=2,
        action_counts=[2, 2],
        obs_counts=[2, 2],
        transition=P,
        observation=O,
        reward=R,
        initial_belief=np.array([0.5, 0.5]),
        horizon=horizon,
    )
