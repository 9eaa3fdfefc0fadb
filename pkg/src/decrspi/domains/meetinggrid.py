"""Meeting in a 3x3 grid: two robots try to share a cell as often as possible.

Each robot picks one of five moves (up, down, left, right, stay). A move
succeeds with probability 0.6 and otherwise the robot stays; moves off the
edge always stay. Each robot observes exactly its own cell. The team earns
+1 whenever both robots occupy the same cell after the transition, so the
realized step reward depends on where the robots actually land; the tabular
reward R(s, a) is its expectation.

State code: cell_robot0 * 9 + cell_robot1. Cells are row-major on the grid.
Robots start in opposite corners (cells 0 and 8).
"""

from __future__ import annotations

import numpy as np

from ..model import ExplicitModel, GenerativeSimulator

SIZE = 3
CELLS = SIZE * SIZE
MOVE_OK = 0.6
START = (0, CELLS - 1)

# up, down, left, right, stay
DELTAS = [(-1, 0), (1, 0), (0, -1), (0, 1), (0, 0)]


def _target(cell: int, action: int) -> int:
    r, c = divmod(cell, SIZE)
    dr, dc = DELTAS[action]
    r2, c2 = r + dr, c + dc
    if not (0 <= r2 < SIZE and 0 <= c2 < SIZE):
        return cell
    return r2 * SIZE + c2


class MeetingGridSimulator(GenerativeSimulator):
    num_agents = 2
    action_counts = [5, 5]
    obs_counts = [CELLS, CELLS]
    reward_range = (0.0, 1.0)

    def sample_initial(self, rng):
        return START[0] * CELLS + START[1]

    def step(self, state, actions, rng):
        c0, c1 = divmod(state, CELLS)
        u = rng.random(2)
        t0 = _target(c0, actions[0])
        t1 = _target(c1, actions[1])
        n0 = t0 if u[0] < MOVE_OK else c0
        n1 = t1 if u[1] < MOVE_OK else c1
        r = 1.0 if n0 == n1 else 0.0
        return n0 * CELLS + n1, r, (n0, n1)


def _cell_kernel() -> np.ndarray:
    """K[c, a, c'] single-robot move distribution."""
    K = np.zeros((CELLS, 5, CELLS))
    for c in range(CELLS):
        for a in range(5):
            t = _target(c, a)
            K[c, a, t] += MOVE_OK
            K[c, a, c] += 1.0 - MOVE_OK
    return K


def build_model(horizon: int = 10) -> ExplicitModel:
    K = _cell_kernel()
    S = CELLS * CELLS
    JA = 25
    P = np.zeros((S, JA, S))
    O = np.zeros((S, JA, S))  # joint observation == next state, deterministically
    R = np.zeros((S, JA))
    for c0 in range(CELLS):
        for c1 in range(CELLS):
            s = c0 * CELLS + c1
            for a0 in range(5):
                for a1 in range(5):
                    ja = a0 * 5 + a1
                    dist = np.outer(K[c0, a0], K[c1, a1]).reshape(S)
                    P[s, ja] = dist
                    same = dist.reshape(CELLS, CELLS).diagonal().sum()
                    R[s, ja] = same
    for s2 in range(S):
        O[s2, :, s2] = 1.0  # each robot sees its own cell
    b0 = np.zeros(S)
    b0[START[0] * CELLS + START[1]] = 1.0
    return ExplicitModel(
        num_agents=2,
        num_states=S,
        action_counts=[5, 5],
        obs_counts=[CELLS, CELLS],
        transition=P,
        observation=O,
        reward=R,
        initial_belief=b0,
        horizon=horizon,
    )
