"""Cross-checks between the sampled estimators and the exact oracle.

Each check returns a small result record and is used both by the test
suite and by the `oracle` CLI subcommand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import exact_phi, exact_policy_value
from .improve import PhiMatrix, estimate_phi, solve_selection_lp
from .model import ExplicitModel, GenerativeSimulator, all_joint
from .policy import random_policy
from .rollout import hoeffding_epsilon, rollout_from_belief


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def lp_vertex_objective(values: np.ndarray) -> float:
    """Brute force over every per-row one-hot assignment."""
    best = -np.inf
    rows, cols = values.shape
    for combo in all_joint([cols] * rows):
        total = sum(values[r, c] for r, c in enumerate(combo))
        best = max(best, total)
    return best


def lp_vertex_check(trials: int = 100, shapes=((3, 3), (4, 4)), seed: int = 0,
                    tol: float = 1e-12) -> CheckResult:
    """Closed-form selection objective equals exhaustive vertex enumeration."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(trials):
        shape = shapes[k % len(shapes)]
        values = rng.normal(size=shape)
        phi = PhiMatrix(values=values, reached=np.ones(shape[0], dtype=bool))
        got = solve_selection_lp(phi).objective
        want = lp_vertex_objective(values)
        worst = max(worst, abs(got - want))
    return CheckResult(
        name="lp-vertex-optimality",
        passed=worst <= tol,
        detail=f"max |objective - enumeration| = {worst:.3e} over {trials} matrices",
    )


def rollout_coverage_check(model: ExplicitModel, sim: GenerativeSimulator,
                           horizon: int = 4, n_policies: int = 10, K: int = 10_000,
                           delta: float = 0.01, N: int = 3, seed: int = 0,
                           required: int = 9) -> CheckResult:
    """Rollout means land within the Hoeffding radius of exact values."""
    rng = np.random.default_rng(seed)
    lo, hi = sim.value_range(horizon)
    eps = hoeffding_epsilon(K, delta, hi - lo)
    b0 = model.b0()
    hits = 0
    errors = []
    for _ in range(n_policies):
        policy = random_policy(sim.num_agents, horizon, N, sim.action_counts,
                               sim.obs_counts, rng)
        nodes = (0,) * sim.num_agents
        exact = exact_policy_value(model, b0, policy, 1, nodes)
        est = rollout_from_belief(sim, 1, b0, nodes, policy, K, rng)
        err = abs(est.mean - exact)
        errors.append(err)
        hits += err <= eps
    return CheckResult(
        name="rollout-hoeffding-coverage",
        passed=hits >= required,
        detail=(
            f"{hits}/{n_policies} within eps={eps:.4f} "
            f"(max err {max(errors):.4f}, K={K}, delta={delta})"
        ),
    )


def phi_argmax_check(model: ExplicitModel, sim: GenerativeSimulator,
                     horizon: int = 4, K: int = 5000, delta: float = 0.05,
                     N: int = 3, seed: int = 0) -> CheckResult:
    """Sampled continuation-matrix row argmaxes agree with the exact matrix
    on every row whose exact top-two margin clears twice the Hoeffding radius."""
    rng = np.random.default_rng(seed)
    lo, hi = sim.value_range(horizon)
    eps = hoeffding_epsilon(K, delta, hi - lo)
    policy = random_policy(sim.num_agents, horizon, N, sim.action_counts,
                           sim.obs_counts, rng)
    b0 = model.b0()
    checked = agreed = 0
    for t in range(1, horizon):
        nodes = (0,) * sim.num_agents
        for agent in range(sim.num_agents):
            for action in range(sim.action_counts[agent]):
                exa = exact_phi(model, policy, t, b0, nodes, agent, action)
                est = estimate_phi(sim, policy, t, b0, nodes, agent, action, K, rng)
                for o in range(exa.values.shape[0]):
                    if not (exa.reached[o] and est.reached[o]):
                        continue
                    row = np.sort(exa.values[o])[::-1]
                    if len(row) < 2 or row[0] - row[1] <= 2 * eps:
                        continue
                    checked += 1
                    agreed += int(np.argmax(exa.values[o])) == int(np.argmax(est.values[o]))
    return CheckResult(
        name="phi-estimator-argmax",
        passed=checked == agreed and checked > 0,
        detail=f"{agreed}/{checked} well-separated rows agree (2*eps={2 * eps:.4f})",
    )


def run_all(model: ExplicitModel, sim: GenerativeSimulator, seed: int = 0) -> list[CheckResult]:
    return [
        lp_vertex_check(seed=seed),
        rollout_coverage_check(model, sim, seed=seed),
        phi_argmax_check(model, sim, seed=seed),
    ]
