import numpy as np
import pytest

from decrspi import HeuristicPortfolio, sample_beliefs, solve_underlying_mdp
from decrspi.heuristics import MdpGreedyHeuristic, RandomHeuristic

from conftest import zero_reward_model


def expectimax_q(model, horizon):
    """Independent oracle: recursive expectimax over the joint-action MDP."""

    def v(t, s):
        return max(q(t, s, ja) for ja in range(model.num_joint_actions))

    def q(t, s, ja):
        total = float(model.reward[s, ja])
        if t < horizon:
            for s2 in range(model.num_states):
                p = model.transition[s, ja, s2]
                if p > 0:
                    total += p * v(t + 1, s2)
        return total

    return q


def test_mdp_zero_reward(signalmatch):
    _, model = signalmatch
    q = solve_underlying_mdp(zero_reward_model(model), 3)
    assert np.all(q == 0.0)


def test_mdp_terminal_q_equals_reward(signalmatch):
    _, model = signalmatch
    q = solve_underlying_mdp(model, 2)
    assert q[1, 0, model.joint_action((0, 0))] == 1.0
    np.testing.assert_array_equal(q[1], model.reward)


def test_mdp_matches_expectimax(signalmatch):
    _, model = signalmatch
    horizon = 2
    q = solve_underlying_mdp(model, horizon)
    oracle = expectimax_q(model, horizon)
    for t in range(1, horizon + 1):
        for s in range(model.num_states):
            for ja in range(model.num_joint_actions):
                assert q[t - 1, s, ja] == pytest.approx(oracle(t, s, ja), abs=1e-12)


def test_mdp_requires_model():
    with pytest.raises(ValueError, match="model"):
        solve_underlying_mdp(None, 2)


def test_portfolio_random_only(signalmatch):
    sim, _ = signalmatch
    portfolio = HeuristicPortfolio(sim, model=None)
    rng = np.random.default_rng(0)
    assert all(portfolio.choose(rng).kind == "random" for _ in range(200))


def test_portfolio_mix_frequencies(signalmatch):
    sim, model = signalmatch
    portfolio = HeuristicPortfolio(sim, model, horizon=2)
    rng = np.random.default_rng(1)
    n = 100_000
    mdp = sum(portfolio.choose(rng).kind == "mdp-greedy" for _ in range(n))
    assert abs(mdp / n - 0.45) <= 0.01
    assert abs((n - mdp) / n - 0.55) <= 0.01


def test_portfolio_choice_is_seed_deterministic(signalmatch):
    sim, model = signalmatch
    portfolio = HeuristicPortfolio(sim, model, horizon=2)
    r1 = np.random.default_rng(9)
    r2 = np.random.default_rng(9)
    s1 = [portfolio.choose(r1).kind for _ in range(50)]
    s2 = [portfolio.choose(r2).kind for _ in range(50)]
    assert s1 == s2


def test_mdp_heuristic_tie_break_lowest_code(ring):
    sim, model = ring
    # on a zero-reward model every joint action ties; the lowest code wins
    flat = zero_reward_model(model)
    h = MdpGreedyHeuristic(flat, horizon=2)
    assert h.joint_action(1, 0, None) == (0, 0)
    assert h.joint_action(2, 3, None) == (0, 0)


def test_sample_beliefs_point_masses_on_deterministic_domain(ring):
    sim, model = ring
    portfolio = HeuristicPortfolio(sim, model, horizon=3)
    table = sample_beliefs(sim, portfolio, T=3, N=2, K=50, rng=np.random.default_rng(2))
    for t in range(1, 4):
        for n in range(2):
            b = table.get(t, n)
            assert list(b.states) == [(t - 1) % 4]
            assert b.probs[0] == 1.0


def test_sample_beliefs_first_layer_is_initial_draw(signalmatch):
    sim, model = signalmatch
    portfolio = HeuristicPortfolio(sim, model=None)
    K = 10_000
    table = sample_beliefs(sim, portfolio, T=2, N=1, K=K, rng=np.random.default_rng(3))
    b1 = table.get(1, 0)
    for s in range(2):
        sigma = np.sqrt(0.25 / K)
        assert abs(b1.prob(s) - 0.5) <= 4 * sigma


def test_sample_beliefs_matches_uniform_action_marginals(meetinggrid):
    sim, model = meetinggrid
    # oracle: powers of the joint-action-averaged transition kernel
    M = model.transition.mean(axis=1)
    marginals = [model.initial_belief]
    for _ in range(2):
        marginals.append(marginals[-1] @ M)
    K = 10_000
    portfolio = HeuristicPortfolio(sim, model=None)  # random heuristic only
    table = sample_beliefs(sim, portfolio, T=3, N=1, K=K, rng=np.random.default_rng(4))
    for t in range(1, 4):
        b = table.get(t, 0).to_dense(model.num_states)
        want = marginals[t - 1]
        sigma = np.sqrt(np.maximum(want * (1 - want), 1e-12) / K)
        assert np.all(np.abs(b - want) <= 4 * sigma + 1e-9)


def test_sample_beliefs_batches_are_independent(signalmatch):
    sim, _ = signalmatch
    portfolio = HeuristicPortfolio(sim, model=None)
    table = sample_beliefs(sim, portfolio, T=3, N=2, K=11, rng=np.random.default_rng(5))
    assert table.get(2, 0) != table.get(2, 1)  # no cross-batch mixing at this seed
    for t in range(1, 4):
        for n in range(2):
            b = table.get(t, n)
            assert b.probs.sum() == pytest.approx(1.0)
            # frequencies are multiples of 1/K: exactly K particles behind each
            assert np.allclose(b.probs * 11, np.round(b.probs * 11))


def test_sample_beliefs_particle_count_is_exactly_k(ring):
    sim, model = ring
    portfolio = HeuristicPortfolio(sim, model, horizon=2)
    table = sample_beliefs(sim, portfolio, T=2, N=3, K=7, rng=np.random.default_rng(6))
    for t in (1, 2):
        for n in range(3):
            probs = table.get(t, n).probs
            counts = probs * 7
            assert np.allclose(counts, np.round(counts))
            assert int(np.round(counts.sum())) == 7


def test_random_heuristic_covers_action_space():
    h = RandomHeuristic([2, 3])
    rng = np.random.default_rng(8)
    seen = {h.joint_action(1, 0, rng) for _ in range(500)}
    assert seen == {(a, b) for a in range(2) for b in range(3)}
