import numpy as np
import pytest

from decrspi import (
    Belief,
    brute_force_optimal,
    exact_phi,
    exact_policy_value,
    exact_tree_value,
    expected_reward,
    random_policy,
)
from decrspi.exact import OracleBudgetError, count_trees, enumerate_trees, induced_trees
from decrspi.model import all_joint

from conftest import zero_reward_model


def enumerate_policy_value(model, policy, t, state, nodes):
    """Independent oracle: plain recursion over every (state, observation,
    node-tuple) branch of the trajectory tree. No memoization, no tensors."""
    ja = model.joint_action(policy.joint_action(t, nodes))
    value = float(model.reward[state, ja])
    if t == policy.T:
        return value
    N = policy.N
    for s2 in range(model.num_states):
        p_s = model.transition[state, ja, s2]
        if p_s == 0:
            continue
        for jo in range(model.num_joint_obs):
            p_o = model.observation[s2, ja, jo]
            if p_o == 0:
                continue
            obs = model.split_obs(jo)
            for nxt in all_joint([N] * policy.num_agents):
                p_q = 1.0
                for i in range(policy.num_agents):
                    p_q *= policy.agents[i].selections[t - 1, nodes[i], obs[i], nxt[i]]
                if p_q == 0:
                    continue
                value += p_s * p_o * p_q * enumerate_policy_value(
                    model, policy, t + 1, s2, nxt
                )
    return value


def enumerate_tree_value(model, state, trees):
    """Independent oracle for deterministic trees: direct branch summation."""
    actions = tuple(tr[0] for tr in trees)
    ja = model.joint_action(actions)
    value = float(model.reward[state, ja])
    if not trees[0][1]:
        return value
    for s2 in range(model.num_states):
        for jo in range(model.num_joint_obs):
            p = model.transition[state, ja, s2] * model.observation[s2, ja, jo]
            if p == 0:
                continue
            obs = model.split_obs(jo)
            sub = tuple(tr[1][o] for tr, o in zip(trees, obs))
            value += p * enumerate_tree_value(model, state=s2, trees=sub)
    return value


def make_policy(model, T, N, seed):
    return random_policy(model.num_agents, T, N, model.action_counts,
                         model.obs_counts, np.random.default_rng(seed))


def one_hot_policy(policy, rng):
    for pol in policy.agents:
        for idx in np.ndindex(pol.selections.shape[:-1]):
            pol.selections[idx] = 0.0
            pol.selections[idx][int(rng.integers(policy.N))] = 1.0
    return policy


# -- exact_policy_value --------------------------------------------------------


def test_value_base_case_is_expected_reward(signalmatch):
    _, model = signalmatch
    policy = make_policy(model, T=3, N=2, seed=0)
    b = Belief.from_dense([0.3, 0.7])
    for nodes in all_joint([2, 2]):
        actions = policy.joint_action(3, nodes)
        got = exact_policy_value(model, b, policy, 3, nodes)
        assert got == pytest.approx(expected_reward(model, b, actions), abs=1e-12)


def test_value_one_hot_equals_tree_value(signalmatch):
    _, model = signalmatch
    policy = one_hot_policy(make_policy(model, T=3, N=3, seed=1), np.random.default_rng(2))
    trees = induced_trees(policy, (0, 0))
    b = model.b0()
    tree_val = sum(p * exact_tree_value(model, int(s), trees)
                   for s, p in zip(b.states, b.probs))
    got = exact_policy_value(model, b, policy, 1, (0, 0))
    assert got == pytest.approx(tree_val, abs=1e-12)


def test_value_matches_trajectory_enumeration(signalmatch):
    _, model = signalmatch
    policy = make_policy(model, T=2, N=3, seed=3)
    b = model.b0()
    want = sum(p * enumerate_policy_value(model, policy, 1, int(s), (1, 2))
               for s, p in zip(b.states, b.probs))
    got = exact_policy_value(model, b, policy, 1, (1, 2))
    assert got == pytest.approx(want, abs=1e-10)


def test_value_matches_enumeration_on_ring(ring):
    _, model = ring
    policy = make_policy(model, T=3, N=2, seed=4)
    b = Belief.point_mass(2)
    want = enumerate_policy_value(model, policy, 1, 2, (0, 1))
    got = exact_policy_value(model, b, policy, 1, (0, 1))
    assert got == pytest.approx(want, abs=1e-10)


def test_value_requires_model(signalmatch):
    _, model = signalmatch
    policy = make_policy(model, T=2, N=2, seed=5)
    with pytest.raises(ValueError, match="model"):
        exact_policy_value(None, model.b0(), policy, 1, (0, 0))


def test_value_budget_is_hard_error(signalmatch):
    _, model = signalmatch
    policy = make_policy(model, T=4, N=3, seed=6)
    with pytest.raises(OracleBudgetError):
        exact_policy_value(model, model.b0(), policy, 1, (0, 0), budget=10)


# -- exact_tree_value ----------------------------------------------------------


def test_tree_depth_one_is_reward(signalmatch):
    _, model = signalmatch
    for s in range(2):
        for a0 in range(2):
            for a1 in range(2):
                trees = ((a0, ()), (a1, ()))
                assert exact_tree_value(model, s, trees) == model.reward[
                    s, model.joint_action((a0, a1))
                ]


def test_tree_value_zero_model(signalmatch):
    _, model = signalmatch
    zero = zero_reward_model(model)
    trees = enumerate_trees(2, 2, 3)
    assert exact_tree_value(zero, 0, (trees[0], trees[-1])) == 0.0


def test_tree_value_depth2_matches_enumeration(signalmatch):
    _, model = signalmatch
    t0 = (0, ((0, ()), (1, ())))
    t1 = (1, ((1, ()), (0, ())))
    for s in range(2):
        want = enumerate_tree_value(model, s, (t0, t1))
        assert exact_tree_value(model, s, (t0, t1)) == pytest.approx(want, abs=1e-12)


# -- exact_phi -----------------------------------------------------------------


def test_phi_zero_terminal_rewards(signalmatch):
    _, model = signalmatch
    zero = zero_reward_model(model)
    policy = make_policy(model, T=2, N=3, seed=7)
    phi = exact_phi(zero, policy, 1, zero.b0(), (0, 0), agent=0, action=1)
    assert np.all(phi.values == 0.0)


def test_phi_single_column(signalmatch):
    _, model = signalmatch
    policy = make_policy(model, T=2, N=1, seed=8)
    b = model.b0()
    phi = exact_phi(model, policy, 1, b, (0, 0), agent=0, action=0)
    assert phi.values.shape == (2, 1)
    # direct sum: Phi(o_i) = sum_{s', o_-i} Pr(s', o | b, a) V_T(s', (0, 0))
    acts = (0, policy.agents[1].action(1, 0))
    ja = model.joint_action(acts)
    nxt_ja = model.joint_action(policy.joint_action(2, (0, 0)))
    want = np.zeros(2)
    dense = b.to_dense(2)
    for s in range(2):
        for s2 in range(2):
            for jo in range(4):
                o = model.split_obs(jo)
                pr = dense[s] * model.transition[s, ja, s2] * model.observation[s2, ja, jo]
                want[o[0]] += pr * model.reward[s2, nxt_ja]
    np.testing.assert_allclose(phi.values[:, 0], want, atol=1e-12)


def test_phi_consistency_with_value_recursion(signalmatch):
    # weighting the matrix by any row-stochastic x reproduces the value
    # recursion's continuation term once x is installed as the agent's row
    _, model = signalmatch
    rng = np.random.default_rng(9)
    policy = make_policy(model, T=3, N=3, seed=10)
    b = Belief.from_dense([0.4, 0.6])
    for t in (1, 2):
        for agent in (0, 1):
            action = int(rng.integers(2))
            nodes = (1, 1)
            phi = exact_phi(model, policy, t, b, nodes, agent, action)
            x = rng.dirichlet(np.ones(3), size=2)
            saved_action, saved_sel = policy.get_node(agent, t, nodes[agent])
            policy.set_node(agent, t, nodes[agent], action, x)
            total = exact_policy_value(model, b, policy, t, nodes)
            policy.set_node(agent, t, nodes[agent], saved_action, saved_sel)
            immediate = expected_reward(
                model, b,
                tuple(action if i == agent else policy.agents[i].action(t, nodes[i])
                      for i in range(2)),
            )
            assert total - immediate == pytest.approx(float(np.sum(phi.values * x)),
                                                      abs=1e-9)


# -- brute force search ----------------------------------------------------------


def test_brute_force_horizon_one(signalmatch):
    _, model = signalmatch
    value, trees = brute_force_optimal(model, 1)
    want = max(expected_reward(model, model.b0(), a) for a in all_joint([2, 2]))
    assert want == 0.5
    assert value == pytest.approx(0.5)
    assert trees[0][1] == () and trees[1][1] == ()


def test_brute_force_zero_model(signalmatch):
    _, model = signalmatch
    value, _ = brute_force_optimal(zero_reward_model(model), 2)
    assert value == 0.0


def test_brute_force_signalmatch_t2_pinned(signalmatch):
    # oracle run first; the optimum is the always-agree pair of trees
    _, model = signalmatch
    value, trees = brute_force_optimal(model, 2)
    assert value == pytest.approx(1.0, abs=1e-12)


def test_brute_force_budget(meetinggrid):
    _, model = meetinggrid
    with pytest.raises(OracleBudgetError):
        brute_force_optimal(model, 3)


def test_brute_force_dominates_stochastic_policies(signalmatch):
    _, model = signalmatch
    opt, _ = brute_force_optimal(model, 2)
    b = model.b0()
    for seed in range(100):
        policy = make_policy(model, T=2, N=3, seed=100 + seed)
        v = exact_policy_value(model, b, policy, 1, (0, 0))
        assert v <= opt + 1e-9


def test_count_trees():
    assert count_trees(2, 2, 1) == 2
    assert count_trees(2, 2, 2) == 2 * 2**2
    assert len(enumerate_trees(2, 2, 2)) == 8
