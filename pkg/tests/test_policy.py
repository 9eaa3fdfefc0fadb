import json

import numpy as np
import pytest

from decrspi import (
    deserialize_policy,
    next_node_distribution,
    random_policy,
    sample_next_nodes,
    serialize_policy,
)


def make_policy(seed=0, m=2, T=3, N=3, actions=(2, 2), obs=(2, 2)):
    return random_policy(m, T, N, list(actions), list(obs), np.random.default_rng(seed))


def test_single_node_rows_are_unit():
    policy = make_policy(N=1)
    for pol in policy.agents:
        assert np.all(pol.selections == 1.0)


def test_node_count_is_m_T_N():
    policy = make_policy(m=2, T=3, N=3)
    assert policy.node_count() == 2 * 3 * 3
    total = sum(p.actions.size for p in policy.agents)
    assert total == 18


def test_random_policy_seed_determinism():
    a = make_policy(seed=42)
    b = make_policy(seed=42)
    for pa, pb in zip(a.agents, b.agents):
        assert np.array_equal(pa.actions, pb.actions)
        assert np.array_equal(pa.selections, pb.selections)


def test_random_policy_rows_on_simplex():
    policy = make_policy(seed=1, T=5, N=4, obs=(3, 5))
    for pol in policy.agents:
        sums = pol.selections.sum(axis=-1)
        assert np.allclose(sums, 1.0, atol=1e-9)
        assert np.all(pol.selections >= 0.0)


def test_next_node_distribution_reads_stored_row():
    policy = make_policy(seed=2)
    row = next_node_distribution(policy, 0, 1, 2, 1)
    assert np.array_equal(row, policy.agents[0].selections[0, 2, 1])


def test_next_node_distribution_one_hot_and_uniform():
    policy = make_policy(seed=3)
    policy.agents[0].selections[0, 0, 0] = [0.0, 1.0, 0.0]
    assert np.array_equal(next_node_distribution(policy, 0, 1, 0, 0), [0, 1, 0])
    policy.agents[0].selections[0, 0, 1] = [1 / 3] * 3
    np.testing.assert_allclose(next_node_distribution(policy, 0, 1, 0, 1), [1 / 3] * 3)


def test_next_node_distribution_last_layer_errors():
    policy = make_policy()
    with pytest.raises(ValueError, match="no successor layer"):
        next_node_distribution(policy, 0, policy.T, 0, 0)
    with pytest.raises(ValueError, match="no successor layer"):
        sample_next_nodes(policy, policy.T, (0, 0), (0, 0), np.random.default_rng(0))


def test_sample_next_nodes_one_hot_deterministic():
    policy = make_policy(seed=4)
    for pol in policy.agents:
        pol.selections[:] = 0.0
        pol.selections[..., 1] = 1.0
    rng = np.random.default_rng(5)
    assert sample_next_nodes(policy, 1, (0, 0), (1, 0), rng) == (1, 1)


def test_sample_next_nodes_factorizes():
    policy = make_policy(seed=6, N=2)
    rng = np.random.default_rng(7)
    row0 = policy.agents[0].selections[0, 0, 0]
    row1 = policy.agents[1].selections[0, 0, 1]
    n = 100_000
    counts = np.zeros((2, 2))
    for _ in range(n):
        j = sample_next_nodes(policy, 1, (0, 0), (0, 1), rng)
        counts[j] += 1
    for a in range(2):
        for b in range(2):
            want = row0[a] * row1[b]
            assert abs(counts[a, b] / n - want) <= 0.01


def test_sample_next_nodes_uniform_quarter():
    policy = make_policy(seed=8, N=2)
    for pol in policy.agents:
        pol.selections[:] = 0.5
    rng = np.random.default_rng(9)
    n = 100_000
    counts = np.zeros((2, 2))
    for _ in range(n):
        counts[sample_next_nodes(policy, 1, (1, 1), (0, 0), rng)] += 1
    assert np.all(np.abs(counts / n - 0.25) <= 0.01)


def test_serialize_round_trip_exact():
    policy = make_policy(seed=10, T=4, N=3, actions=(3, 2), obs=(2, 4))
    policy.start_node = 2
    text = serialize_policy(policy, domain="signalmatch", seed=10)
    loaded = deserialize_policy(text)
    assert loaded.T == policy.T and loaded.N == policy.N
    assert loaded.start_node == 2
    for pa, pb in zip(policy.agents, loaded.agents):
        assert np.array_equal(pa.actions, pb.actions)
        assert np.array_equal(pa.selections, pb.selections)


def test_deserialize_rejects_bad_row_sum():
    policy = make_policy(seed=11)
    doc = json.loads(serialize_policy(policy))
    doc["agents"][0]["layers"][0]["nodes"][0]["selection"][0] = [0.25, 0.25, 0.0]
    with pytest.raises(ValueError, match="sums to"):
        deserialize_policy(json.dumps(doc))


def test_deserialize_renormalizes_within_tolerance():
    policy = make_policy(seed=12)
    doc = json.loads(serialize_policy(policy))
    row = [0.5, 0.5 + 1e-7, 0.0]
    doc["agents"][0]["layers"][0]["nodes"][0]["selection"][0] = row
    loaded = deserialize_policy(json.dumps(doc))
    got = loaded.agents[0].selections[0, 0, 0]
    assert got.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(got, np.array(row) / sum(row), atol=1e-12)


def test_deserialize_rejects_malformed_document():
    with pytest.raises(ValueError, match="malformed"):
        deserialize_policy("{not json")
    with pytest.raises(ValueError, match="missing field"):
        deserialize_policy(json.dumps({"T": 2}))
