import numpy as np
import pytest

from decrspi import DomainSpec, ExplicitModel, ExplicitSimulator, make_domain


@pytest.fixture(scope="session")
def signalmatch():
    """(sim, model) at the default horizon."""
    return make_domain(DomainSpec("signalmatch", horizon=4))


@pytest.fixture(scope="session")
def meetinggrid():
    return make_domain(DomainSpec("meetinggrid", horizon=5))


@pytest.fixture(scope="session")
def dsn4():
    """Smallest sensor network (4 agents, one cell); has an explicit model."""
    return make_domain(DomainSpec("dsn", agents=4, horizon=5))


def zero_reward_model(model: ExplicitModel) -> ExplicitModel:
    return ExplicitModel(
        num_agents=model.num_agents,
        num_states=model.num_states,
        action_counts=list(model.action_counts),
        obs_counts=list(model.obs_counts),
        transition=model.transition.copy(),
        observation=model.observation.copy(),
        reward=np.zeros_like(model.reward),
        initial_belief=model.initial_belief.copy(),
        horizon=model.horizon,
    )


def ring_model(num_states: int = 4, horizon: int = 3) -> ExplicitModel:
    """Fully deterministic 2-agent domain: the state cycles s -> s+1 mod S
    regardless of actions, each agent observes the next state's parity, and
    the reward is a distinct constant per (state, joint action)."""
    S = num_states
    JA = 4
    P = np.zeros((S, JA, S))
    O = np.zeros((S, JA, 4))
    R = np.zeros((S, JA))
    for s in range(S):
        P[s, :, (s + 1) % S] = 1.0
        for ja in range(JA):
            R[s, ja] = s + 0.1 * ja
    for s2 in range(S):
        parity = s2 % 2
        O[s2, :, parity * 2 + parity] = 1.0
    b0 = np.zeros(S)
    b0[0] = 1.0
    return ExplicitModel(
        num_agents=2,
        num_states=S,
        action_counts=[2, 2],
        obs_counts=[2, 2],
        transition=P,
        observation=O,
        reward=R,
        initial_belief=b0,
        horizon=horizon,
    )


@pytest.fixture()
def ring():
    model = ring_model()
    return ExplicitSimulator(model), model
