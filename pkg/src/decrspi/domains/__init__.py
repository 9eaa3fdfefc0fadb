"""Benchmark domain registry.

Domains are selected by name: "signalmatch", "meetinggrid", "dsn". Each
provides a generative simulator; the two small domains (and the smallest
sensor-network geometries) also provide an explicit tabular model for the
exact oracle and the MDP heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import ExplicitModel, GenerativeSimulator
from . import dsn, meetinggrid, signalmatch

DEFAULT_HORIZONS = {"signalmatch": 4, "meetinggrid": 10, "dsn": 10}
DEFAULT_DSN_AGENTS = 20


@dataclass
class DomainSpec:
    """Domain name plus its settings.

    agents and targets only apply to the sensor network: agents is the
    total sensor count (two chains, so it must be even and at least 4).
    """

    name: str
    horizon: int | None = None
    agents: int | None = None
    targets: int = 2

    def __post_init__(self):
        if self.name not in DEFAULT_HORIZONS:
            raise ValueError(f"unknown domain {self.name!r}")
        if self.horizon is None:
            self.horizon = DEFAULT_HORIZONS[self.name]
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.name == "dsn":
            if self.agents is None:
                self.agents = DEFAULT_DSN_AGENTS
            if self.agents % 2 != 0 or self.agents < 4:
                raise ValueError("dsn needs an even agent count >= 4")
            if self.targets < 1:
                raise ValueError("dsn needs at least 1 target")
        elif self.agents is not None and self.agents != 2:
            raise ValueError(f"{self.name} is a 2-agent domain")


def make_domain(spec: DomainSpec) -> tuple[GenerativeSimulator, ExplicitModel | None]:
    """Build the simulator and, where tractable, the explicit model."""
    if spec.name == "signalmatch":
        return signalmatch.SignalMatchSimulator(), signalmatch.build_model(spec.horizon)
    if spec.name == "meetinggrid":
        return meetinggrid.MeetingGridSimulator(), meetinggrid.build_model(spec.horizon)
    sim = dsn.DsnSimulator(spec.agents // 2, spec.targets)
    try:
        model = dsn.build_model(sim, spec.horizon)
    except ValueError:
        model = None
    return sim, model
