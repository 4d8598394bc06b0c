"""Deterministic discrete-event simulation of regions, vehicles and an open-channel adversary."""

from vfcauth.simnet.adversary import AdversaryAction, AdversaryError, Selector, load_script
from vfcauth.simnet.config import ConfigError, ScenarioConfig
from vfcauth.simnet.trace import EventTrace
from vfcauth.simnet.world import (
    NetMessage,
    Region,
    SimulationError,
    World,
    build_world,
    chain_from_trace,
    inject_adversary,
    move_vehicle,
    run_until,
)

__all__ = [
    "AdversaryAction", "AdversaryError", "Selector", "load_script", "ConfigError", "ScenarioConfig",
    "EventTrace", "NetMessage", "Region", "SimulationError", "World", "build_world",
    "chain_from_trace", "inject_adversary", "move_vehicle", "run_until",
]
