"""Deterministic simulator for a cooperative-transmission duty-cycle MAC."""

__version__ = "0.1.0"

from .energy import (Battery, RadioEnergyParams, crossover_distance, drain,
                     idle_energy, rx_energy, sleep_energy, tx_energy)
from .selection import (CandidateRecord, CtRequest, ElectedList, WiLemStation,
                        elect_helpers, filter_candidates, leader_helper)
from .channel import AirTransmission, ct_reach, in_reach, resolve_slot
from .mac import (DutySchedule, MacState, Packet, Phase, Superframe,
                  build_schedules, compose_superframe, on_superframe,
                  reserve_noct, step)
from .config import ConfigError, ScenarioConfig, parse_config
from .engine import Metrics, Simulator, run

__all__ = [
    "Battery", "RadioEnergyParams", "crossover_distance", "drain",
    "idle_energy", "rx_energy", "sleep_energy", "tx_energy",
    "CandidateRecord", "CtRequest", "ElectedList", "WiLemStation",
    "elect_helpers", "filter_candidates", "leader_helper",
    "AirTransmission", "ct_reach", "in_reach", "resolve_slot",
    "DutySchedule", "MacState", "Packet", "Phase", "Superframe",
    "build_schedules", "compose_superframe", "on_superframe", "reserve_noct", "step",
    "ConfigError", "ScenarioConfig", "parse_config",
    "Metrics", "Simulator", "run",
]
