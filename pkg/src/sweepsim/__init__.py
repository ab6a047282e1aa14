"""Deterministic multi-UAV sweep-coverage simulator and benchmark harness."""

from .arena import ArenaSpec, BoundaryProbe, CoverageGrid, boundary_probe, cell_of
from .harness import (
    DECENTRALIZED,
    STRATEGIES,
    ExperimentConfig,
    PlacementSpec,
    build_world,
    export,
    place_decentralized,
    run_experiment,
    run_single,
)
from .metrics import RunRecord, StrategySummary, cpr, lcu, summarize, tcu, uniformity
from .world import AgentState, SimConfig, World, agent_stream, harness_stream

__all__ = [
    "AgentState",
    "ArenaSpec",
    "BoundaryProbe",
    "CoverageGrid",
    "DECENTRALIZED",
    "ExperimentConfig",
    "PlacementSpec",
    "RunRecord",
    "STRATEGIES",
    "SimConfig",
    "StrategySummary",
    "World",
    "agent_stream",
    "boundary_probe",
    "build_world",
    "cell_of",
    "cpr",
    "export",
    "harness_stream",
    "lcu",
    "place_decentralized",
    "run_experiment",
    "run_single",
    "summarize",
    "tcu",
    "uniformity",
]
