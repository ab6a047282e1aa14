"""Batch execution: placement, seeded runs, and result export.

Each run gets its own seed (base_seed + run index) and is fully independent,
so runs can execute in any order or in parallel without changing a byte of
the output.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .arena import ArenaSpec
from .decentralized import make_controller
from .metrics import (
    RunRecord,
    block_uniformities,
    cpr,
    lcu,
    summarize,
    tcu,
)
from .sons import make_sons_controller
from .world import AgentState, SimConfig, World, agent_stream, harness_stream

STRATEGIES = ("rb", "ldr_random", "ldr_repulsive", "pm", "sons_bs", "sons_rw")
DECENTRALIZED = ("rb", "ldr_random", "ldr_repulsive", "pm")


@dataclass(frozen=True)
class PlacementSpec:
    """Start box for decentralized swarms: a strip inside the southern boundary."""

    width: float = 20.0  # m, along the boundary
    depth: float = 3.0  # m, into the arena
    min_spacing: float = 1.5  # m, pairwise
    max_rejects: int = 100_000
    stall_rejects: int = 2_000  # consecutive rejects before scrapping the layout


def place_decentralized(
    spec: PlacementSpec, n: int, arena: ArenaSpec, cfg: SimConfig, rng
) -> list[AgentState]:
    """Scatter n agents in the start box with interior-facing headings.

    Positions are rejection-sampled uniformly subject to the pairwise
    spacing; headings are uniform in [0, 180] degrees measured from east, so
    every agent faces into the arena. Deterministic for a given stream.

    Sequential dart-throwing jams well below the theoretical capacity, so a
    layout that stalls is scrapped and redrawn; only the global reject budget
    makes the placement fail.
    """
    sep = spec.min_spacing / math.sqrt(2.0)
    capacity = (math.floor(spec.width / sep) + 1) * (math.floor(spec.depth / sep) + 1)
    if n > capacity:
        raise RuntimeError("placement infeasible")
    cx = arena.center[0]
    y0 = arena.min_corner[1]
    x_lo, x_hi = cx - spec.width / 2.0, cx + spec.width / 2.0
    y_lo, y_hi = y0, y0 + spec.depth
    spacing2 = spec.min_spacing * spec.min_spacing
    points: list[tuple[float, float]] = []
    rejects = 0
    stall = 0
    while len(points) < n:
        x = rng.uniform(x_lo, x_hi)
        y = rng.uniform(y_lo, y_hi)
        if all((x - px) ** 2 + (y - py) ** 2 >= spacing2 for px, py in points):
            points.append((x, y))
            stall = 0
        else:
            rejects += 1
            stall += 1
            if rejects > spec.max_rejects:
                raise RuntimeError("placement infeasible")
            if stall >= spec.stall_rejects:
                points.clear()
                stall = 0
    agents = []
    for i, (x, y) in enumerate(points):
        agents.append(
            AgentState(
                id=i,
                position=(x, y),
                heading=rng.uniform(0.0, math.pi),
                altitude=cfg.sampling_altitude,
            )
        )
    return agents


@dataclass
class ExperimentConfig:
    """One strategy's batch: how many runs, where, and with what world."""

    strategy: str
    runs: int = 30
    base_seed: int = 1
    arena: ArenaSpec = field(default_factory=ArenaSpec)
    n_uavs: int = 25
    sim: SimConfig = field(default_factory=SimConfig)
    output_dir: str = "results"
    placement: PlacementSpec = field(default_factory=PlacementSpec)
    heatmaps: bool = False
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy: {self.strategy}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.n_uavs < 1:
            raise ValueError("n_uavs must be at least 1")

    def split_roles(self) -> tuple[int, int]:
        """Supervisor/sampler split for the hierarchy strategies (1:4 of the swarm)."""
        supervisors = max(1, self.n_uavs // 5)
        samplers = self.n_uavs - supervisors
        if samplers < 1:
            raise ValueError("n_uavs leaves no samplers")
        return supervisors, samplers


def build_world(config: ExperimentConfig, seed: int, collect_events: bool = False) -> World:
    """Assemble one seeded, ready-to-run world for the configured strategy."""
    sim = config.sim.with_seed(seed)
    if config.strategy in DECENTRALIZED:
        agents = place_decentralized(
            config.placement, config.n_uavs, config.arena, sim, harness_stream(seed)
        )
        for agent in agents:
            agent.rng = agent_stream(seed, agent.id)
        controller, pheromone = make_controller(
            config.strategy, agents, config.arena, collect_events=collect_events
        )
        return World(config.arena, sim, agents, controller, pheromone=pheromone)
    supervisors, samplers = config.split_roles()
    variant = "bs" if config.strategy == "sons_bs" else "rw"
    agents, controller = make_sons_controller(variant, config.arena, sim, supervisors, samplers)
    return World(config.arena, sim, agents, controller)


def run_single(config: ExperimentConfig, seed: int) -> RunRecord:
    return build_world(config, seed).run()


def _run_index(args: tuple[ExperimentConfig, int]) -> RunRecord:
    config, index = args
    return run_single(config, config.base_seed + index)


def run_experiment(config: ExperimentConfig) -> tuple[list[RunRecord], "object"]:
    """Execute the batch and return (records, summary), in run-index order."""
    tasks = [(config, i) for i in range(config.runs)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_run_index, tasks))
    else:
        records = [_run_index(t) for t in tasks]
    return records, summarize(records, config.arena)


# -- export -------------------------------------------------------------------


def _fmt(value: float) -> str:
    """Serialize a float with 9 significant digits."""
    return f"{value:.9g}"


def _round9(value):
    if isinstance(value, float):
        return float(_fmt(value))
    return value


def _config_echo(config: ExperimentConfig) -> dict:
    echo = {
        "strategy": config.strategy,
        "runs": config.runs,
        "base_seed": config.base_seed,
        "n_uavs": config.n_uavs,
        "output_dir": str(config.output_dir),
        "heatmaps": config.heatmaps,
        "jobs": config.jobs,
        "arena": asdict(config.arena),
        "sim": asdict(config.sim),
        "placement": asdict(config.placement),
    }
    echo["arena"]["center"] = list(config.arena.center)
    return echo


def _summary_payload(summary) -> dict:
    payload = {}
    for key, value in asdict(summary).items():
        payload[key] = _round9(value)
    return payload


def export(
    records: list[RunRecord],
    summaries,
    out_dir,
    config: ExperimentConfig,
) -> list[Path]:
    """Write summary.json, runs.csv, cpr.csv, and optional per-run heatmaps.

    All floats carry 9 significant digits; CSV files use commas, LF line
    endings, and UTF-8. Incomplete runs appear in runs.csv with "incomplete"
    in the cct column and empty metric fields.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    arena = config.arena

    if not isinstance(summaries, (list, tuple)):
        summaries = [summaries]
    summary_doc = {
        "config": _config_echo(config),
        "strategies": {s.strategy: _summary_payload(s) for s in summaries},
    }
    path = out / "summary.json"
    path.write_text(json.dumps(summary_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(path)

    per_side = round(arena.side_length / arena.region_size)
    n_blocks = per_side * per_side
    lines = [
        "strategy,seed,cct,tcu,lcu," + ",".join(f"block_{i:02d}" for i in range(n_blocks))
    ]
    for record in records:
        if record.complete:
            blocks = block_uniformities(record, arena)
            row = [
                record.strategy,
                str(record.seed),
                str(record.cct),
                _fmt(tcu(record)),
                _fmt(lcu(record, arena)),
            ] + [_fmt(b) for b in blocks]
        else:
            row = [record.strategy, str(record.seed), "incomplete", "", ""] + [""] * n_blocks
        lines.append(",".join(row))
    path = out / "runs.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(path)

    series = cpr(records)
    lines = ["step,mean_coverage_fraction"]
    for i, value in enumerate(series, start=1):
        lines.append(f"{i},{_fmt(value)}")
    path = out / "cpr.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(path)

    if config.heatmaps:
        for index, record in enumerate(records):
            grid = record.final_visits.reshape(arena.rows, arena.cols)
            lines = [f"{arena.cols},{arena.rows},{_fmt(arena.cell_size)}"]
            for row in grid:
                lines.append(",".join(str(int(v)) for v in row))
            path = out / f"heatmap_{index:03d}.csv"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)
    return written
