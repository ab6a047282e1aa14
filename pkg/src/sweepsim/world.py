"""Agent state, kinematics, seeded randomness, and the synchronous step loop.

One step runs fixed phases for the whole swarm: sense and exchange messages
against the previous step's state, compute commands, integrate motion, score
visits, update pheromone, advance the clock. Agents are handled in ascending
id order inside every phase, so a run is a pure function of its config and
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Protocol, Sequence

import numpy as np

from .angles import TWO_PI, wrap_angle
from .arena import ArenaSpec, Cell, CoverageGrid, cell_of

SPEED_EPS = 1e-9

# Sentinel previous-cell marker: the first step of a run always counts as
# entering whatever cell the agent ends it in.
_RUN_START = ("start",)


@dataclass
class SimConfig:
    """Step size, speed/altitude envelope, and the run-level seed.

    turn_rate_default is the in-place yaw rate for individually turning
    agents (and the random-walk brain's reorientation spins); 30 deg/s keeps
    turn costs in a realistic proportion to traverse times for a small
    quadrotor holding position.
    """

    dt: float = 0.1
    target_sampling_velocity: float = 1.0
    sampling_altitude: float = 1.5
    supervisory_altitude: float = 4.0
    comm_range_max: float = 10.0
    max_steps: int = 60_000
    seed: int = 0
    turn_rate_default: float = math.pi / 6.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.target_sampling_velocity <= 0:
            raise ValueError("target_sampling_velocity must be positive")

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)


def agent_stream(seed: int, agent_id: int) -> np.random.Generator:
    """Per-agent random stream, split from (run seed, agent id).

    Streams do not depend on how many agents exist or the order they are
    polled, so adding agents never perturbs existing ones.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, agent_id)))


def harness_stream(seed: int) -> np.random.Generator:
    """Run-level stream for initial placement, disjoint from agent streams."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


@dataclass
class AgentState:
    """Pose and sampling status of one UAV.

    Position is unbounded; only the grid is bounded. speed is the magnitude
    actually flown this step, which is what gates visit scoring.
    """

    id: int
    position: tuple[float, float]
    heading: float
    altitude: float
    speed: float = 0.0
    mode: str = "cruise"
    sampling_active: bool = True
    rng: np.random.Generator | None = None
    prev_cell: object = _RUN_START

    def __post_init__(self) -> None:
        self.heading = wrap_angle(self.heading)


class Unicycle(NamedTuple):
    """Turn-then-translate command integrated by the world."""

    linear_speed: float
    angular_rate: float


class PoseTarget(NamedTuple):
    """Direct pose assignment for servo-perfect formation followers."""

    x: float
    y: float
    heading: float


Motion = Unicycle | PoseTarget

HOLD = Unicycle(0.0, 0.0)


def step_kinematics(agent: AgentState, command: Unicycle, dt: float) -> None:
    """Integrate one unicycle step in place: heading first, then position."""
    if command.linear_speed < 0:
        raise ValueError("linear_speed must be non-negative")
    heading = wrap_angle(agent.heading + command.angular_rate * dt)
    x, y = agent.position
    v = command.linear_speed
    agent.position = (x + v * dt * math.cos(heading), y + v * dt * math.sin(heading))
    agent.heading = heading
    agent.speed = v


def record_visit(agent: AgentState, grid: CoverageGrid, cfg: SimConfig) -> Cell | None:
    """Score the cell the agent ended this step in, entry-gated.

    A visit requires entering a new cell (or the run's first step) inside the
    arena with sampling active, at sampling altitude, at or under the target
    velocity. Returns the credited cell, or None.
    """
    cell = cell_of(agent.position, grid.arena)
    entered = cell != agent.prev_cell
    agent.prev_cell = cell
    if (
        entered
        and cell is not None
        and agent.sampling_active
        and agent.altitude == cfg.sampling_altitude
        and agent.speed <= cfg.target_sampling_velocity + SPEED_EPS
    ):
        grid.record(cell)
        return cell
    return None


def neighbors_within(
    agents: Sequence[AgentState], self_id: int, comm_range: float, cfg: SimConfig
) -> list[tuple[int, tuple[float, float]]]:
    """Other agents on the same altitude plane within horizontal range.

    Positions come back in the querying agent's frame. Delivery is
    synchronous, reliable, and symmetric inside one step.
    """
    if comm_range > cfg.comm_range_max:
        raise ValueError("requested range exceeds comm_range_max")
    me = next(a for a in agents if a.id == self_id)
    x, y = me.position
    out = []
    for other in agents:
        if other.id == self_id or other.altitude != me.altitude:
            continue
        dx = other.position[0] - x
        dy = other.position[1] - y
        if math.hypot(dx, dy) <= comm_range:
            out.append((other.id, (dx, dy)))
    return out


class Controller(Protocol):
    """Strategy plug-in: senses the pre-step world and commands every agent."""

    clamp_to_arena: bool

    def decide(self, world: "World") -> list[Motion]: ...


class World:
    """One seeded run: agents, grid, optional pheromone, and the step loop."""

    def __init__(
        self,
        arena: ArenaSpec,
        cfg: SimConfig,
        agents: Sequence[AgentState],
        controller: Controller | None = None,
        pheromone=None,
    ):
        self.arena = arena
        self.cfg = cfg
        self.agents = sorted(agents, key=lambda a: a.id)
        self.controller = controller
        self.grid = CoverageGrid(arena)
        self.pheromone = pheromone
        self.step_count = 0
        self.clamp_count = 0
        self.visit_events: list[tuple[int, Cell]] = []
        self._minx, self._miny = arena.min_corner
        self._maxx, self._maxy = arena.max_corner
        self._inv_cell = 1.0 / arena.cell_size

    def step(self) -> None:
        """Advance the whole swarm by one synchronous round.

        The motion/visit handling is a fused, constant-cached rendering of
        step_kinematics and record_visit; the unit suite pins the two paths
        to each other.
        """
        cfg = self.cfg
        dt = cfg.dt
        if self.controller is not None:
            moves = self.controller.decide(self)
            clamp = self.controller.clamp_to_arena
        else:
            moves = None
            clamp = False
        grid = self.grid
        visits = grid.visits
        cols = grid.cols
        minx, miny, maxx, maxy = self._minx, self._miny, self._maxx, self._maxy
        inv_cell = self._inv_cell
        last = cols - 1
        sampling_altitude = cfg.sampling_altitude
        speed_cap = cfg.target_sampling_velocity + SPEED_EPS
        self.step_count += 1
        step_idx = self.step_count
        pheromone = self.pheromone
        events = []
        for i, agent in enumerate(self.agents):
            if moves is not None:
                motion = moves[i]
                if motion.__class__ is PoseTarget:
                    px, py = agent.position
                    x = motion.x
                    y = motion.y
                    agent.position = (x, y)
                    agent.heading = wrap_angle(motion.heading)
                    agent.speed = math.hypot(x - px, y - py) / dt
                else:
                    v = motion.linear_speed
                    if v < 0:
                        raise ValueError("linear_speed must be non-negative")
                    h = agent.heading + motion.angular_rate * dt
                    if not 0.0 <= h < TWO_PI:
                        h = wrap_angle(h)
                    x, y = agent.position
                    if v != 0.0:
                        x += v * dt * math.cos(h)
                        y += v * dt * math.sin(h)
                        if clamp and not (minx <= x <= maxx and miny <= y <= maxy):
                            x = minx if x < minx else (maxx if x > maxx else x)
                            y = miny if y < miny else (maxy if y > maxy else y)
                            self.clamp_count += 1
                    agent.position = (x, y)
                    agent.heading = h
                    agent.speed = v
            x, y = agent.position
            if minx <= x <= maxx and miny <= y <= maxy:
                col = int((x - minx) * inv_cell)
                row = int((y - miny) * inv_cell)
                if col > last:
                    col = last
                if row > last:
                    row = last
                cell = (col, row)
            else:
                cell = None
            if cell != agent.prev_cell:
                agent.prev_cell = cell
                if (
                    cell is not None
                    and agent.sampling_active
                    and agent.altitude == sampling_altitude
                    and agent.speed <= speed_cap
                ):
                    idx = row * cols + col
                    count = visits[idx]
                    visits[idx] = count + 1
                    if count == 0:
                        grid.visited_count += 1
                    events.append((agent.id, cell))
                    if pheromone is not None:
                        pheromone.deposit(idx, step_idx)
        self.visit_events = events

    def is_complete(self) -> bool:
        return self.grid.is_complete()

    def budget_exhausted(self) -> bool:
        return self.step_count >= self.cfg.max_steps and not self.is_complete()

    def run(self, on_step: Callable[["World"], None] | None = None):
        """Step until full coverage or the step budget runs out."""
        from .metrics import RunRecord

        fractions: list[float] = []
        while not self.is_complete() and self.step_count < self.cfg.max_steps:
            self.step()
            fractions.append(self.grid.coverage_fraction())
            if on_step is not None:
                on_step(self)
        cct = self.step_count if self.is_complete() else None
        strategy = getattr(self.controller, "name", "none")
        return RunRecord(
            strategy=strategy,
            seed=self.cfg.seed,
            cct=cct,
            coverage_fraction=np.asarray(fractions, dtype=np.float64),
            final_visits=self.grid.counts_array(),
        )
