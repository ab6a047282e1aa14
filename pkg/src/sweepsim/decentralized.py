"""The four decentralized controllers: RB, LDR-Random, LDR-Repulsive, PM.

All four share the random-billiards core: fly straight at the target
velocity, reflect off boundaries toward a random interior direction, and
dodge nearby UAVs with randomized turns. The LDR variants add
communication-triggered dispersal; PM adds a virtual pheromone field that
biases agents away from recently covered ground.

Turns happen in place at the default turn rate with zero linear speed, so a
reacting agent holds its cell until the rotation completes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .angles import (
    ccw_distance,
    cw_distance,
    full_circle,
    half_plane_arc,
    intersect_arcs,
    sample_arcs,
    subtract_arc,
    wrap_angle,
    wrap_pi,
)
from .arena import ArenaSpec, cell_of
from .world import HOLD, Motion, Unicycle, World


@dataclass(frozen=True)
class RbParams:
    """Random-billiards boundary reflection and two-tier obstacle avoidance."""

    boundary_trigger: float = 0.05  # m
    reciprocal_exclusion: float = math.radians(5.0)  # half-angle around reverse heading
    short_range: float = 1.0  # m
    short_fov: float = math.radians(90.0)  # total cone ahead
    short_turn: tuple[float, float] = (math.radians(10.0), math.radians(30.0))
    medium_range: float = 2.5  # m
    medium_fov: float = math.radians(60.0)
    medium_turn: tuple[float, float] = (math.radians(5.0), math.radians(70.0))

    def __post_init__(self) -> None:
        if not self.short_range < self.medium_range:
            raise ValueError("short_range must be below medium_range")


@dataclass(frozen=True)
class LdrParams:
    """Local-density-reduction add-on riding on the RB core."""

    comm_range: float
    density_threshold: int
    repulsive: bool
    random_turn: tuple[float, float] = (math.radians(70.0), math.radians(90.0))
    post_reaction_suppression: int = 50
    post_avoidance_suppression: int = 350

    def __post_init__(self) -> None:
        if self.density_threshold < 1:
            raise ValueError("density_threshold must be at least 1")
        if self.post_reaction_suppression < 0 or self.post_avoidance_suppression < 0:
            raise ValueError("suppression windows must be non-negative")


LDR_RANDOM = LdrParams(comm_range=10.0, density_threshold=5, repulsive=False)
LDR_REPULSIVE = LdrParams(
    comm_range=5.0,
    density_threshold=3,
    repulsive=True,
    post_reaction_suppression=350,
)


@dataclass(frozen=True)
class PmParams:
    """Pheromone-response add-on riding on the RB core.

    suppress_after_ahead controls whether a sampled go-straight decision also
    starts the 25-step quiet window, or only completed turns do. The default
    treats only executed turns as reactions, so an agent facing covered
    ground keeps re-deciding each step until it turns or the way ahead
    clears.
    """

    turn_angle: float = math.radians(45.0)
    post_pheromone_suppression: int = 25
    post_avoidance_suppression: int = 50
    deposit_amount: float = 5000.0
    evaporation_rate: float = 1.0
    suppress_after_ahead: bool = False


class PheromoneField:
    """Per-cell pheromone with fixed deposits and unit-per-step evaporation.

    Evaporation is applied lazily: each cell stores its level at the step it
    was last written and reads subtract the steps elapsed since, floored at
    zero. Observationally identical to decrementing every cell once per step.
    """

    def __init__(self, cell_count: int, deposit_amount: float = 5000.0, evaporation_rate: float = 1.0):
        self.deposit_amount = deposit_amount
        self.evaporation_rate = evaporation_rate
        self._level = np.zeros(cell_count, dtype=np.float64)
        self._stamp = np.zeros(cell_count, dtype=np.int64)

    def level(self, idx: int, step: int) -> float:
        raw = self._level[idx] - self.evaporation_rate * (step - self._stamp[idx])
        return raw if raw > 0.0 else 0.0

    def deposit(self, idx: int, step: int) -> None:
        # The deposit lands before this step's evaporation tick.
        prior = self.level(idx, step - 1)
        value = prior + self.deposit_amount - self.evaporation_rate
        self._level[idx] = value if value > 0.0 else 0.0
        self._stamp[idx] = step

    def snapshot(self, step: int) -> np.ndarray:
        """Full field as of the end of the given step."""
        raw = self._level - self.evaporation_rate * (step - self._stamp)
        return np.maximum(raw, 0.0)


def boundary_escape_heading(
    heading: float, inward_normals, rng, exclusion_half_angle: float = math.radians(5.0)
) -> float:
    """Random interior-facing heading for a boundary reflection.

    Uniform over the intersection of the triggering edges' interior
    half-planes, excluding the given offset either side of the reciprocal
    heading. Falls back to the (mean) inward normal if that set is empty.
    """
    admissible = full_circle()
    for nx, ny in inward_normals:
        admissible = intersect_arcs(admissible, half_plane_arc(math.atan2(ny, nx)))
    admissible = subtract_arc(admissible, wrap_angle(heading + math.pi), exclusion_half_angle)
    if not admissible:
        mx = sum(n[0] for n in inward_normals)
        my = sum(n[1] for n in inward_normals)
        return wrap_angle(math.atan2(my, mx))
    return sample_arcs(admissible, rng)


def avoidance_turn(heading, neighbors, params: RbParams, rng):
    """Randomized dodge for the nearest UAV ahead, or None.

    neighbors are (dx, dy, dist) offsets in the world frame. Short range
    outranks medium range; the turn goes clockwise when the nearest
    qualifying neighbor is on the left, counterclockwise on the right, and an
    exactly-ahead neighbor breaks the tie clockwise. Returns
    (target_heading, direction, tier).
    """
    cos_h = math.cos(heading)
    sin_h = math.sin(heading)
    best = None  # (dist, dx, dy, tier)
    for dx, dy, dist in neighbors:
        if dist > params.medium_range:
            continue
        rel = wrap_pi(math.atan2(dy, dx) - heading)
        if dist <= params.short_range and abs(rel) <= params.short_fov / 2.0:
            tier = 0
        elif abs(rel) <= params.medium_fov / 2.0:
            tier = 1
        else:
            continue
        if best is None or (tier, dist) < (best[3], best[0]):
            best = (dist, dx, dy, tier)
    if best is None:
        return None
    dist, dx, dy, tier = best
    lo, hi = params.short_turn if tier == 0 else params.medium_turn
    magnitude = rng.uniform(lo, hi)
    cross = cos_h * dy - sin_h * dx
    direction = -1.0 if cross >= 0.0 else 1.0  # left (or dead ahead) -> clockwise
    target = wrap_angle(heading + direction * magnitude)
    return target, direction, "short" if tier == 0 else "medium"


def repulsive_escape(rel_positions) -> float | None:
    """Heading directly away from the mean of neighbor offsets.

    Returns None for the degenerate perfectly-centered case.
    """
    k = len(rel_positions)
    mx = sum(p[0] for p in rel_positions) / k
    my = sum(p[1] for p in rel_positions) / k
    if mx == 0.0 and my == 0.0:
        return None
    return wrap_angle(math.atan2(-my, -mx))


# Compass offsets for pheromone reads, counterclockwise from east.
_COMPASS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def compass_index(heading: float) -> int:
    """Quantize a heading to the nearest of 8 compass directions."""
    return round(wrap_angle(heading) / (math.pi / 4.0)) % 8


def pm_sense(field: PheromoneField, step: int, position, heading: float, arena: ArenaSpec):
    """Pheromone levels in the cells ahead and 45 degrees left/right.

    Directions are taken in the nearest compass frame; cells beyond the grid
    read as zero.
    """
    cell = cell_of(position, arena)
    if cell is None:
        return (0.0, 0.0, 0.0)
    col, row = cell
    k = compass_index(heading)
    cols = arena.cols
    out = []
    for dk in (0, 1, -1):  # ahead, left, right
        dx, dy = _COMPASS[(k + dk) % 8]
        c, r = col + dx, row + dy
        if 0 <= c < cols and 0 <= r < arena.rows:
            out.append(field.level(r * cols + c, step))
        else:
            out.append(0.0)
    return tuple(out)


def pm_probabilities(ahead, left, right) -> tuple[Fraction, Fraction, Fraction]:
    """Exact move probabilities (p_ahead, p_right, p_left).

    Each is (total - that_reading) / (2 * total); they sum to one by
    construction. Requires total > 0.
    """
    a, l, r = Fraction(ahead), Fraction(left), Fraction(right)
    total = a + l + r
    if total <= 0:
        raise ValueError("pm_probabilities requires total > 0")
    return (
        (total - a) / (2 * total),
        (total - r) / (2 * total),
        (total - l) / (2 * total),
    )


def pm_choose(readings, suppressed: bool, rng) -> str:
    """Pick among ahead / turn_right_45 / turn_left_45, or no_reaction.

    No reaction while suppressed, when no pheromone is ahead, or when all
    readings are zero. Sampling uses unnormalized thresholds so the exact
    probability identity carries over.
    """
    ahead, left, right = readings
    total = ahead + left + right
    if suppressed or total <= 0.0 or ahead <= 0.0:
        return "no_reaction"
    u = rng.uniform(0.0, 2.0 * total)
    if u < total - ahead:
        return "ahead"
    if u < (total - ahead) + (total - right):
        return "turn_right_45"
    return "turn_left_45"


@dataclass
class ReactionEvent:
    """One recorded reaction, for behavioral trace audits."""

    step: int
    agent_id: int
    kind: str
    heading: float
    suppression_remaining: int = 0
    normals: tuple = ()
    outcome: str = ""


_CRUISE, _TURNING = 0, 1


class DecentralizedController:
    """Per-step command computation for one decentralized strategy.

    All sensing reads the swarm state from before the step began; per-agent
    decisions never see each other's same-step reactions, so agents can be
    evaluated in any order.
    """

    clamp_to_arena = True

    def __init__(
        self,
        name: str,
        agents,
        rb: RbParams | None = None,
        ldr: LdrParams | None = None,
        pm: PmParams | None = None,
        pheromone: PheromoneField | None = None,
        collect_events: bool = False,
    ):
        self.name = name
        self.rb = rb or RbParams()
        self.ldr = ldr
        self.pm = pm
        self.pheromone = pheromone
        n = len(agents)
        self.phase = [_CRUISE] * n
        self.turn_target = [0.0] * n
        self.turn_dir = [0.0] * n
        self.turn_kind = [""] * n
        self.density_until = [0] * n
        self.pheromone_until = [0] * n
        self.collect_events = collect_events
        self.events: list[ReactionEvent] = []

    # -- reaction bookkeeping -------------------------------------------------

    def _begin_turn(self, i: int, agent, target: float, direction: float, kind: str) -> None:
        self.phase[i] = _TURNING
        self.turn_target[i] = target
        self.turn_dir[i] = direction
        self.turn_kind[i] = kind
        agent.mode = "turning"

    def _finish_reaction(self, i: int, kind: str, now: int) -> None:
        if kind in ("boundary", "avoid"):
            if self.ldr is not None:
                self.density_until[i] = now + self.ldr.post_avoidance_suppression
            if self.pm is not None:
                self.pheromone_until[i] = now + self.pm.post_avoidance_suppression
        elif kind == "density":
            self.density_until[i] = now + self.ldr.post_reaction_suppression
        elif kind == "pheromone":
            self.pheromone_until[i] = now + self.pm.post_pheromone_suppression

    def suppression_remaining(self, kind: str, i: int, now: int) -> int:
        until = self.density_until[i] if kind == "density" else self.pheromone_until[i]
        return max(0, until - now + 1)

    # -- the step -------------------------------------------------------------

    def decide(self, world: World) -> list[Motion]:
        cfg = world.cfg
        arena = world.arena
        agents = world.agents
        n = len(agents)
        now = world.step_count + 1  # index of the step being computed
        dt = cfg.dt
        v_target = cfg.target_sampling_velocity
        turn_rate = cfg.turn_rate_default
        rb = self.rb
        half = arena.half_side
        cx, cy = arena.center

        xs = [a.position[0] for a in agents]
        ys = [a.position[1] for a in agents]
        hs = [a.heading for a in agents]

        # Pairwise scan: obstacle candidates within medium range, plus ID
        # broadcasts within the LDR communication range.
        near: list[list] = [[] for _ in range(n)]
        med = rb.medium_range
        if self.ldr is not None:
            comm = self.ldr.comm_range
            comm_count = [0] * n
            comm_adj: list[list[int]] = [[] for _ in range(n)]
        else:
            comm = med
            comm_count = None
            comm_adj = None
        comm2 = comm * comm
        med2 = med * med
        for i in range(n):
            xi = xs[i]
            yi = ys[i]
            for j in range(i + 1, n):
                dx = xs[j] - xi
                dy = ys[j] - yi
                d2 = dx * dx + dy * dy
                if d2 > comm2:
                    continue
                if comm_adj is not None:
                    comm_count[i] += 1
                    comm_count[j] += 1
                    comm_adj[i].append(j)
                    comm_adj[j].append(i)
                if d2 <= med2:
                    d = math.sqrt(d2)
                    near[i].append((dx, dy, d))
                    near[j].append((-dx, -dy, d))

        if comm_adj is not None:
            thresh = self.ldr.density_threshold
            notifying = [comm_count[i] >= thresh for i in range(n)]
            notified = [any(notifying[j] for j in comm_adj[i]) for i in range(n)]
        else:
            notified = None

        moves: list[Motion] = []
        for i in range(n):
            agent = agents[i]
            if self.phase[i] == _TURNING:
                remaining = (
                    ccw_distance(hs[i], self.turn_target[i])
                    if self.turn_dir[i] > 0
                    else cw_distance(hs[i], self.turn_target[i])
                )
                if remaining <= turn_rate * dt + 1e-12:
                    moves.append(Unicycle(0.0, self.turn_dir[i] * remaining / dt))
                    self.phase[i] = _CRUISE
                    agent.mode = "cruise"
                    self._finish_reaction(i, self.turn_kind[i], now)
                else:
                    moves.append(Unicycle(0.0, self.turn_dir[i] * turn_rate))
                continue

            x = xs[i]
            y = ys[i]
            h = hs[i]
            cos_h = math.cos(h)
            sin_h = math.sin(h)

            # Boundary reflection: react when sitting in the trigger band with
            # an outward heading, or when this step's straight move would exit
            # (one tick covers twice the trigger band, so the lookahead is what
            # keeps agents inside without ever clamping).
            step_len = v_target * dt
            margin = rb.boundary_trigger + step_len
            trigger = False
            if (
                x - cx < half - margin
                and cx - x < half - margin
                and y - cy < half - margin
                and cy - y < half - margin
            ):
                pass  # nowhere near a wall
            else:
                nx = x + step_len * cos_h
                ny = y + step_len * sin_h
                constraints = []
                for n_vec, dist_now, dist_next in (
                    ((-1.0, 0.0), half - (x - cx), half - (nx - cx)),
                    ((1.0, 0.0), (x - cx) + half, (nx - cx) + half),
                    ((0.0, -1.0), half - (y - cy), half - (ny - cy)),
                    ((0.0, 1.0), (y - cy) + half, (ny - cy) + half),
                ):
                    if dist_now <= rb.boundary_trigger or dist_next < 0.0:
                        constraints.append(n_vec)
                        outward = cos_h * n_vec[0] + sin_h * n_vec[1] <= 0.0
                        if dist_next < 0.0 or (dist_now <= rb.boundary_trigger and outward):
                            trigger = True
            if trigger:
                target = boundary_escape_heading(h, constraints, agent.rng, rb.reciprocal_exclusion)
                direction = 1.0 if ccw_distance(h, target) <= math.pi else -1.0
                self._begin_turn(i, agent, target, direction, "boundary")
                if self.collect_events:
                    self.events.append(
                        ReactionEvent(now, agent.id, "boundary", target, normals=tuple(constraints))
                    )
                moves.append(HOLD)
                continue

            # Obstacle avoidance, short range before medium.
            if near[i]:
                dodge = avoidance_turn(h, near[i], rb, agent.rng)
                if dodge is not None:
                    target, direction, tier = dodge
                    self._begin_turn(i, agent, target, direction, "avoid")
                    if self.collect_events:
                        self.events.append(ReactionEvent(now, agent.id, "avoid_" + tier, target))
                    moves.append(HOLD)
                    continue

            # Strategy add-on.
            if notified is not None and notified[i] and now > self.density_until[i]:
                if self.collect_events:
                    self.events.append(
                        ReactionEvent(
                            now,
                            agent.id,
                            "density",
                            h,
                            suppression_remaining=self.suppression_remaining("density", i, now),
                        )
                    )
                if self.ldr.repulsive:
                    target = repulsive_escape([(xs[j] - x, ys[j] - y) for j in comm_adj[i]])
                    if target is None:
                        # Perfectly centered neighbors: hold heading, still back off.
                        self.density_until[i] = now + self.ldr.post_reaction_suppression
                        moves.append(Unicycle(v_target, 0.0))
                        continue
                    direction = 1.0 if ccw_distance(h, target) <= math.pi else -1.0
                else:
                    lo, hi = self.ldr.random_turn
                    target = wrap_angle(h - agent.rng.uniform(lo, hi))
                    direction = -1.0
                self._begin_turn(i, agent, target, direction, "density")
                moves.append(HOLD)
                continue

            if self.pm is not None:
                suppressed = now <= self.pheromone_until[i]
                readings = pm_sense(self.pheromone, now - 1, (x, y), h, arena)
                outcome = pm_choose(readings, suppressed, agent.rng)
                if outcome != "no_reaction":
                    if self.collect_events:
                        self.events.append(
                            ReactionEvent(
                                now,
                                agent.id,
                                "pheromone",
                                h,
                                suppression_remaining=self.suppression_remaining("pheromone", i, now),
                                outcome=outcome,
                            )
                        )
                    if outcome == "ahead":
                        if self.pm.suppress_after_ahead:
                            self._finish_reaction(i, "pheromone", now)
                        moves.append(Unicycle(v_target, 0.0))
                        continue
                    direction = 1.0 if outcome == "turn_left_45" else -1.0
                    target = wrap_angle(h + direction * self.pm.turn_angle)
                    self._begin_turn(i, agent, target, direction, "pheromone")
                    moves.append(HOLD)
                    continue

            moves.append(Unicycle(v_target, 0.0))
        return moves


def make_controller(name: str, agents, arena: ArenaSpec, collect_events: bool = False):
    """Build the controller (and pheromone field, for PM) for a strategy name."""
    if name == "rb":
        return DecentralizedController("rb", agents, collect_events=collect_events), None
    if name == "ldr_random":
        return (
            DecentralizedController("ldr_random", agents, ldr=LDR_RANDOM, collect_events=collect_events),
            None,
        )
    if name == "ldr_repulsive":
        return (
            DecentralizedController(
                "ldr_repulsive", agents, ldr=LDR_REPULSIVE, collect_events=collect_events
            ),
            None,
        )
    if name == "pm":
        params = PmParams()
        field = PheromoneField(arena.cell_count, params.deposit_amount, params.evaporation_rate)
        controller = DecentralizedController(
            "pm", agents, pm=params, pheromone=field, collect_events=collect_events
        )
        return controller, field
    raise ValueError(f"unknown decentralized strategy: {name}")
