"""Reaction rules of the four decentralized controllers."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from sweepsim.angles import ccw_distance, cw_distance, heading_vector, wrap_angle
from sweepsim.arena import ArenaSpec
from sweepsim.decentralized import (
    LDR_RANDOM,
    LDR_REPULSIVE,
    DecentralizedController,
    PheromoneField,
    RbParams,
    avoidance_turn,
    boundary_escape_heading,
    compass_index,
    pm_choose,
    pm_probabilities,
    pm_sense,
    repulsive_escape,
)
from sweepsim.harness import ExperimentConfig, build_world
from sweepsim.world import AgentState, SimConfig, World, agent_stream

ARENA = ArenaSpec()
RB = RbParams()


def rng_for(seed=0):
    return np.random.default_rng(seed)


class TestBoundaryEscape:
    def test_east_edge_samples_interior_minus_reciprocal_cone(self):
        # heading due east at the east edge; reciprocal is due west (180deg)
        rng = rng_for(1)
        for _ in range(500):
            theta = boundary_escape_heading(0.0, [(-1.0, 0.0)], rng)
            dx, dy = heading_vector(theta)
            assert dx < 0.0  # interior half-plane
            gap = min(ccw_distance(math.pi, theta), cw_distance(math.pi, theta))
            assert gap >= math.radians(5.0) - 1e-12

    def test_corner_restricts_to_quarter_plane(self):
        rng = rng_for(2)
        normals = [(-1.0, 0.0), (0.0, 1.0)]  # south-east corner
        for _ in range(500):
            theta = boundary_escape_heading(math.radians(-45.0), normals, rng)
            dx, dy = heading_vector(theta)
            assert dx < 0.0 and dy > 0.0

    def test_normal_equal_to_reciprocal_keeps_symmetric_halves(self):
        # heading due east; inward normal due west = exactly the reciprocal
        rng = rng_for(3)
        thetas = [boundary_escape_heading(0.0, [(-1.0, 0.0)], rng) for _ in range(2000)]
        left = sum(1 for t in thetas if t < math.pi)
        right = len(thetas) - left
        assert abs(left - right) < 5 * math.sqrt(len(thetas)) / 2

    def test_matches_rejection_sampling_oracle(self):
        rng = rng_for(4)
        draws = np.array(
            [boundary_escape_heading(math.radians(30.0), [(-1.0, 0.0)], rng) for _ in range(3000)]
        )
        oracle_rng = rng_for(5)
        reciprocal = wrap_angle(math.radians(30.0) + math.pi)
        oracle = []
        while len(oracle) < 3000:
            t = oracle_rng.uniform(0.0, 2 * math.pi)
            if math.cos(t) < 0.0 and min(
                ccw_distance(reciprocal, t), cw_distance(reciprocal, t)
            ) > math.radians(5.0):
                oracle.append(t)
        bins = np.linspace(math.pi / 2, 3 * math.pi / 2, 13)
        h1, _ = np.histogram(draws, bins=bins)
        h2, _ = np.histogram(np.array(oracle), bins=bins)
        for c1, c2 in zip(h1, h2):
            assert abs(c1 - c2) < 5 * math.sqrt(max(c2, 1.0))


class TestAvoidance:
    def test_short_range_left_neighbor_turns_clockwise(self):
        # neighbor 0.8 m away, 10 degrees left of an east heading
        bearing = math.radians(10.0)
        neighbor = (0.8 * math.cos(bearing), 0.8 * math.sin(bearing), 0.8)
        result = avoidance_turn(0.0, [neighbor], RB, rng_for(1))
        assert result is not None
        target, direction, tier = result
        assert tier == "short"
        assert direction == -1.0
        turn = cw_distance(0.0, target)
        assert math.radians(10.0) <= turn <= math.radians(30.0)

    def test_medium_range_right_neighbor_turns_counterclockwise(self):
        bearing = math.radians(-20.0)
        neighbor = (2.0 * math.cos(bearing), 2.0 * math.sin(bearing), 2.0)
        result = avoidance_turn(0.0, [neighbor], RB, rng_for(2))
        assert result is not None
        target, direction, tier = result
        assert tier == "medium"
        assert direction == 1.0
        turn = ccw_distance(0.0, target)
        assert math.radians(5.0) <= turn <= math.radians(70.0)

    def test_outside_medium_cone_no_reaction(self):
        bearing = math.radians(50.0)
        neighbor = (2.0 * math.cos(bearing), 2.0 * math.sin(bearing), 2.0)
        assert avoidance_turn(0.0, [neighbor], RB, rng_for(3)) is None

    def test_dead_ahead_breaks_tie_clockwise(self):
        result = avoidance_turn(0.0, [(0.5, 0.0, 0.5)], RB, rng_for(4))
        assert result is not None
        _, direction, tier = result
        assert tier == "short"
        assert direction == -1.0

    def test_short_range_outranks_medium(self):
        near = (0.9, 0.0, 0.9)
        far = (2.0 * math.cos(0.2), 2.0 * math.sin(0.2), 2.0)
        _, _, tier = avoidance_turn(0.0, [far, near], RB, rng_for(5))
        assert tier == "short"


class TestRepulsiveEscape:
    def test_mean_opposite_heading(self):
        # neighbors at (1,0) and (0,1): mean (0.5,0.5); opposite bearing 225deg
        target = repulsive_escape([(1.0, 0.0), (0.0, 1.0)])
        assert target == pytest.approx(math.radians(225.0))

    def test_degenerate_mean_returns_none(self):
        assert repulsive_escape([(1.0, 0.0), (-1.0, 0.0)]) is None


class TestPheromoneField:
    def test_deposit_then_three_steps_of_evaporation(self):
        field = PheromoneField(100)
        field.deposit(7, step=10)
        # deposits land before the step's own evaporation tick
        assert field.level(7, step=10) == pytest.approx(4999.0)
        # three ticks after the deposit landed: 5000 - 3
        assert field.level(7, step=12) == pytest.approx(4997.0)

    def test_level_floors_at_zero(self):
        field = PheromoneField(100)
        field.deposit(7, step=0)
        assert field.level(7, step=6000) == 0.0

    def test_double_deposit_same_step_adds(self):
        field = PheromoneField(100)
        field.deposit(7, step=3)
        field.deposit(7, step=3)
        # two deposits, one evaporation tick for that step
        assert field.level(7, step=3) == pytest.approx(2 * 5000.0 - 1.0)

    def test_snapshot_matches_pointwise_levels(self):
        field = PheromoneField(10)
        field.deposit(2, step=1)
        field.deposit(5, step=4)
        snap = field.snapshot(step=9)
        for idx in range(10):
            assert snap[idx] == pytest.approx(field.level(idx, step=9))

    def test_decreases_by_exactly_one_per_step(self):
        field = PheromoneField(10)
        field.deposit(3, step=2)
        previous = field.snapshot(step=2)
        for step in range(3, 5010):
            current = field.snapshot(step)
            assert (current >= 0.0).all()
            expected = np.maximum(previous - 1.0, 0.0)
            assert np.array_equal(current, expected)
            previous = current


class TestPmSense:
    def make_field_with(self, cells, value=100.0, step=1):
        field = PheromoneField(ARENA.cell_count)
        for col, row in cells:
            idx = row * ARENA.cols + col
            field._level[idx] = value
            field._stamp[idx] = step
        return field

    def test_nearly_east_heading_reads_compass_neighbors(self):
        # agent in cell (20, 20); heading 3 degrees quantizes to east
        field = self.make_field_with([(21, 20), (21, 21), (21, 19)], value=7.0)
        ahead, left, right = pm_sense(field, 1, (0.5, 0.5), math.radians(3.0), ARENA)
        assert (ahead, left, right) == (7.0, 7.0, 7.0)
        field2 = self.make_field_with([(21, 21)], value=9.0)
        ahead, left, right = pm_sense(field2, 1, (0.5, 0.5), math.radians(3.0), ARENA)
        assert (ahead, left, right) == (0.0, 9.0, 0.0)

    def test_corner_reads_zero_outside_grid(self):
        field = PheromoneField(ARENA.cell_count)
        readings = pm_sense(field, 1, (19.5, 19.5), math.radians(45.0), ARENA)
        assert readings == (0.0, 0.0, 0.0)

    def test_compass_quantization(self):
        assert compass_index(math.radians(3.0)) == 0
        assert compass_index(math.radians(44.0)) == 1
        assert compass_index(math.radians(90.0)) == 2
        assert compass_index(math.radians(359.0)) == 0


class TestPmChoose:
    def test_probability_formulas(self):
        p_a, p_r, p_l = pm_probabilities(10, 10, 10)
        assert p_a == p_r == p_l == Fraction(1, 3)
        p_a, p_r, p_l = pm_probabilities(30, 0, 0)
        assert p_a == 0
        assert p_r == p_l == Fraction(1, 2)

    def test_identity_exact_for_float_readings(self):
        rng = rng_for(8)
        for _ in range(2000):
            a, l, r = rng.uniform(0.0, 100.0, size=3)
            p_a, p_r, p_l = pm_probabilities(a, l, r)
            assert p_a + p_r + p_l == 1
            for p in (p_a, p_r, p_l):
                assert 0 <= p <= Fraction(1, 2)

    def test_total_zero_required(self):
        with pytest.raises(ValueError):
            pm_probabilities(0, 0, 0)

    def test_no_reaction_when_suppressed(self):
        assert pm_choose((5.0, 5.0, 5.0), True, rng_for(0)) == "no_reaction"

    def test_no_reaction_when_nothing_ahead(self):
        assert pm_choose((0.0, 50.0, 50.0), False, rng_for(0)) == "no_reaction"

    def test_never_ahead_when_all_pheromone_ahead(self):
        rng = rng_for(9)
        outcomes = {pm_choose((10.0, 0.0, 0.0), False, rng) for _ in range(200)}
        assert outcomes == {"turn_right_45", "turn_left_45"}

    def test_outcome_frequencies_match_probabilities(self):
        rng = rng_for(10)
        readings = (4.0, 1.0, 3.0)  # p_a=1/4, p_r=5/16, p_l=7/16
        counts = {"ahead": 0, "turn_right_45": 0, "turn_left_45": 0}
        n = 4000
        for _ in range(n):
            counts[pm_choose(readings, False, rng)] += 1
        assert counts["ahead"] == pytest.approx(n / 4, abs=5 * math.sqrt(n))
        assert counts["turn_right_45"] == pytest.approx(5 * n / 16, abs=5 * math.sqrt(n))


def short_world(strategy, seed=2, max_steps=4000, collect=True):
    cfg = ExperimentConfig(strategy=strategy, runs=1, sim=SimConfig(max_steps=max_steps))
    return build_world(cfg, seed=seed, collect_events=collect), cfg


class TestControllerTraces:
    def test_no_agent_ends_step_outside_and_clamp_never_fires(self):
        world, _ = short_world("rb")
        half = ARENA.half_side
        while not world.is_complete() and world.step_count < 4000:
            world.step()
            for agent in world.agents:
                x, y = agent.position
                assert abs(x) <= half and abs(y) <= half
        assert world.clamp_count == 0

    def test_boundary_reactions_point_inward(self):
        world, _ = short_world("rb", seed=4)
        for _ in range(3000):
            world.step()
        events = [e for e in world.controller.events if e.kind == "boundary"]
        assert len(events) > 20
        for event in events:
            dx, dy = heading_vector(event.heading)
            for nx, ny in event.normals:
                assert dx * nx + dy * ny > 0.0

    def test_density_reactions_respect_suppression(self):
        world, _ = short_world("ldr_random", seed=3)
        for _ in range(3000):
            world.step()
        density = [e for e in world.controller.events if e.kind == "density"]
        assert density, "expected at least one density reaction in a packed start"
        for event in density:
            assert event.suppression_remaining == 0

    def test_pheromone_reactions_respect_suppression(self):
        world, _ = short_world("pm", seed=3)
        for _ in range(2500):
            world.step()
        reactions = [e for e in world.controller.events if e.kind == "pheromone"]
        assert reactions
        for event in reactions:
            assert event.suppression_remaining == 0

    def test_turning_agents_hold_position(self):
        world, _ = short_world("rb", seed=5)
        for _ in range(1500):
            before = {a.id: a.position for a in world.agents}
            world.step()
            for agent in world.agents:
                if agent.speed == 0.0:
                    assert agent.position == before[agent.id]

    def test_pheromone_deposits_follow_visits(self):
        world, _ = short_world("pm", seed=6, max_steps=500)
        for _ in range(500):
            world.step()
            for _, cell in world.visit_events:
                idx = world.grid.flat_index(cell)
                assert world.pheromone.level(idx, world.step_count) > 0.0

    def test_ldr_random_density_turn_is_clockwise_70_to_90(self):
        world, _ = short_world("ldr_random", seed=3)
        controller = world.controller
        recorded = []
        # capture headings at reaction time and the eventual turn target
        for _ in range(2500):
            before = {a.id: a.heading for a in world.agents}
            n_before = len(controller.events)
            world.step()
            for event in controller.events[n_before:]:
                if event.kind == "density":
                    i = event.agent_id
                    recorded.append((before[i], controller.turn_target[i]))
        assert recorded
        for heading, target in recorded:
            turn = cw_distance(heading, target)
            assert math.radians(70.0) - 1e-9 <= turn <= math.radians(90.0) + 1e-9


class TestLdrNotifications:
    def build_cluster(self, positions, params):
        agents = [
            AgentState(id=i, position=p, heading=math.pi / 2, altitude=1.5, rng=agent_stream(0, i))
            for i, p in enumerate(positions)
        ]
        name = "ldr_repulsive" if params.repulsive else "ldr_random"
        controller = DecentralizedController(name, agents, ldr=params, collect_events=True)
        world = World(ARENA, SimConfig(), agents, controller)
        return world, controller

    def test_below_threshold_no_reaction(self):
        # four neighbors higher than five distinct IDs: nobody notifies
        positions = [(0.0, 0.0), (1.5, 0.0), (3.0, 0.0), (4.5, 0.0), (6.0, 0.0)]
        world, controller = self.build_cluster(positions, LDR_RANDOM)
        world.step()
        assert not [e for e in controller.events if e.kind == "density"]

    def test_at_threshold_neighbors_react(self):
        # six agents: everyone hears five distinct IDs inside 10 m
        positions = [(float(i), 0.0) for i in range(6)]
        world, controller = self.build_cluster(positions, LDR_RANDOM)
        world.step()
        reacting = {e.agent_id for e in controller.events if e.kind == "density"}
        assert reacting == set(range(6))

    def test_repulsive_reaction_targets_opposite_of_mean(self):
        # threshold 3 for the repulsive variant; 5-m communication range;
        # neighbors sit beyond the 2.5 m avoidance radius so the density
        # reaction is what fires
        positions = [(0.0, 0.0), (3.0, 0.0), (0.0, -3.0), (-3.0, 0.5), (4.0, 1.0)]
        world, controller = self.build_cluster(positions, LDR_REPULSIVE)
        world.step()
        reacting = {e.agent_id for e in controller.events if e.kind == "density"}
        assert 0 in reacting
        rel = [(p[0], p[1]) for p in positions[1:]]
        expected = repulsive_escape(rel)
        assert controller.turn_target[0] == pytest.approx(expected)


class TestPmRunState:
    def test_field_nonnegative_throughout_run(self):
        world, _ = short_world("pm", seed=7, max_steps=1200, collect=False)
        for _ in range(1200):
            world.step()
            if world.step_count % 100 == 0:
                assert (world.pheromone.snapshot(world.step_count) >= 0.0).all()
