import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clutterplan.actions import PushAction
from clutterplan.geometry import ConvexPolygon, Pose2, Shape, overlap
from clutterplan.physics import (PUSH_ONLY, InvalidPushError, ObjectState, PlacementError, SimBatch, SimConfig,
                                 TrajectoryError, apply_pick_place, apply_push_trajectory, step_batch, step_push)
from clutterplan.scenes import bundled_suite, generate_retrieval_scene, load_suite

from conftest import REMP_WS, box, fresh, scene

SUITE = [s.state for s in load_suite(bundled_suite("retrieval"))]


def random_push(state, rng, tries=100):
    """Push aimed roughly at a random object from a free start."""
    for _ in range(tries):
        obj = state.objects[rng.integers(len(state.objects))]
        a = rng.uniform(-math.pi, math.pi)
        d = (math.cos(a), math.sin(a))
        cx, cy = obj.centroid
        back = obj.shape.max_radius + 0.01 + rng.uniform(0.0, 0.03)
        lat = rng.uniform(-1.0, 1.0) * obj.shape.max_radius
        start = (cx - d[0] * back - d[1] * lat, cy - d[1] * back + d[0] * lat)
        if state.pusher_free(start, 0.01):
            return PushAction(start, d, float(rng.uniform(0.01, 0.08)))
    return None


def centroid_shift(before, after):
    return {o.object_id: math.dist(o.centroid, after.get(o.object_id).centroid) for o in before.objects}


# ---------------------------------------------------------------- step_push examples

def test_push_through_free_space_changes_nothing(lone_square):
    a = PushAction((0.02, 0.02), (1.0, 0.0), 0.05)
    out = step_push(lone_square, a)
    assert out.digest() == lone_square.digest()


def test_symmetric_center_push_translates_without_rotation(lone_square):
    # square spans x in [0.124, 0.164]; pusher disc (r=0.01) starts 5 mm short of it
    a = PushAction((0.109, 0.144), (1.0, 0.0), 0.05)
    out = step_push(lone_square, a).get(0).pose
    gap = 0.124 - (0.109 + 0.01)
    assert out.x - 0.144 == pytest.approx(0.05 - gap, abs=1.5e-3)
    assert abs(out.y - 0.144) < 1e-9
    assert abs(out.theta) < 1e-6


def test_abutting_squares_match_fine_substep_reference():
    st0 = scene([box(0, 0.04, 0.04, 0.10, 0.144), box(1, 0.04, 0.04, 0.14, 0.144)], target=0)
    a = PushAction((0.065, 0.144), (1.0, 0.0), 0.06)
    coarse = step_push(fresh(st0), a)
    fine = step_push(fresh(st0), a, SimConfig(substep=1e-4))
    for o in coarse.objects:
        assert math.dist(o.centroid, fine.get(o.object_id).centroid) <= 1e-3
    shift = centroid_shift(st0, coarse)
    assert shift[0] > 0.03 and shift[1] > 0.03
    assert shift[0] >= shift[1] - 1e-3
    assert coarse.max_penetration() <= 1e-4


def test_push_starting_inside_object_is_an_error(lone_square):
    with pytest.raises(InvalidPushError):
        step_push(lone_square, PushAction((0.144, 0.144), (1.0, 0.0), 0.05))


def test_push_out_of_workspace_is_flagged():
    st0 = scene([box(0, 0.04, 0.04, 0.26, 0.144)], target=0)
    out = step_push(st0, PushAction((0.225, 0.144), (1.0, 0.0), 0.08))
    assert out.failed and out.out_of_bounds == (0,)
    assert not st0.failed


def test_determinism_on_fresh_states():
    rng = np.random.default_rng(3)
    for st0 in SUITE[:5]:
        a = random_push(st0, rng)
        first = step_push(fresh(st0), a).digest()
        for _ in range(100 // 5):
            assert step_push(fresh(st0), a).digest() == first


def test_memoised_successor_is_identical(lone_square):
    a = PushAction((0.109, 0.144), (1.0, 0.0), 0.05)
    assert step_push(lone_square, a) is step_push(lone_square, a)


def test_friction_scale_must_be_positive():
    with pytest.raises(ValueError):
        ObjectState(0, Shape.box(0.04, 0.04), Pose2(), friction_scale=0.0)


# ---------------------------------------------------------------- invariants

@settings(max_examples=150)
@given(st.integers(0, len(SUITE) - 1), st.integers(0, 2**31))
def test_push_invariants(case, seed):
    st0 = SUITE[case]
    a = random_push(st0, np.random.default_rng(seed))
    if a is None:
        return
    out = step_push(st0, a)
    assert out.max_penetration() <= 1e-4
    for oid, d in centroid_shift(st0, out).items():
        assert d <= a.distance + 1e-3, oid


def test_wedged_block_never_outruns_the_pusher():
    # object 2 rotates as it is pushed and its corner squeezes the small block 4
    # forward; without a travel limit the block gains about 1.7 mm on the pusher
    st0 = generate_retrieval_scene(10)
    a = PushAction((0.07334709053338222, 0.2065778991152253), (0.3155146480795055, -0.9489207063012514),
                   0.0457718625096706)
    out = step_push(st0, a)
    shift = centroid_shift(st0, out)
    assert shift[4] > 0.04
    assert max(shift.values()) <= a.distance + 1e-3
    assert out.max_penetration() <= 1e-4


# ---------------------------------------------------------------- step_batch

def test_batch_of_one_equals_step_push(lone_square):
    a = PushAction((0.109, 0.144), (1.0, 0.0), 0.05)
    out = step_batch(SimBatch([fresh(lone_square)]), [a])
    assert out.states[0].digest() == step_push(fresh(lone_square), a).digest()


def test_batch_of_identical_pairs_is_bit_identical():
    st0 = SUITE[0]
    a = random_push(st0, np.random.default_rng(5))
    out = step_batch(SimBatch([fresh(st0) for _ in range(8)]), [a] * 8)
    assert len({s.digest() for s in out.states}) == 1


def test_batch_matches_serial_loop():
    rng = np.random.default_rng(17)
    states, actions = [], []
    for i in range(100):
        s = SUITE[i % len(SUITE)]
        states.append(s)
        actions.append(None if i % 10 == 9 else random_push(s, rng))
    out = step_batch(SimBatch([fresh(s) for s in states]), actions)
    for s, a, got in zip(states, actions, out.states):
        want = fresh(s) if a is None else step_push(fresh(s), a)
        assert got.digest() == want.digest()


def test_batch_misalignment_is_an_error(lone_square):
    with pytest.raises(ValueError):
        step_batch(SimBatch([lone_square, lone_square]), [None])


# ---------------------------------------------------------------- pick-n-place

def remp_pair():
    return scene([box(1, 0.1, 0.1, 0.2, 0.2), box(2, 0.1, 0.1, 0.5, 0.2)], ws=REMP_WS)


def test_pick_place_moves_only_that_object():
    st0 = remp_pair()
    out = apply_pick_place(st0, 1, Pose2(0.2, 0.4, 0.3))
    assert out.get(1).pose == Pose2(0.2, 0.4, 0.3)
    assert out.get(2).pose == st0.get(2).pose


def test_pick_place_onto_another_object_fails():
    with pytest.raises(PlacementError):
        apply_pick_place(remp_pair(), 1, Pose2(0.45, 0.2))


def test_pick_place_with_small_clearance_is_accepted():
    st0 = remp_pair()
    place = Pose2(0.5 - 0.1 - 1e-5, 0.2)
    out = apply_pick_place(st0, 1, place)
    # independent check: the two footprints are disjoint
    a, b = out.get(1).footprint()[0], out.get(2).footprint()[0]
    assert overlap(a, b) is None


def test_push_only_object_cannot_be_picked():
    st0 = scene([box(1, 0.1, 0.1, 0.2, 0.2, movability=PUSH_ONLY)], ws=REMP_WS)
    with pytest.raises(PlacementError):
        apply_pick_place(st0, 1, Pose2(0.5, 0.3))


# ---------------------------------------------------------------- drags

def line(a, b, n):
    return [Pose2(a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t) for t in np.linspace(0, 1, n + 1)]


def test_straight_drag_lands_on_last_waypoint():
    st0 = remp_pair()
    wps = line((0.2, 0.2), (0.2, 0.4), 10)
    out = apply_push_trajectory(st0, 1, wps)
    assert out.get(1).pose == wps[-1]
    assert out.get(2).pose == st0.get(2).pose


def test_drag_through_obstacle_fails():
    with pytest.raises(TrajectoryError):
        apply_push_trajectory(remp_pair(), 1, line((0.2, 0.2), (0.65, 0.2), 30))


def test_l_shaped_drag_with_two_mm_clearance():
    # wall below the corridor: object 1 slides right 2 mm above it, then up
    wall = ObjectState(2, Shape((ConvexPolygon.rectangle(0.3, 0.05, (0.35, 0.025)),)), Pose2())
    st0 = scene([box(1, 0.1, 0.1, 0.1, 0.102), wall], ws=REMP_WS)
    st0 = st0.with_object_pose(1, Pose2(0.1, 0.05 + 0.05 + 0.002))
    wps = line((0.1, 0.102), (0.6, 0.102), 25) + line((0.6, 0.102), (0.6, 0.3), 10)[1:]
    out = apply_push_trajectory(st0, 1, wps)
    assert out.get(1).pose == wps[-1]
    # dense oracle: every 1 mm along the path the footprints stay apart
    for p, q in zip(wps, wps[1:]):
        for t in np.linspace(0, 1, 21):
            pose = Pose2(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
            assert overlap(st0.get(1).footprint(pose)[0], wall.footprint()[0]) is None
