import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from shapely.geometry import Polygon

from clutterplan.geometry import ConvexPolygon, Pose2, Shape
from clutterplan.grasp import (DEFAULT_GRIPPER, GripperModel, best_grasp, grasp_centers, grasp_score,
                               grasp_table, is_graspable)
from clutterplan.physics import ObjectState
from clutterplan.scenes import generate_retrieval_scene

from conftest import RETRIEVAL_WS, box, fresh, scene

C = (0.144, 0.144)


def naive_table(state, target_id, g: GripperModel = DEFAULT_GRIPPER):
    """Exhaustive reference: every (center, angle) pair against every obstacle
    part with shapely, no pruning or shared work."""
    tgt = state.get(target_id)
    pts = [v for p in tgt.footprint() for v in p.vertices]
    obstacles = [Polygon(p.vertices) for o in state.objects if o.object_id != target_id for p in o.footprint()]
    ws = state.workspace
    half = g.stroke / 2
    feasible, margin = [], []
    for cx, cy in grasp_centers(state, target_id, g):
        for k in range(g.n_angles):
            phi = 2 * math.pi * k / g.n_angles
            u = (math.cos(phi), math.sin(phi))
            w = (-u[1], u[0])
            if any(abs((x - cx) * u[0] + (y - cy) * u[1]) > half - g.clearance for x, y in pts):
                feasible.append(0)
                margin.append(-1.0)
                continue

            def finger(side, u0, u1, w1):
                corners = [(u0, -w1), (u1, -w1), (u1, w1), (u0, w1)]
                return Polygon([(cx + side * a * u[0] + side * b * w[0], cy + side * a * u[1] + side * b * w[1])
                                for a, b in corners])

            fat = [finger(s, half - g.clearance, half + g.finger_thickness + g.clearance,
                          g.finger_length / 2 + g.clearance) for s in (1, -1)]
            thin = [finger(s, half, half + g.finger_thickness, g.finger_length / 2) for s in (1, -1)]
            inside = all(ws.xmin <= x <= ws.xmax and ws.ymin <= y <= ws.ymax
                         for f in fat for x, y in f.exterior.coords)
            hit = any(f.intersection(o).area > 0.0 for f in fat for o in obstacles)
            ok = inside and not hit
            feasible.append(int(ok))
            margin.append(min((f.distance(o) for f in thin for o in obstacles), default=math.inf) if ok else -1.0)
    return feasible, margin


def ring(target_w=0.04, gap=0.0):
    """Target boxed in by four touching walls."""
    t = 0.03
    h = target_w / 2 + gap
    walls = [box(1, 2 * h + 2 * t, t, C[0], C[1] + h + t / 2), box(2, 2 * h + 2 * t, t, C[0], C[1] - h - t / 2),
             box(3, t, 2 * h, C[0] + h + t / 2, C[1]), box(4, t, 2 * h, C[0] - h - t / 2, C[1])]
    return scene([box(0, target_w, target_w, *C)] + walls, target=0)


# ---------------------------------------------------------------- score

def test_lone_target_scores_one(lone_square):
    assert grasp_score(lone_square, 0) == 1.0


def test_ringed_target_scores_zero():
    assert grasp_score(ring(), 0) == 0.0
    assert best_grasp(ring(), 0) is None


def open_face_scene():
    """A 0.07 x 0.02 bar fits the stroke only when the fingers close along y.
    Touching walls left and right, posts beside the finger paths of the
    off-center candidates and caps beyond the shifted finger tips leave just
    angles 4 and 12 at the centroid."""
    tgt = box(0, 0.07, 0.02, *C)
    walls = [box(1, 0.03, 0.10, C[0] - 0.05, C[1]), box(2, 0.03, 0.10, C[0] + 0.05, C[1])]
    posts = [box(3 + i, 0.02, 0.026, C[0] + dx, C[1] + dy)
             for i, (dx, dy) in enumerate([(-0.024, -0.037), (-0.024, 0.037), (0.024, -0.037), (0.024, 0.037)])]
    caps = [box(7 + i, 0.04, 0.01, C[0], C[1] + s * 0.0665) for i, s in enumerate((-1, 1))]
    return scene([tgt] + walls + posts + caps, target=0)


def test_open_face_admits_two_angles_at_center_only():
    st0 = open_face_scene()
    assert st0.max_penetration() == 0.0
    t = grasp_table(st0, 0)
    feas = [i for i, f in enumerate(t.feasible) if f]
    assert feas == [4, 12]
    assert t.score == pytest.approx(2 / (16 * 5))
    assert naive_table(st0, 0)[0] == list(t.feasible)


def test_thin_stroke_rejects_wide_target():
    g = GripperModel(stroke=0.03)
    assert grasp_score(scene([box(0, 0.05, 0.05, *C)], 0), 0, g) == 0.0


def test_missing_target_is_an_error(lone_square):
    with pytest.raises(KeyError):
        grasp_score(lone_square, 7)


def test_gripper_validation():
    with pytest.raises(ValueError):
        GripperModel(stroke=0.0)
    with pytest.raises(ValueError):
        GripperModel(clearance=0.05)


# ---------------------------------------------------------------- threshold

def test_threshold_rule(lone_square):
    assert is_graspable(lone_square, 0, 0.9)
    assert not is_graspable(ring(), 0, 0.0)
    st0 = open_face_scene()
    s = grasp_score(st0, 0)
    assert is_graspable(st0, 0, s)           # closed threshold
    assert not is_graspable(st0, 0, min(1.0, s + 1e-9))
    with pytest.raises(ValueError):
        is_graspable(lone_square, 0, 1.5)


# ---------------------------------------------------------------- best grasp

def test_best_grasp_lone_target(lone_square):
    g = best_grasp(lone_square, 0)
    assert g.center == pytest.approx(C)
    assert g.angle_index == 0


def test_best_grasp_in_vertical_corridor():
    # walls left and right leave only grasps whose fingers close along y (90 degrees)
    tgt = box(0, 0.03, 0.03, *C)
    walls = [box(1, 0.04, 0.2, C[0] - 0.04, C[1]), box(2, 0.04, 0.2, C[0] + 0.04, C[1])]
    g = best_grasp(scene([tgt] + walls, 0), 0)
    assert g.angle_index == 4
    assert g.angle == pytest.approx(math.pi / 2)


# ---------------------------------------------------------------- oracle + properties

def random_scene(seed):
    rng = np.random.default_rng(seed)
    objs = [ObjectState(0, Shape.box(rng.uniform(0.02, 0.06), rng.uniform(0.02, 0.05)),
                        Pose2(*rng.uniform(0.11, 0.18, 2), rng.uniform(-math.pi, math.pi)))]
    for i in range(1, int(rng.integers(1, 8))):
        shp = Shape((ConvexPolygon.regular(int(rng.integers(3, 7)), rng.uniform(0.01, 0.03)),))
        cand = ObjectState(i, shp, Pose2(*rng.uniform(0.03, 0.26, 2), rng.uniform(-math.pi, math.pi)))
        trial = scene(objs + [cand], 0)
        if trial.max_penetration() == 0.0:
            objs.append(cand)
    return scene(objs, 0)


def test_matches_naive_oracle_on_200_scenes():
    nonzero = 0
    for seed in range(200):
        st0 = random_scene(seed)
        t = grasp_table(st0, 0)
        feas, marg = naive_table(st0, 0)
        assert list(t.feasible) == feas, seed
        assert t.score == sum(feas) / len(feas)
        for a, b in zip(t.margin, marg):
            assert a == pytest.approx(b, rel=1e-9, abs=1e-12)
        nonzero += 0 < t.score < 1
    assert nonzero > 20


def test_matches_naive_oracle_on_generated_scenes():
    for seed in range(5):
        st0 = generate_retrieval_scene(seed)
        assert list(grasp_table(st0, 0).feasible) == naive_table(st0, 0)[0]


@settings(max_examples=60)
@given(st.integers(0, 10_000), st.data())
def test_removing_an_obstacle_never_lowers_score(seed, data):
    st0 = random_scene(seed)
    if len(st0.objects) < 2:
        return
    victim = data.draw(st.sampled_from(st0.ids[1:]))
    assert grasp_score(st0.without(victim), 0) >= grasp_score(fresh(st0), 0)


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_score_bounds(seed):
    s = grasp_score(random_scene(seed), 0)
    assert 0.0 <= s <= 1.0
