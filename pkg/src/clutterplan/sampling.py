"""Candidate action sets for the retrieval and rearrangement planners."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import shapely
from scipy import ndimage
from shapely.geometry import Polygon as _ShapelyPolygon
from shapely.ops import polylabel, unary_union

from .actions import PickPlaceAction, PushAction, PushTrajectoryRequest, RempGoal
from .geometry import Pose2, contour_points, wrap_angle
from .physics import PICK_OR_PUSH, PUSH_ONLY, SceneState

RETRACT_STEP = 0.0025
RETRACT_MAX = 0.05
NEAR_SIGMA_POS = 0.08
NEAR_SIGMA_ANG = math.pi / 8
DEDUP_POS = 1e-3
DEDUP_ANG = 1e-2
REACH_CELL = 0.005


@dataclass(frozen=True)
class SamplerConfig:
    n_contour: int = 8
    use_pca_pushes: bool = True
    push_distance: float = 0.05
    pusher_radius: float = 0.01
    n_place_random: int = 10
    n_place_near: int = 10
    grid_enabled: bool = True
    reachability_filter: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.n_contour, self.n_place_random, self.n_place_near) < 0:
            raise ValueError("sampler counts must be >= 0")
        if not (self.grid_enabled or self.n_place_random or self.n_place_near):
            raise ValueError("enable at least one place-pose criterion")


def state_seed(state: SceneState, *extra: int) -> int:
    """Stable 64-bit seed from the exact poses plus caller-supplied integers."""
    h = hashlib.blake2b(digest_size=8)
    h.update(state.digest().encode())
    for e in extra:
        h.update(int(e).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


# ---------------------------------------------------------------- retrieval pushes

def _retracted(state: SceneState, point, direction, cfg: SamplerConfig) -> PushAction | None:
    """Back the start off against ``direction`` until the pusher disc is free."""
    n = int(round(RETRACT_MAX / RETRACT_STEP))
    for i in range(n + 1):
        t = i * RETRACT_STEP
        s = (point[0] - direction[0] * t, point[1] - direction[1] * t)
        if state.pusher_free(s, cfg.pusher_radius):
            return PushAction(s, (direction[0], direction[1]), cfg.push_distance)
    return None


def _pca_seeds(obj):
    """Start points on the supporting lines for pushes along the feature axes."""
    ang = obj.shape.feature_angle + obj.pose.theta
    cx, cy = obj.centroid
    pts = [v for p in obj.shape.world_parts(obj.pose) for v in p.vertices]
    out = []
    for a in (ang, ang + math.pi, ang + 0.5 * math.pi, ang - 0.5 * math.pi):
        d = (math.cos(a), math.sin(a))
        ext = max(-(x - cx) * d[0] - (y - cy) * d[1] for x, y in pts)
        out.append(((cx - d[0] * ext, cy - d[1] * ext), d))
    return out


def sample_retrieval_pushes(state: SceneState, cfg: SamplerConfig = SamplerConfig()) -> list[PushAction]:
    """PCA pushes then contour pushes per object, in id order, with blocked starts dropped."""
    key = ("pushes", cfg)
    if key in state._memo:
        return state._memo[key]
    out: list[PushAction] = []
    for point, d in push_seeds(state, cfg):
        a = _retracted(state, point, d, cfg)
        if a is not None:
            out.append(a)
    state._memo[key] = out
    return out


# ---------------------------------------------------------------- rearrangement poses

def _grid_poses(state: SceneState, object_id: int) -> list[Pose2]:
    """Tile the workspace with the object's minimum-area box, axis aligned."""
    shape = state.get(object_id).shape
    ang, w, h, (bx, by) = shape.min_area_box
    ws = state.workspace
    nx, ny = int(math.floor(ws.width / w + 1e-9)), int(math.floor(ws.height / h + 1e-9))
    th = wrap_angle(-ang)
    c, s = math.cos(th), math.sin(th)
    ox, oy = c * bx - s * by, s * bx + c * by
    out = []
    for j in range(ny):
        for i in range(nx):
            x = ws.xmin + (i + 0.5) * ws.width / nx
            y = ws.ymin + (j + 0.5) * ws.height / ny
            out.append(Pose2(x - ox, y - oy, th))
    return out


def _trunc_normal(rng: np.random.Generator, mean: float, sigma: float) -> float:
    while True:
        z = rng.standard_normal()
        if abs(z) <= 2.0:
            return mean + sigma * z


def _near_any(p: Pose2, poses: Sequence[Pose2]) -> bool:
    for q in poses:
        # the box test is implied by the distance test and much cheaper
        if abs(p.x - q.x) > DEDUP_POS or abs(p.y - q.y) > DEDUP_POS:
            continue
        if math.hypot(p.x - q.x, p.y - q.y) <= DEDUP_POS and abs(wrap_angle(p.theta - q.theta)) <= DEDUP_ANG:
            return True
    return False


def _dedup(poses: Sequence[Pose2]) -> list[Pose2]:
    out: list[Pose2] = []
    for p in poses:
        if not _near_any(p, out):
            out.append(p)
    return out


@dataclass(frozen=True)
class PlacePoses:
    goal: list
    grid: list
    near_goal: list
    near_current: list
    random: list

    def ordered(self) -> list[Pose2]:
        return _dedup(self.goal + self.grid + self.near_goal + self.near_current + self.random)


def _near(state, object_id, center: Pose2, n, rng, valid) -> list[Pose2]:
    out = []
    for _ in range(4 * n):
        if len(out) >= n:
            break
        p = Pose2(_trunc_normal(rng, center.x, NEAR_SIGMA_POS), _trunc_normal(rng, center.y, NEAR_SIGMA_POS),
                  _trunc_normal(rng, center.theta, NEAR_SIGMA_ANG))
        if valid(p):
            out.append(p)
    return out


def place_pose_tiers(state: SceneState, object_id: int, goal_pose: Pose2 | None,
                     cfg: SamplerConfig = SamplerConfig(), seed: int | None = None,
                     goal_only: bool = False) -> PlacePoses:
    """All place-pose tiers; ``goal_only`` stops after the near-goal draws
    (they come first from the generator, so they match the full call)."""
    obj = state.get(object_id)
    rng = np.random.default_rng(state_seed(state, cfg.rng_seed, object_id) if seed is None else seed)
    reach = _reachable_fn(state, object_id) if (obj.movability == PUSH_ONLY and cfg.reachability_filter) else None

    def valid(p: Pose2) -> bool:
        return state.footprint_free(object_id, p) and (reach is None or reach(p))

    goal = [goal_pose] if goal_pose is not None and valid(goal_pose) else []
    half = cfg.n_place_near // 2
    near_goal = _near(state, object_id, goal_pose, half, rng, valid) if goal_pose is not None else []
    if goal_only:
        return PlacePoses(goal, [], near_goal, [], [])
    grid = [p for p in _grid_poses(state, object_id) if valid(p)] if cfg.grid_enabled else []
    near_cur = _near(state, object_id, obj.pose, cfg.n_place_near - len(near_goal), rng, valid)
    ws = state.workspace
    rand = []
    for _ in range(4 * cfg.n_place_random):
        if len(rand) >= cfg.n_place_random:
            break
        p = Pose2(rng.uniform(ws.xmin, ws.xmax), rng.uniform(ws.ymin, ws.ymax), rng.uniform(-math.pi, math.pi))
        if valid(p):
            rand.append(p)
    return PlacePoses(goal, grid, near_goal, near_cur, rand)


def sample_place_poses(state: SceneState, object_id: int, goal_pose: Pose2 | None,
                       cfg: SamplerConfig = SamplerConfig(), seed: int | None = None) -> list[Pose2]:
    """Goal first (when free), then grid, near and uniform poses; duplicates dropped."""
    return place_pose_tiers(state, object_id, goal_pose, cfg, seed).ordered()


def _reachable_fn(state: SceneState, object_id: int):
    """Necessary condition for a drag: the object's inscribed disc can translate
    from its current position to the candidate's on a coarse free-space grid."""
    key = ("reach", object_id)
    if key in state._memo:
        return state._memo[key]
    obj = state.get(object_id)
    body = unary_union([_ShapelyPolygon(p.vertices) for p in obj.shape.parts])
    if body.geom_type != "Polygon":
        body = body.convex_hull
    anchor = polylabel(body, tolerance=1e-4)
    r_in = float(body.exterior.distance(anchor))
    ax, ay = float(anchor.x), float(anchor.y)
    others = state.world_without(object_id)
    obst = unary_union([_ShapelyPolygon(list(zip(others.xs[a:b], others.ys[a:b])))
                        for a, b in zip(others.start[:-1], others.start[1:])]) if len(others.xs) else None
    ws = state.workspace
    nx = max(1, int(math.ceil(ws.width / REACH_CELL)))
    ny = max(1, int(math.ceil(ws.height / REACH_CELL)))
    gx = ws.xmin + (np.arange(nx) + 0.5) * ws.width / nx
    gy = ws.ymin + (np.arange(ny) + 0.5) * ws.height / ny
    X, Y = np.meshgrid(gx, gy)
    # a disc of radius r_in - cell/2 must fit; the slack keeps the filter permissive
    # rasterize obstacles, then the distance transform gives clearance to within a cell
    r = max(r_in - 1.5 * REACH_CELL, 0.0)
    free = (X - ws.xmin >= r) & (ws.xmax - X >= r) & (Y - ws.ymin >= r) & (ws.ymax - Y >= r)
    if obst is not None and not obst.is_empty:
        shapely.prepare(obst)
        occupied = shapely.contains_xy(obst, X, Y)
        d = ndimage.distance_transform_edt(~occupied, sampling=(ws.height / ny, ws.width / nx))
        free &= d >= r
    labels, _ = ndimage.label(free)

    def cell(px, py):
        i = min(nx - 1, max(0, int((px - ws.xmin) / ws.width * nx)))
        j = min(ny - 1, max(0, int((py - ws.ymin) / ws.height * ny)))
        return labels[j, i]

    sx, sy = obj.pose.apply((ax, ay))
    home = cell(sx, sy)

    def reachable(p: Pose2) -> bool:
        if home == 0:
            return True
        return cell(*p.apply((ax, ay))) == home

    state._memo[key] = reachable
    return reachable


def _movable_ids(state: SceneState, goal: RempGoal) -> list[int]:
    return [o.object_id for o in state.objects if o.object_id in goal.goal_poses]


def _action(state: SceneState, object_id: int, place: Pose2):
    obj = state.get(object_id)
    if obj.movability == PICK_OR_PUSH:
        return PickPlaceAction(object_id, obj.pose, place)
    return PushTrajectoryRequest(object_id, obj.pose, place)


def sample_remp_actions(state: SceneState, goal: RempGoal, tier: str = "expansion",
                        cfg: SamplerConfig = SamplerConfig()) -> list:
    """Pick-n-place actions for pickable objects, drag requests for push-only ones.

    The simulation tier keeps only direct-to-goal moves and the first half of
    the near-goal samples, so it is a subset of the expansion tier.
    """
    if tier not in ("expansion", "simulation"):
        raise ValueError(f"unknown tier {tier!r}")
    key = ("remp", tier, goal, cfg)
    if key in state._memo:
        return state._memo[key]
    out = []
    for oid in _movable_ids(state, goal):
        gp = goal.goal_poses[oid]
        at = goal.at_goal(oid, state.get(oid).pose)
        if tier == "expansion":
            poses = place_pose_tiers(state, oid, None if at else gp, cfg).ordered()
        else:
            tiers = place_pose_tiers(state, oid, None if at else gp, cfg, goal_only=True)
            grid = _grid_poses(state, oid) if cfg.grid_enabled else []
            # drop near-goal draws that the full list would merge into a grid pose
            poses = [p for p in _dedup(tiers.goal + tiers.near_goal)
                     if p in tiers.goal or not _near_any(p, grid)]
        out.extend(_action(state, oid, p) for p in poses)
    state._memo[key] = out
    return out


def push_seeds(state: SceneState, cfg: SamplerConfig = SamplerConfig()) -> list:
    """Unretracted (point, direction) seeds in the same order as the sampled pushes."""
    key = ("seeds", cfg)
    if key not in state._memo:
        seeds = []
        for obj in state.objects:
            if cfg.use_pca_pushes:
                seeds += _pca_seeds(obj)
            if cfg.n_contour:
                seeds += contour_points(obj.shape, obj.pose, cfg.n_contour)
        state._memo[key] = seeds
    return state._memo[key]


def random_push(state: SceneState, rng: np.random.Generator, cfg: SamplerConfig = SamplerConfig(),
                count: int = 1) -> list[PushAction]:
    """Up to ``count`` distinct pushes drawn uniformly from the sampled set.

    Seeds are visited in a random order and retracted lazily, which gives the
    same distribution as drawing from ``sample_retrieval_pushes`` without
    having to build the whole list.
    """
    seeds = push_seeds(state, cfg)
    out = []
    for i in rng.permutation(len(seeds)):
        a = _retracted(state, seeds[i][0], seeds[i][1], cfg)
        if a is not None:
            out.append(a)
            if len(out) >= count:
                break
    return out
