"""Geometric top-down two-finger grasp oracle for the target object."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .actions import GraspAction
from .geometry import contour_points
from .physics import SceneState


@dataclass(frozen=True)
class GripperModel:
    """Finger pads are ``finger_length`` wide (across the closing axis) and
    ``finger_thickness`` deep (along it); ``stroke`` is the maximum opening."""

    finger_length: float = 0.022
    finger_thickness: float = 0.0145
    stroke: float = 0.085
    clearance: float = 0.002
    n_angles: int = 16
    n_contour: int = 4

    def __post_init__(self):
        for name in ("finger_length", "finger_thickness", "stroke"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.clearance < 0.0 or 2.0 * self.clearance >= self.stroke:
            raise ValueError("clearance must be >= 0 and leave room inside the stroke")
        if self.n_angles < 1 or self.n_contour < 0:
            raise ValueError("n_angles >= 1 and n_contour >= 0 required")


DEFAULT_GRIPPER = GripperModel()


@dataclass(frozen=True)
class GraspTable:
    centers: tuple[tuple[float, float], ...]
    feasible: tuple[int, ...]
    margin: tuple[float, ...]
    n_angles: int

    @property
    def score(self) -> float:
        return sum(self.feasible) / len(self.feasible)


def grasp_centers(state: SceneState, target_id: int, gripper: GripperModel = DEFAULT_GRIPPER):
    """Centroid first, then the midpoints between centroid and contour samples."""
    obj = state.get(target_id)
    cx, cy = obj.centroid
    out = [(cx, cy)]
    if gripper.n_contour:
        for (px, py), _ in contour_points(obj.shape, obj.pose, gripper.n_contour):
            out.append((0.5 * (cx + px), 0.5 * (cy + py)))
    return out


def grasp_table(state: SceneState, target_id: int, gripper: GripperModel = DEFAULT_GRIPPER) -> GraspTable:
    if target_id is None:
        raise KeyError("no target object")
    key = ("grasp", target_id, gripper)
    hit = state._memo.get(key)
    if hit is not None:
        return hit
    mine = state.world_of(target_id)
    if len(mine.xs) == 0:
        raise KeyError(f"target {target_id} not in scene")
    other = state.world_without(target_id)
    centers = grasp_centers(state, target_id, gripper)
    flat = np.asarray([v for c in centers for v in c], dtype=np.float64)
    ws = state.workspace
    feas, marg = kernels.grasp_table(
        mine.xs, mine.ys, other.xs, other.ys, other.start, flat, gripper.n_angles,
        gripper.stroke, gripper.finger_length, gripper.finger_thickness, gripper.clearance,
        ws.xmin, ws.ymin, ws.xmax, ws.ymax)
    table = GraspTable(tuple(centers), tuple(int(f) for f in feas), tuple(float(m) for m in marg),
                       gripper.n_angles)
    state._memo[key] = table
    return table


def grasp_score(state: SceneState, target_id: int, gripper: GripperModel = DEFAULT_GRIPPER) -> float:
    """Fraction of (center, angle) configurations that are feasible."""
    return grasp_table(state, target_id, gripper).score


def is_graspable(state: SceneState, target_id: int, threshold: float,
                 gripper: GripperModel = DEFAULT_GRIPPER) -> bool:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    s = grasp_score(state, target_id, gripper)
    return s > 0.0 and s >= threshold


def best_grasp(state: SceneState, target_id: int,
               gripper: GripperModel = DEFAULT_GRIPPER) -> GraspAction | None:
    """Feasible configuration with the largest obstacle clearance.

    Ties go to the lowest angle index, then to the earliest center.
    """
    t = grasp_table(state, target_id, gripper)
    best, best_key = None, None
    nc = len(t.centers)
    for k in range(t.n_angles):
        for c in range(nc):
            i = c * t.n_angles + k
            if not t.feasible[i]:
                continue
            if best_key is None or t.margin[i] > best_key:
                best, best_key = (c, k), t.margin[i]
    if best is None:
        return None
    return GraspAction(t.centers[best[0]], best[1], t.n_angles)
