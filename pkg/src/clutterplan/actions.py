"""Manipulation primitives shared by the planners."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2


@dataclass(frozen=True)
class PushAction:
    """Straight pusher stroke: start point, unit direction, travel distance."""

    start: tuple[float, float]
    direction: tuple[float, float]
    distance: float

    def __post_init__(self):
        if not self.distance > 0.0:
            raise ValueError("push distance must be positive")
        norm = math.hypot(*self.direction)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"push direction must be a unit vector, got norm {norm}")

    @property
    def end(self) -> tuple[float, float]:
        return (self.start[0] + self.direction[0] * self.distance,
                self.start[1] + self.direction[1] * self.distance)

    @classmethod
    def from_points(cls, start, end) -> "PushAction":
        dx, dy = end[0] - start[0], end[1] - start[1]
        d = math.hypot(dx, dy)
        return cls((float(start[0]), float(start[1])), (dx / d, dy / d), d)


@dataclass(frozen=True)
class GraspAction:
    center: tuple[float, float]
    angle_index: int
    n_angles: int = 16

    def __post_init__(self):
        if not 0 <= self.angle_index < self.n_angles:
            raise ValueError("angle_index out of range")

    @property
    def angle(self) -> float:
        return 2.0 * math.pi * self.angle_index / self.n_angles


@dataclass(frozen=True)
class PickPlaceAction:
    object_id: int
    pick: Pose2
    place: Pose2

    @property
    def distance(self) -> float:
        return math.hypot(self.place.x - self.pick.x, self.place.y - self.pick.y)


@dataclass(frozen=True)
class PushTrajectoryRequest:
    """A drag of one object to ``final``; the path is planned lazily."""

    object_id: int
    start: Pose2
    final: Pose2


@dataclass(frozen=True)
class PushTrajectory:
    object_id: int
    waypoints: tuple[Pose2, ...]

    @property
    def path_length(self) -> float:
        return sum(math.hypot(b.x - a.x, b.y - a.y)
                   for a, b in zip(self.waypoints, self.waypoints[1:]))

    @property
    def final(self) -> Pose2:
        return self.waypoints[-1]


@dataclass(frozen=True)
class RempGoal:
    """Goal poses for rearrangement with the tolerances that count as "at goal"."""

    goal_poses: dict
    pos_tol: float = 0.01
    ang_tol: float = 0.1

    def at_goal(self, object_id: int, pose: Pose2) -> bool:
        g = self.goal_poses.get(object_id)
        if g is None:
            return True
        return (math.hypot(pose.x - g.x, pose.y - g.y) <= self.pos_tol
                and abs(math.remainder(pose.theta - g.theta, 2.0 * math.pi)) <= self.ang_tol)

    def __hash__(self):
        return hash(tuple(sorted(self.goal_poses.items())))


def _pose_d(p: Pose2) -> dict:
    return {"x": p.x, "y": p.y, "theta": p.theta}


def _pose_of(d: dict) -> Pose2:
    return Pose2(d["x"], d["y"], d["theta"])


def action_to_dict(a) -> dict:
    """Plain-data form of any action, for episode logs."""
    if isinstance(a, PushAction):
        return {"type": "push", "start": list(a.start), "direction": list(a.direction), "distance": a.distance}
    if isinstance(a, GraspAction):
        return {"type": "grasp", "center": list(a.center), "angle_index": a.angle_index, "n_angles": a.n_angles}
    if isinstance(a, PickPlaceAction):
        return {"type": "pick_place", "object_id": a.object_id, "pick": _pose_d(a.pick), "place": _pose_d(a.place)}
    if isinstance(a, PushTrajectory):
        return {"type": "push_trajectory", "object_id": a.object_id,
                "waypoints": [_pose_d(w) for w in a.waypoints]}
    raise TypeError(f"cannot serialize {type(a).__name__}")


def action_from_dict(d: dict):
    kind = d.get("type")
    if kind == "push":
        return PushAction(tuple(d["start"]), tuple(d["direction"]), d["distance"])
    if kind == "grasp":
        return GraspAction(tuple(d["center"]), d["angle_index"], d.get("n_angles", 16))
    if kind == "pick_place":
        return PickPlaceAction(d["object_id"], _pose_of(d["pick"]), _pose_of(d["place"]))
    if kind == "push_trajectory":
        return PushTrajectory(d["object_id"], tuple(_pose_of(w) for w in d["waypoints"]))
    raise ValueError(f"unknown action type {kind!r}")
