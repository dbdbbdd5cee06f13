"""RRT-connect in SE(2) for dragging a single object between poses."""
from __future__ import annotations

import math
import time

import numpy as np

from . import kernels
from .actions import PushTrajectory
from .geometry import Pose2, wrap_angle
from .physics import CLEARANCE_TOL, SceneState

ANGLE_WEIGHT = 0.1        # metres per radian in the SE(2) metric
STEP_POS = 0.02           # waypoint spacing bound
STEP_ANG = math.pi / 16
CHECK_POS = 0.002         # collision-check resolution along an edge
CHECK_ANG = math.pi / 90
EXTEND = 0.03             # RRT extension step in metric units
SHORTCUTS = 200


class MotionError(ValueError):
    pass


class FootprintChecker:
    """Fast clearance test for one object against the others and the table edge."""

    def __init__(self, state: SceneState, object_id: int, tol: float = CLEARANCE_TOL):
        self.lx, self.ly, self.start = state.get(object_id).shape.packed
        self.other = state.world_without(object_id)
        ws = state.workspace
        self.box = (ws.xmin, ws.ymin, ws.xmax, ws.ymax)
        self.tol = tol

    def _first_blocked(self, poses: np.ndarray) -> int:
        o = self.other
        return kernels.first_blocked(self.lx, self.ly, self.start, poses, o.xs, o.ys, o.start, *self.box, self.tol)

    def free(self, x: float, y: float, th: float) -> bool:
        return self._first_blocked(np.array((x, y, th), dtype=np.float64)) < 0

    def edge_free(self, a, b) -> bool:
        """Straight SE(2) interpolation from ``a`` to ``b`` (both (x, y, th)), endpoints included."""
        dth = wrap_angle(b[2] - a[2])
        n = max(1, int(math.ceil(max(math.hypot(b[0] - a[0], b[1] - a[1]) / CHECK_POS,
                                     abs(dth) / CHECK_ANG))))
        t = np.arange(n + 1) / n
        poses = np.empty((n + 1, 3))
        poses[:, 0] = a[0] + t * (b[0] - a[0])
        poses[:, 1] = a[1] + t * (b[1] - a[1])
        poses[:, 2] = a[2] + t * dth
        return self._first_blocked(poses.ravel()) < 0


def _dist(a, b) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (ANGLE_WEIGHT * wrap_angle(a[2] - b[2])) ** 2)


def _steer(a, b, step: float):
    d = _dist(a, b)
    if d <= step:
        return b, True
    t = step / d
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), wrap_angle(a[2] + t * wrap_angle(b[2] - a[2]))), False


class _Tree:
    def __init__(self, root):
        self.nodes = [root]
        self.parent = [-1]
        self.arr = np.empty((64, 4))
        self._put(0, root)

    def _put(self, i, q):
        if i >= len(self.arr):
            self.arr = np.concatenate([self.arr, np.empty_like(self.arr)])
        self.arr[i] = (q[0], q[1], math.cos(q[2]), math.sin(q[2]))

    def add(self, q, parent: int) -> int:
        self.nodes.append(q)
        self.parent.append(parent)
        self._put(len(self.nodes) - 1, q)
        return len(self.nodes) - 1

    def nearest(self, q) -> int:
        n = len(self.nodes)
        a = self.arr[:n]
        dth = np.arctan2(a[:, 3] * math.cos(q[2]) - a[:, 2] * math.sin(q[2]),
                         a[:, 2] * math.cos(q[2]) + a[:, 3] * math.sin(q[2]))
        d2 = (a[:, 0] - q[0]) ** 2 + (a[:, 1] - q[1]) ** 2 + (ANGLE_WEIGHT * dth) ** 2
        return int(np.argmin(d2))

    def path_to(self, i: int) -> list:
        out = []
        while i >= 0:
            out.append(self.nodes[i])
            i = self.parent[i]
        return out[::-1]


def _extend(tree: _Tree, q, chk: FootprintChecker):
    """Returns (status, index): status is 'reached', 'advanced' or 'trapped'."""
    near = tree.nearest(q)
    new, reached = _steer(tree.nodes[near], q, EXTEND)
    if not chk.edge_free(tree.nodes[near], new):
        return "trapped", -1
    i = tree.add(new, near)
    return ("reached" if reached else "advanced"), i


def _connect(tree: _Tree, q, chk: FootprintChecker, deadline: float):
    while time.perf_counter() < deadline:
        status, i = _extend(tree, q, chk)
        if status != "advanced":
            return status, i
    return "trapped", -1


def densify(path: list, step_pos: float = STEP_POS, step_ang: float = STEP_ANG) -> list:
    out = [path[0]]
    for a, b in zip(path, path[1:]):
        dth = wrap_angle(b[2] - a[2])
        n = max(1, int(math.ceil(max(math.hypot(b[0] - a[0], b[1] - a[1]) / step_pos, abs(dth) / step_ang) - 1e-9)))
        for i in range(1, n + 1):
            t = i / n
            out.append(b if i == n else (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), wrap_angle(a[2] + t * dth)))
    return out


def _shortcut(path: list, chk: FootprintChecker, rng: np.random.Generator, attempts: int) -> list:
    path = list(path)
    for _ in range(attempts):
        if len(path) < 3:
            break
        i, j = sorted(rng.choice(len(path), size=2, replace=False))
        if j - i < 2:
            continue
        if chk.edge_free(path[i], path[j]):
            path = path[: i + 1] + path[j:]
    return path


def _as_traj(object_id: int, path: list) -> PushTrajectory:
    return PushTrajectory(object_id, tuple(Pose2(*q) for q in path))


def rrt_connect(state: SceneState, object_id: int, goal_pose: Pose2, time_limit_s: float = 2.0,
                seed: int = 0, max_iterations: int | None = None) -> PushTrajectory | None:
    """Collision-free drag of ``object_id`` to ``goal_pose``, or ``None`` on timeout."""
    chk = FootprintChecker(state, object_id)
    start = state.get(object_id).pose.as_tuple()
    goal = goal_pose.as_tuple()
    if not chk.free(*start):
        raise MotionError(f"object {object_id} starts in collision")
    if not chk.free(*goal):
        raise MotionError(f"goal pose for object {object_id} is in collision")
    if _dist(start, goal) <= 1e-12:
        return _as_traj(object_id, [start])
    rng = np.random.default_rng([seed, object_id, 0x5E2])
    if chk.edge_free(start, goal):
        path = [start, goal]
    else:
        path = _plan(chk, start, goal, rng, time_limit_s, max_iterations, state)
        if path is None:
            return None
        path = _shortcut(path, chk, rng, SHORTCUTS)
    traj = _as_traj(object_id, densify(path))
    if not validate_trajectory(state, traj):
        # densified points are interpolations of checked edges, so this should not trigger
        return None
    return traj


def _plan(chk, start, goal, rng, time_limit_s, max_iterations, state):
    deadline = time.perf_counter() + time_limit_s
    ta, tb = _Tree(start), _Tree(goal)
    a_is_start = True
    ws = state.workspace
    it = 0
    while time.perf_counter() < deadline:
        it += 1
        if max_iterations is not None and it > max_iterations:
            return None
        q = (rng.uniform(ws.xmin, ws.xmax), rng.uniform(ws.ymin, ws.ymax), rng.uniform(-math.pi, math.pi))
        status, ia = _extend(ta, q, chk)
        if status != "trapped":
            status_b, ib = _connect(tb, ta.nodes[ia], chk, deadline)
            if status_b == "reached":
                pa, pb = ta.path_to(ia), tb.path_to(ib)
                path = pa + pb[::-1][1:]
                return path if a_is_start else path[::-1]
        ta, tb = tb, ta
        a_is_start = not a_is_start
    return None


def validate_trajectory(state: SceneState, traj: PushTrajectory, tol: float = CLEARANCE_TOL) -> bool:
    """Every densified footprint keeps at least ``tol`` clearance from the other
    objects and stays on the table; the path must start at the current pose."""
    if not traj.waypoints:
        return False
    obj = state.get(traj.object_id)
    first = traj.waypoints[0]
    if math.hypot(first.x - obj.pose.x, first.y - obj.pose.y) > 1e-9 or abs(wrap_angle(first.theta - obj.pose.theta)) > 1e-9:
        return False
    chk = FootprintChecker(state, traj.object_id, tol)
    pts = [w.as_tuple() for w in traj.waypoints]
    if not chk.free(*pts[0]):
        return False
    return all(chk.edge_free(a, b) for a, b in zip(pts, pts[1:]))
