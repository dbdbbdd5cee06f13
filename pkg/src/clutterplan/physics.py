"""Deterministic quasi-static push simulation over pose-only scene states.

The pusher is a disc swept along the push segment in short substeps.  At
every substep penetrations are removed by positional projection: the pusher
translates an object along the minimum translation vector and turns it about
its centroid in proportion to the lever arm, and object pairs are pushed
apart half-and-half, in ascending id order.  States carry no velocity, so
the simulator is memoryless between calls.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .actions import PushAction, PushTrajectory
from .geometry import Pose2, Shape, Workspace
from .parallel import SERIAL, WorkerPool

PICK_OR_PUSH = "pick_or_push"
PUSH_ONLY = "push_only"
MOVABILITY = (PICK_OR_PUSH, PUSH_ONLY)

CONTACT_TOL = 1e-9      # pusher start / contact resolution threshold
CLEARANCE_TOL = 1e-6    # placements and drags must keep at least this gap
PENETRATION_TOL = 1e-4  # allowed residual overlap in returned states


class SimulationError(Exception):
    pass


class InvalidPushError(SimulationError):
    """The pusher would start inside an object."""


class PlacementError(SimulationError):
    pass


class TrajectoryError(SimulationError):
    pass


@dataclass(frozen=True)
class SimConfig:
    pusher_radius: float = 0.01
    substep: float = 1e-3
    rotation_gain: float = 0.5
    contact_iterations: int = 32
    settle_iterations: int = 256


@dataclass(frozen=True)
class ObjectState:
    object_id: int
    shape: Shape
    pose: Pose2
    movability: str = PICK_OR_PUSH
    friction_scale: float = 1.0

    def __post_init__(self):
        if self.movability not in MOVABILITY:
            raise ValueError(f"movability must be one of {MOVABILITY}")
        if not self.friction_scale > 0.0:
            raise ValueError("friction_scale must be > 0")

    @property
    def centroid(self) -> tuple[float, float]:
        return self.pose.apply(self.shape.centroid)

    def footprint(self, pose: Pose2 | None = None):
        return self.shape.world_parts(self.pose if pose is None else pose)


@dataclass(frozen=True)
class PolySet:
    """World-frame polygons packed for the kernels."""

    xs: np.ndarray
    ys: np.ndarray
    start: np.ndarray
    owner: np.ndarray

    @classmethod
    def empty(cls) -> "PolySet":
        return cls(np.zeros(0), np.zeros(0), np.zeros(1, dtype=np.intc), np.zeros(0, dtype=np.intc))

    @classmethod
    def from_polygons(cls, polys, owner: Sequence[int] | None = None) -> "PolySet":
        polys = list(polys)
        if not polys:
            return cls.empty()
        xs = np.concatenate([p.xs for p in polys])
        ys = np.concatenate([p.ys for p in polys])
        start = np.zeros(len(polys) + 1, dtype=np.intc)
        start[1:] = np.cumsum([len(p.vertices) for p in polys])
        own = np.asarray(owner if owner is not None else range(len(polys)), dtype=np.intc)
        return cls(xs, ys, start, own)

    @classmethod
    def of_shape(cls, shape: Shape, pose: Pose2) -> "PolySet":
        wx, wy = shape.world_arrays(pose)
        start = shape.packed[2]
        return cls(wx, wy, start, np.arange(len(start) - 1, dtype=np.intc))

    def select(self, keep) -> "PolySet":
        """Sub-set of parts whose owner satisfies ``keep(owner)``."""
        idx = [p for p in range(len(self.start) - 1) if keep(int(self.owner[p]))]
        if not idx:
            return PolySet.empty()
        xs = np.concatenate([self.xs[self.start[p]:self.start[p + 1]] for p in idx])
        ys = np.concatenate([self.ys[self.start[p]:self.start[p + 1]] for p in idx])
        start = np.zeros(len(idx) + 1, dtype=np.intc)
        start[1:] = np.cumsum([self.start[p + 1] - self.start[p] for p in idx])
        return PolySet(xs, ys, start, self.owner[idx].copy())


@dataclass(frozen=True)
class _BodyPack:
    lx: np.ndarray
    ly: np.ndarray
    pstart: np.ndarray
    ostart: np.ndarray
    owner: np.ndarray
    vobj: np.ndarray
    cxl: np.ndarray
    cyl: np.ndarray
    rho2: np.ndarray
    rmax: np.ndarray
    fscale: np.ndarray


def _body_pack(objects: Sequence[ObjectState]) -> _BodyPack:
    lx, ly, pstart, ostart, owner, vobj = [], [], [0], [0], [], []
    for i, obj in enumerate(objects):
        for part in obj.shape.parts:
            lx.extend(part.xs)
            ly.extend(part.ys)
            vobj.extend([i] * len(part.vertices))
            pstart.append(pstart[-1] + len(part.vertices))
            owner.append(obj.object_id)
        ostart.append(ostart[-1] + len(obj.shape.parts))
    f64 = lambda v: np.asarray(v, dtype=np.float64)
    i32 = lambda v: np.asarray(v, dtype=np.intc)
    return _BodyPack(
        f64(lx), f64(ly), i32(pstart), i32(ostart), i32(owner), np.asarray(vobj, dtype=np.intp),
        f64([o.shape.centroid[0] for o in objects]), f64([o.shape.centroid[1] for o in objects]),
        f64([o.shape.gyration_sq for o in objects]), f64([o.shape.max_radius for o in objects]),
        f64([o.friction_scale for o in objects]),
    )


@dataclass(frozen=True)
class SceneState:
    """Poses of all objects at one instant; objects are kept sorted by id."""

    workspace: Workspace
    objects: tuple[ObjectState, ...]
    target_id: int | None = None
    rng_seed: int = 0
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        objs = tuple(sorted(self.objects, key=lambda o: o.object_id))
        ids = [o.object_id for o in objs]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")
        if self.target_id is not None and self.target_id not in ids:
            raise ValueError(f"target {self.target_id} not among objects")
        object.__setattr__(self, "objects", objs)

    def __hash__(self):
        return id(self)

    def __getstate__(self):
        # caches hold closures and successor states; workers rebuild what they need
        return {k: self.__dict__[k] for k in ("workspace", "objects", "target_id", "rng_seed")}

    def __setstate__(self, d):
        self.__dict__.update(d)
        self.__dict__["_memo"] = {}

    @cached_property
    def index(self) -> dict[int, int]:
        return {o.object_id: i for i, o in enumerate(self.objects)}

    def get(self, object_id: int) -> ObjectState:
        try:
            return self.objects[self.index[object_id]]
        except KeyError:
            raise KeyError(f"unknown object id {object_id}") from None

    @property
    def ids(self) -> list[int]:
        return [o.object_id for o in self.objects]

    @cached_property
    def pack(self) -> _BodyPack:
        return self._memo.get("pack") or _body_pack(self.objects)

    def pose_array(self) -> np.ndarray:
        return np.array([v for o in self.objects for v in o.pose.as_tuple()], dtype=np.float64)

    @cached_property
    def world(self) -> PolySet:
        if not self.objects:
            return PolySet.empty()
        pk = self.pack
        xs = np.array([o.pose.x for o in self.objects])
        ys = np.array([o.pose.y for o in self.objects])
        c = np.array([math.cos(o.pose.theta) for o in self.objects])
        s = np.array([math.sin(o.pose.theta) for o in self.objects])
        v = pk.vobj
        wx = c[v] * pk.lx - s[v] * pk.ly + xs[v]
        wy = s[v] * pk.lx + c[v] * pk.ly + ys[v]
        return PolySet(wx, wy, pk.pstart, pk.owner)

    def world_without(self, *object_ids: int) -> PolySet:
        key = ("without",) + tuple(sorted(object_ids))
        if key not in self._memo:
            drop = set(object_ids)
            self._memo[key] = self.world.select(lambda o: o not in drop)
        return self._memo[key]

    def world_of(self, object_id: int) -> PolySet:
        key = ("only", object_id)
        if key not in self._memo:
            self._memo[key] = self.world.select(lambda o: o == object_id)
        return self._memo[key]

    @cached_property
    def out_of_bounds(self) -> tuple[int, ...]:
        """Ids whose centroid lies outside the workspace."""
        return tuple(o.object_id for o in self.objects if not self.workspace.contains_point(o.centroid))

    @property
    def failed(self) -> bool:
        return bool(self.out_of_bounds)

    def with_poses(self, flat: Sequence[float]) -> "SceneState":
        objs = tuple(replace(o, pose=Pose2(flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]))
                     for i, o in enumerate(self.objects))
        new = SceneState(self.workspace, objs, self.target_id, self.rng_seed)
        new._memo["pack"] = self.pack
        return new

    def with_object_pose(self, object_id: int, pose: Pose2) -> "SceneState":
        objs = tuple(replace(o, pose=pose) if o.object_id == object_id else o for o in self.objects)
        new = SceneState(self.workspace, objs, self.target_id, self.rng_seed)
        new._memo["pack"] = self.pack
        return new

    def without(self, object_id: int) -> "SceneState":
        objs = tuple(o for o in self.objects if o.object_id != object_id)
        target = None if object_id == self.target_id else self.target_id
        return SceneState(self.workspace, objs, target, self.rng_seed)

    def max_penetration(self) -> float:
        w = self.world
        if len(w.start) <= 2:
            return 0.0
        return kernels.max_penetration(w.xs, w.ys, w.start, w.owner)

    def footprint_free(self, object_id: int, pose: Pose2, tol: float = CLEARANCE_TOL) -> bool:
        """True iff ``object_id`` placed at ``pose`` stays inside and clear of the others."""
        obj = self.get(object_id)
        mine = PolySet.of_shape(obj.shape, pose)
        ws = self.workspace
        if (mine.xs.min() < ws.xmin or mine.xs.max() > ws.xmax
                or mine.ys.min() < ws.ymin or mine.ys.max() > ws.ymax):
            return False
        other = self.world_without(object_id)
        return not kernels.sets_collide(mine.xs, mine.ys, mine.start, other.xs, other.ys, other.start, tol)

    def pusher_free(self, point, radius: float) -> bool:
        w = self.world
        return not kernels.disc_hits_any(float(point[0]), float(point[1]), radius,
                                         w.xs, w.ys, w.start, CONTACT_TOL)

    def digest(self) -> str:
        """Exact, order-stable text form of all poses (for equality checks)."""
        return ";".join(f"{o.object_id}:{o.pose.x.hex()},{o.pose.y.hex()},{o.pose.theta.hex()}"
                        for o in self.objects)


def step_push(state: SceneState, action: PushAction, config: SimConfig = SimConfig()) -> SceneState:
    """Settled state after one push.  Results are memoised on the input state."""
    memo = state._memo.get("succ")
    if memo is None:
        # weak values: successors live only as long as a tree or caller holds them
        memo = state._memo["succ"] = weakref.WeakValueDictionary()
    key = (action, config)
    hit = memo.get(key)
    if hit is not None:
        return hit
    sx, sy = action.start
    if not state.pusher_free((sx, sy), config.pusher_radius):
        raise InvalidPushError(f"pusher start {action.start} is inside an object")
    if not state.objects:
        memo[key] = state
        return state
    pk = state.pack
    pose = state.pose_array()
    events = kernels.push_objects(
        pk.lx, pk.ly, pk.pstart, pk.ostart, pose, pk.cxl, pk.cyl, pk.rho2, pk.rmax, pk.fscale,
        float(sx), float(sy), float(action.direction[0]), float(action.direction[1]),
        float(action.distance), config.pusher_radius, config.substep, config.rotation_gain,
        config.contact_iterations, config.settle_iterations,
    )
    out = state if events == 0 else state.with_poses(pose.tolist())
    memo[key] = out
    return out


@dataclass(frozen=True)
class SimBatch:
    states: tuple[SceneState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def size(self) -> int:
        return len(self.states)


def _step_one(job):
    state, action, config = job
    return state if action is None else step_push(state, action, config)


def step_batch(batch: SimBatch, actions: Sequence[PushAction | None],
               config: SimConfig = SimConfig(), pool: WorkerPool = SERIAL) -> SimBatch:
    """Advance every environment by its own push; ``None`` passes through."""
    actions = list(actions)
    if len(actions) != batch.size:
        raise ValueError(f"{len(actions)} actions for a batch of {batch.size}")
    return SimBatch(tuple(pool.map(_step_one, [(s, a, config) for s, a in zip(batch.states, actions)])))


def apply_pick_place(state: SceneState, object_id: int, place_pose: Pose2) -> SceneState:
    obj = state.get(object_id)
    if obj.movability != PICK_OR_PUSH:
        raise PlacementError(f"object {object_id} cannot be picked")
    if not state.footprint_free(object_id, place_pose):
        raise PlacementError(f"placement of {object_id} at {place_pose} collides or leaves the workspace")
    return state.with_object_pose(object_id, place_pose)


def apply_push_trajectory(state: SceneState, object_id: int, waypoints: Sequence[Pose2]) -> SceneState:
    from .motion import validate_trajectory

    traj = PushTrajectory(object_id, tuple(waypoints))
    if not traj.waypoints or not validate_trajectory(state, traj):
        raise TrajectoryError(f"trajectory for {object_id} is not collision-free")
    return state.with_object_pose(object_id, traj.final)
