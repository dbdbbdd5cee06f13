"""Scene files: canonical JSON I/O, validation and seeded suite generation."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import RempGoal
from .geometry import ConvexPolygon, GeometryError, Pose2, Shape, Workspace, contains
from .grasp import GripperModel, is_graspable
from .physics import MOVABILITY, PICK_OR_PUSH, PUSH_ONLY, ObjectState, PolySet, SceneState
from . import kernels

FORMAT_VERSION = 1
OVERLAP_TOL = 1e-6
RETRIEVAL_SIZE = (0.288, 0.288)
REARRANGE_SIZE = (0.78, 0.52)
MAX_ATTEMPTS = 10_000


class SceneError(ValueError):
    """Malformed or invalid scene file; the message names the offending field."""


@dataclass
class Scene:
    state: SceneState
    kind: str = "retrieval"            # or "rearrangement"
    goal: RempGoal | None = None
    case_id: str = ""
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------- canonical JSON

def _fmt(x: float) -> str:
    if not math.isfinite(x):
        raise SceneError(f"non-finite number {x!r}")
    s = "%.17g" % x
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def _dump(v, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return _fmt(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            return "[" + ", ".join(_dump(x) for x in v) + "]"
        inner = ",\n".join(pad + "  " + _dump(x, indent + 1) for x in v)
        return "[\n" + inner + "\n" + pad + "]" if v else "[]"
    if isinstance(v, dict):
        if not v:
            return "{}"
        inner = ",\n".join(f'{pad}  {json.dumps(str(k))}: {_dump(x, indent + 1)}' for k, x in v.items())
        return "{\n" + inner + "\n" + pad + "}"
    raise SceneError(f"cannot serialise {type(v).__name__}")


def _pose_dict(p: Pose2) -> dict:
    return {"x": p.x, "y": p.y, "theta": p.theta}


def scene_to_dict(scene: Scene) -> dict:
    st = scene.state
    ws = st.workspace
    d = {
        "format_version": FORMAT_VERSION,
        "case_id": scene.case_id,
        "kind": scene.kind,
        "workspace": {"width_m": ws.width, "height_m": ws.height},
        "objects": [
            {"id": o.object_id,
             "parts": [[[x, y] for x, y in p.vertices] for p in o.shape.parts],
             "pose": _pose_dict(o.pose),
             "movability": o.movability,
             "friction_scale": o.friction_scale}
            for o in st.objects
        ],
        "target_id": st.target_id,
        "goals": {str(k): _pose_dict(v) for k, v in sorted(scene.goal.goal_poses.items())} if scene.goal else {},
        "rng_seed": st.rng_seed,
    }
    if scene.meta:
        d["meta"] = scene.meta
    return d


def dumps_scene(scene: Scene) -> str:
    return _dump(scene_to_dict(scene)) + "\n"


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps_scene(scene))


# ---------------------------------------------------------------- parsing + validation

def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise SceneError(f"{where}: expected an object")
    if key not in d:
        raise SceneError(f"{where}.{key}: missing")
    return d[key]


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SceneError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _pose(d, where: str) -> Pose2:
    return Pose2(_num(_req(d, "x", where), f"{where}.x"), _num(_req(d, "y", where), f"{where}.y"),
                 _num(_req(d, "theta", where), f"{where}.theta"))


def scene_from_dict(d: dict, source: str = "scene") -> Scene:
    ver = _req(d, "format_version", source)
    if ver != FORMAT_VERSION:
        raise SceneError(f"{source}.format_version: unsupported version {ver!r}")
    wsd = _req(d, "workspace", source)
    ws = Workspace.from_size(_num(_req(wsd, "width_m", "workspace"), "workspace.width_m"),
                             _num(_req(wsd, "height_m", "workspace"), "workspace.height_m"))
    if ws.width <= 0 or ws.height <= 0:
        raise SceneError("workspace: width_m and height_m must be > 0")
    objs = []
    raw = _req(d, "objects", source)
    if not isinstance(raw, list):
        raise SceneError("objects: expected a list")
    for i, od in enumerate(raw):
        where = f"objects[{i}]"
        oid = _req(od, "id", where)
        if isinstance(oid, bool) or not isinstance(oid, int):
            raise SceneError(f"{where}.id: expected an integer")
        parts_raw = _req(od, "parts", where)
        if not isinstance(parts_raw, list) or not parts_raw:
            raise SceneError(f"{where}.parts: expected a non-empty list of polygons")
        parts = []
        for j, pr in enumerate(parts_raw):
            try:
                pts = [(_num(p[0], f"{where}.parts[{j}]"), _num(p[1], f"{where}.parts[{j}]")) for p in pr]
                parts.append(ConvexPolygon(tuple(pts)))
            except (GeometryError, TypeError, IndexError) as exc:
                raise SceneError(f"{where}.parts[{j}]: {exc}") from None
        mov = od.get("movability", PICK_OR_PUSH)
        if mov not in MOVABILITY:
            raise SceneError(f"{where}.movability: must be one of {MOVABILITY}")
        fs = _num(od.get("friction_scale", 1.0), f"{where}.friction_scale")
        if fs <= 0:
            raise SceneError(f"{where}.friction_scale: must be > 0")
        objs.append(ObjectState(oid, Shape(tuple(parts), name=str(oid)), _pose(_req(od, "pose", where), f"{where}.pose"),
                                mov, fs))
    ids = [o.object_id for o in objs]
    if len(set(ids)) != len(ids):
        raise SceneError("objects: duplicate ids")
    kind = d.get("kind", "retrieval")
    if kind not in ("retrieval", "rearrangement"):
        raise SceneError(f"kind: unknown kind {kind!r}")
    target = d.get("target_id")
    if kind == "retrieval":
        if target is None:
            raise SceneError("target_id: required for retrieval scenes")
        if target not in ids:
            raise SceneError(f"target_id: {target} is not an object id")
    elif target is not None and target not in ids:
        raise SceneError(f"target_id: {target} is not an object id")
    goals_raw = d.get("goals") or {}
    if not isinstance(goals_raw, dict):
        raise SceneError("goals: expected a mapping id -> pose")
    goals = {}
    for k, v in goals_raw.items():
        try:
            gid = int(k)
        except ValueError:
            raise SceneError(f"goals.{k}: key is not an integer id") from None
        if gid not in ids:
            raise SceneError(f"goals.{k}: unknown object id")
        goals[gid] = _pose(v, f"goals.{k}")
    if kind == "rearrangement" and not goals:
        raise SceneError("goals: required for rearrangement scenes")
    seed = d.get("rng_seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise SceneError("rng_seed: expected an integer")
    state = SceneState(ws, tuple(objs), target, seed)
    scene = Scene(state, kind, RempGoal(goals) if goals else None, str(d.get("case_id", "")), dict(d.get("meta", {})))
    validate_scene(scene)
    return scene


def _arrangement_ok(ws, objs, label: str) -> None:
    for o in objs:
        if not contains(ws, o.shape, o.pose):
            raise SceneError(f"{label}: object {o.object_id} leaves the workspace")
    polys, owner = [], []
    for o in objs:
        for p in o.footprint():
            polys.append(p)
            owner.append(o.object_id)
    w = PolySet.from_polygons(polys, owner)
    if len(polys) > 1:
        pen = kernels.max_penetration(w.xs, w.ys, w.start, w.owner)
        if pen > OVERLAP_TOL:
            raise SceneError(f"{label}: objects overlap by {pen:.3g} m")


def validate_scene(scene: Scene) -> None:
    st = scene.state
    _arrangement_ok(st.workspace, st.objects, "objects")
    if scene.goal:
        goal_objs = [ObjectState(o.object_id, o.shape, scene.goal.goal_poses.get(o.object_id, o.pose),
                                 o.movability, o.friction_scale) for o in st.objects]
        _arrangement_ok(st.workspace, goal_objs, "goals")


def loads_scene(text: str, source: str = "scene") -> Scene:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{source}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scene_from_dict(d, source)


def load_scene(path) -> Scene:
    p = Path(path)
    return loads_scene(p.read_text(), str(p))


# ---------------------------------------------------------------- generation

def _random_shape(rng: np.random.Generator, lo: float, hi: float) -> Shape:
    kind = rng.integers(0, 4)
    if kind == 0:
        return Shape.box(rng.uniform(lo, hi), rng.uniform(lo, hi))
    if kind == 1:
        n = int(rng.integers(5, 9))
        return Shape((ConvexPolygon.regular(n, rng.uniform(lo, hi) / 2.0),))
    if kind == 2:
        # L-shape from two boxes
        a, b, t = rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(0.35, 0.5) * lo
        p1 = ConvexPolygon.rectangle(a, t, (a / 2.0, t / 2.0))
        p2 = ConvexPolygon.rectangle(t, b - t, (t / 2.0, t + (b - t) / 2.0))
        s = Shape((p1, p2))
        cx, cy = s.centroid
        return Shape((ConvexPolygon(tuple((x - cx, y - cy) for x, y in p1.vertices)),
                      ConvexPolygon(tuple((x - cx, y - cy) for x, y in p2.vertices))))
    pts = [(rng.uniform(-hi, hi) / 2.0, rng.uniform(-hi, hi) / 2.0) for _ in range(12)]
    poly = ConvexPolygon.from_points(pts)
    cx, cy = poly.centroid
    return Shape((ConvexPolygon(tuple((x - cx, y - cy) for x, y in poly.vertices)),))


def _fits(ws, objs, cand) -> bool:
    if not contains(ws, cand.shape, cand.pose):
        return False
    mine = PolySet.from_polygons(cand.footprint())
    for o in objs:
        w = PolySet.from_polygons(o.footprint())
        if kernels.sets_collide(mine.xs, mine.ys, mine.start, w.xs, w.ys, w.start, 1e-4):
            return False
    return True


def generate_retrieval_scene(seed: int, n_objects: int | None = None, gripper: GripperModel = GripperModel(),
                             threshold: float = 0.8) -> SceneState:
    """Pack random objects around a central target until it cannot be grasped."""
    rng = np.random.default_rng([seed, 0x2E7])
    ws = Workspace.from_size(*RETRIEVAL_SIZE)
    for attempt in range(MAX_ATTEMPTS):
        want = int(n_objects if n_objects is not None else rng.integers(4, 11))
        target = ObjectState(0, _random_shape(rng, 0.025, 0.05),
                             Pose2(ws.width / 2 + rng.uniform(-0.02, 0.02), ws.height / 2 + rng.uniform(-0.02, 0.02),
                                   rng.uniform(-math.pi, math.pi)))
        objs = [target]
        tries = 0
        while len(objs) < want + 1 and tries < 400:
            tries += 1
            shp = _random_shape(rng, 0.025, 0.06)
            ang = rng.uniform(0, 2 * math.pi)
            dist = target.shape.max_radius + shp.max_radius * rng.uniform(0.4, 1.1) + rng.uniform(0.0, 0.02)
            cx, cy = target.centroid
            cand = ObjectState(len(objs), shp, Pose2(cx + dist * math.cos(ang), cy + dist * math.sin(ang),
                                                     rng.uniform(-math.pi, math.pi)))
            if _fits(ws, objs, cand):
                objs.append(cand)
        if len(objs) < want + 1:
            continue
        st = SceneState(ws, tuple(objs), 0, int(seed))
        if not is_graspable(st, 0, threshold, gripper):
            return st
    raise SceneError(f"could not pack an adversarial scene after {MAX_ATTEMPTS} attempts")


def generate_rearrangement_scene(seed: int, n_objects: int, push_only_fraction: float = 0.3):
    """Random start and goal arrangements sharing one crowded region."""
    rng = np.random.default_rng([seed, 0x9EA])
    ws = Workspace.from_size(*REARRANGE_SIZE)
    for attempt in range(MAX_ATTEMPTS):
        shapes = [_random_shape(rng, 0.06, 0.13) for _ in range(n_objects)]
        mov = [PUSH_ONLY if rng.random() < push_only_fraction else PICK_OR_PUSH for _ in range(n_objects)]
        # both arrangements sit in a central band so goals tend to be occupied
        lo = (0.12, 0.08)
        hi = (ws.width - 0.12, ws.height - 0.08)
        arrangements = []
        for _ in range(2):
            placed = []
            for i, shp in enumerate(shapes):
                for _ in range(300):
                    cand = ObjectState(i + 1, shp, Pose2(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]),
                                                         rng.uniform(-math.pi, math.pi)), mov[i])
                    if _fits(ws, placed, cand):
                        placed.append(cand)
                        break
                else:
                    break
            if len(placed) < n_objects:
                break
            arrangements.append(placed)
        if len(arrangements) < 2:
            continue
        start, goal_objs = arrangements
        st = SceneState(ws, tuple(start), None, int(seed))
        goal = RempGoal({o.object_id: o.pose for o in goal_objs})
        if not [o for o in start if not goal.at_goal(o.object_id, o.pose)]:
            continue
        return st, goal, rng
    raise SceneError(f"could not sample a rearrangement case after {MAX_ATTEMPTS} attempts")


def generate_scenes(kind: str, count: int, seed: int, n_objects: int | None = None, out_dir=None,
                    trivial_filter: bool = True, prefix: str | None = None) -> list[Scene]:
    """Deterministic suite of ``count`` scenes; written to ``out_dir`` when given."""
    scenes = []
    if kind == "retrieval":
        for i in range(count):
            st = generate_retrieval_scene(seed * 1000 + i, n_objects)
            scenes.append(Scene(st, "retrieval", None, f"{prefix or 'retrieval'}-{i:02d}",
                                {"generator": "retrieval", "seed": seed * 1000 + i}))
    elif kind == "rearrangement":
        if n_objects is None:
            raise ValueError("rearrangement generation needs n_objects")
        from .config import PmmrConfig
        from .remp import run_rearrangement_episode

        i = k = 0
        while len(scenes) < count:
            st, goal, rng = generate_rearrangement_scene(seed * 1000 + k, n_objects)
            k += 1
            if trivial_filter:
                # cases a greedy pass solves in N actions are usually dropped
                res = run_rearrangement_episode(st, goal, "hbfs", PmmrConfig(max_actions=n_objects, seed=k))
                if res.metrics.completed and rng.random() < 0.8:
                    continue
            scenes.append(Scene(st, "rearrangement", goal, f"{prefix or 'remp'}-{n_objects}.{i + 1}",
                                {"generator": "rearrangement", "seed": seed * 1000 + k - 1}))
            i += 1
    else:
        raise ValueError(f"unknown scene kind {kind!r}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for s in scenes:
            save_scene(s, out / f"{s.case_id}.json")
    return scenes


def load_suite(directory) -> list[Scene]:
    d = Path(directory)
    return [load_scene(p) for p in sorted(d.glob("*.json")) if p.name != "manifest.json"]


def bundled_suite(name: str) -> Path:
    """Path of a suite shipped with the package (``retrieval``, ``rearrangement`` or ``hard``)."""
    return Path(os.path.dirname(__file__)) / "suite" / name


# ---------------------------------------------------------------- hand-authored cases

def _obj(i, shape, x, y, th=0.0):
    return ObjectState(i, shape, Pose2(x, y, th))


def hard_retrieval_cases() -> list[Scene]:
    """Six hand-built adversarial layouts (ring, corner, sandwich, corridor,
    grid, wedge), each needing at least one push before the target can be grasped."""
    ws = Workspace.from_size(*RETRIEVAL_SIZE)
    cx, cy = ws.width / 2.0, ws.height / 2.0
    sq = Shape.box(0.04, 0.04)
    layouts = {}

    # target boxed in by six blocks
    ring = [_obj(0, sq, cx, cy)]
    for k in range(6):
        a = 2.0 * math.pi * k / 6
        ring.append(_obj(k + 1, Shape.box(0.03, 0.03), cx + 0.05 * math.cos(a), cy + 0.05 * math.sin(a), a))
    layouts["ring"] = ring

    # target in a corner, the two open sides closed by long bars
    layouts["corner"] = [_obj(0, sq, 0.03, 0.03), _obj(1, Shape.box(0.05, 0.03), 0.026, 0.0725),
                         _obj(2, Shape.box(0.03, 0.05), 0.0725, 0.026), _obj(3, sq, 0.0725, 0.0725)]

    # target sandwiched between two long bars with end caps
    layouts["sandwich"] = [_obj(0, Shape.box(0.05, 0.035), cx, cy),
                           _obj(1, Shape.box(0.16, 0.03), cx, cy + 0.035), _obj(2, Shape.box(0.16, 0.03), cx, cy - 0.035),
                           _obj(3, Shape.box(0.03, 0.04), cx - 0.045, cy), _obj(4, Shape.box(0.03, 0.04), cx + 0.045, cy)]

    # target at the blind end of a corridor next to the wall
    layouts["corridor"] = [_obj(0, sq, cx, 0.025), _obj(1, Shape.box(0.03, 0.12), cx - 0.036, 0.065),
                           _obj(2, Shape.box(0.03, 0.12), cx + 0.036, 0.065), _obj(3, Shape.box(0.04, 0.03), cx, 0.0625),
                           _obj(4, sq, cx, 0.1)]

    # target in the middle of a 3x3 grid of blocks
    grid = [_obj(0, sq, cx, cy)]
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            if i or j:
                grid.append(_obj(len(grid), sq, cx + 0.047 * i, cy + 0.047 * j))
    layouts["grid"] = grid

    # hexagonal target wedged between L-shapes and triangles
    hexa = Shape((ConvexPolygon.regular(6, 0.024),))
    tri = Shape((ConvexPolygon.regular(3, 0.035),))
    ell = Shape((ConvexPolygon.rectangle(0.07, 0.02, (0.0, -0.025)), ConvexPolygon.rectangle(0.02, 0.05, (-0.025, 0.01))))
    layouts["wedge"] = [_obj(0, hexa, cx, cy), _obj(1, ell, cx - 0.012, cy - 0.012),
                        _obj(2, ell, cx + 0.012, cy + 0.012, math.pi), _obj(3, tri, cx + 0.06, cy - 0.06, math.pi / 2),
                        _obj(4, tri, cx - 0.06, cy + 0.06, -math.pi / 2)]

    out = []
    for i, (name, objs) in enumerate(layouts.items()):
        st = SceneState(ws, tuple(objs), 0, 1000 + i)
        out.append(Scene(st, "retrieval", None, f"hard-{i + 1}-{name}",
                         {"generator": "hand_authored", "layout": name, "approximation": True}))
    return out
