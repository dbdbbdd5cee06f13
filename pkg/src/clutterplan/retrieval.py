"""Retrieval decision procedures and the percept-plan-act episode loop."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

from .actions import GraspAction, PushAction
from .config import PmbsConfig, RetrievalConfig
from .geometry import polygons_intersection_area
from .grasp import best_grasp, grasp_score, is_graspable
from .parallel import WorkerPool
from .physics import InvalidPushError, SceneState, step_push
from .pmbs import PlanningError, StepResult, run_search
from .sampling import sample_retrieval_pushes

log = logging.getLogger(__name__)

CLEARANCE_RADIUS_FACTOR = 1.5


# ---------------------------------------------------------------- prior

def clearance_prior(state: SceneState, action: PushAction, cfg: RetrievalConfig = RetrievalConfig()) -> float:
    """Free space around the target after the push, scaled to [0, eta].

    Obstacle area inside a disc of 1.5 target diameters around the target
    centroid is measured on the simulated successor; a push that fails or
    leaves the workspace gets 0.
    """
    try:
        nxt = step_push(state, action, cfg.sim)
    except InvalidPushError:
        return 0.0
    if nxt.failed:
        return 0.0
    key = ("clear", cfg.sim)
    hit = nxt._memo.get(key)
    if hit is None:
        tgt = nxt.get(nxt.target_id)
        radius = CLEARANCE_RADIUS_FACTOR * tgt.shape.diameter()
        others = [p for o in nxt.objects if o.object_id != nxt.target_id for p in o.footprint()]
        mass = polygons_intersection_area(others, tgt.centroid, radius)
        disc = 3.141592653589793 * radius * radius
        hit = nxt._memo[key] = max(0.0, 1.0 - mass / disc)
    return cfg.eta * hit


def zero_prior(state: SceneState, action: PushAction) -> float:
    return 0.0


class _BoundPrior:
    """Picklable prior bound to a config."""

    def __init__(self, fn, cfg):
        self.fn, self.cfg = fn, cfg

    def __call__(self, state, action):
        return self.fn(state, action, self.cfg)


# ---------------------------------------------------------------- planners

@dataclass(frozen=True)
class Decision:
    kind: str                       # "push" or "grasp"
    action: PushAction | GraspAction | None
    fallback: bool = False
    info: dict = field(default_factory=dict, compare=False)


def greedy_lookahead_step(state: SceneState, cfg: RetrievalConfig = RetrievalConfig()) -> Decision:
    """One-step lookahead on the mean grasp score.

    Grasps straight away when the score clears the fast threshold; otherwise
    the best push wins only if its discounted successor score beats the
    current score.
    """
    tid = state.target_id
    current = grasp_score(state, tid, cfg.gripper)
    grasp = best_grasp(state, tid, cfg.gripper)
    if current > cfg.greedy_fast_threshold and grasp is not None:
        return Decision("grasp", grasp)
    best_push, best_val = None, -1.0
    for a in sample_retrieval_pushes(state, cfg.sampler):
        try:
            nxt = step_push(state, a, cfg.sim)
        except InvalidPushError:
            continue
        val = 0.0 if nxt.failed else cfg.gamma * grasp_score(nxt, tid, cfg.gripper)
        if val > best_val:
            best_push, best_val = a, val
    if best_push is not None and best_val > current:
        return Decision("push", best_push, info={"value": best_val})
    if grasp is not None:
        return Decision("grasp", grasp)
    if best_push is not None and cfg.gamma > 0.0:
        return Decision("push", best_push, fallback=True, info={"value": best_val})
    raise PlanningError("no feasible grasp and no push available")


def serial_mcts_step(state: SceneState, cfg: RetrievalConfig = RetrievalConfig(),
                     variant: str | None = None) -> StepResult:
    if variant is not None:
        cfg = cfg.replace(variant=variant)
    return run_search(state, cfg, 1)


def guided_mcts_step(state: SceneState, cfg: RetrievalConfig = RetrievalConfig(),
                     prior_fn: Callable | None = None) -> StepResult:
    cfg = cfg.replace(variant="guided", m=3, c=0.0)
    if prior_fn is None:
        prior_fn = _BoundPrior(clearance_prior, cfg)
    return run_search(state, cfg, 1, guided=True, prior_fn=prior_fn)


# ---------------------------------------------------------------- episodes

@dataclass
class EpisodeMetrics:
    case_id: str = ""
    trial: int = 0
    mode: str = ""
    actions: int = 0
    planning_time_s: float = 0.0
    completed: bool = False
    grasp_attempts: int = 0
    grasp_successes: int = 0


@dataclass
class LogEntry:
    step: int
    kind: str
    action: object
    planning_time_s: float
    fallback: bool = False


@dataclass
class EpisodeResult:
    metrics: EpisodeMetrics
    log: list[LogEntry]
    final_state: SceneState
    failure: str = ""


MODES = ("greedy", "serial", "guided", "pmbs")


def plan_retrieval(state: SceneState, mode: str, cfg: RetrievalConfig, pool: WorkerPool | None = None) -> Decision:
    if mode == "greedy":
        return greedy_lookahead_step(state, cfg)
    if mode == "serial":
        r = run_search(state, cfg, 1, pool)
    elif mode == "guided":
        r = guided_mcts_step(state, cfg)
    elif mode == "pmbs":
        n = cfg.n_envs if isinstance(cfg, PmbsConfig) else 1
        r = run_search(state, cfg, n, pool)
    else:
        raise ValueError(f"unknown retrieval mode {mode!r}")
    return Decision("push", r.action, r.fallback, {"iterations": r.iterations, "expansions": r.expansions,
                                                   "stop": r.stop_reason})


def run_retrieval_episode(state: SceneState, mode: str, cfg: RetrievalConfig,
                          case_id: str = "", trial: int = 0, pool: WorkerPool | None = None) -> EpisodeResult:
    """Plan and act until the target is grasped, something leaves the table,
    or the action limit is hit.  Failures are outcomes, not exceptions."""
    m = EpisodeMetrics(case_id, trial, mode)
    entries: list[LogEntry] = []
    failure = ""
    tid = state.target_id
    while m.actions < cfg.max_episode_actions:
        if state.failed:
            failure = "out_of_bounds"
            break
        t0 = time.perf_counter()
        if is_graspable(state, tid, cfg.rg_star, cfg.gripper):
            dec = Decision("grasp", best_grasp(state, tid, cfg.gripper))
        else:
            try:
                dec = plan_retrieval(state, mode, cfg.replace(seed=cfg.seed + 7919 * m.actions), pool)
            except PlanningError as exc:
                failure = f"planning: {exc}"
                break
        dt = time.perf_counter() - t0
        m.planning_time_s += dt
        m.actions += 1
        entries.append(LogEntry(m.actions, dec.kind, dec.action, dt, dec.fallback))
        if dec.kind == "grasp":
            m.grasp_attempts += 1
            if dec.action is not None and grasp_score(state, tid, cfg.gripper) > 0.0:
                m.grasp_successes += 1
                m.completed = True
                break
            continue
        try:
            state = step_push(state, dec.action, cfg.sim)
        except InvalidPushError as exc:
            failure = f"invalid push: {exc}"
            break
    else:
        failure = "out_of_bounds" if state.failed else "action_limit"
    return EpisodeResult(m, entries, state, failure)
