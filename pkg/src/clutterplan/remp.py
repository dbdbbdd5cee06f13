"""Rearrangement with pick-n-place and push: HBFS baseline and PMMR search."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .actions import PickPlaceAction, PushTrajectory, PushTrajectoryRequest, RempGoal
from .config import PmmrConfig, RempRewardConfig
from .geometry import Pose2
from .motion import MotionError, rrt_connect
from .parallel import WorkerPool
from .physics import (CLEARANCE_TOL, PICK_OR_PUSH, PUSH_ONLY, PlacementError, PolySet, SceneState,
                      TrajectoryError, apply_pick_place, apply_push_trajectory)
from .pmbs import PlanningError, _mix
from .retrieval import EpisodeMetrics
from .sampling import sample_remp_actions
from .tree import UCB_VIRTUAL, LazyActions, SearchNode, SelectionPolicy, backpropagate, select_batch
from . import kernels

log = logging.getLogger(__name__)

HBFS_RANDOM_TRIES = 50
ROLLOUT_TRIES = 5
TOWARD_FRACTIONS = tuple(1.0 - 0.05 * i for i in range(20))


# ---------------------------------------------------------------- rewards

def theta_sim(d: float, cfg: PmmrConfig = PmmrConfig()) -> float:
    """Probability of a uniformly random rollout action at depth ``d``."""
    a, b, c = cfg.theta_coeffs
    return max(a + b * d + c * d * d, cfg.theta_floor)


def object_reward(state: SceneState, goal: RempGoal, cfg: RempRewardConfig = RempRewardConfig()) -> float:
    """Sum of per-object at-goal rewards; push-only objects are worth more."""
    total = 0.0
    for o in state.objects:
        if o.object_id in goal.goal_poses and goal.at_goal(o.object_id, o.pose):
            total += cfg.r_o * (cfg.push_only_factor if o.movability == PUSH_ONLY else 1.0)
    return total


def all_at_goal(state: SceneState, goal: RempGoal) -> bool:
    return all(goal.at_goal(o.object_id, o.pose) for o in state.objects)


def displaced(state: SceneState, goal: RempGoal) -> list[int]:
    return [o.object_id for o in state.objects
            if o.object_id in goal.goal_poses and not goal.at_goal(o.object_id, o.pose)]


def state_reward(state: SceneState, goal: RempGoal, cost_so_far: float, base: float,
                 cfg: RempRewardConfig = RempRewardConfig()) -> float:
    if all_at_goal(state, goal):
        r_goal = 2.0 * cfg.r_o * len(goal.goal_poses)
        return max(0.0, r_goal - cost_so_far - base)
    return max(0.0, object_reward(state, goal, cfg) - cost_so_far - base)


def rollout_return(trace, beta: float = 0.5, gamma: float = 0.9) -> float:
    """``max(beta * max(R_1..R_{m-1}), R_m) * gamma**m``; an empty trace is worth 0."""
    m = len(trace)
    if m == 0:
        return 0.0
    inter = beta * max(trace[:-1]) if m > 1 else -math.inf
    return max(inter, trace[-1]) * gamma ** m


def action_cost(action, cfg: RempRewardConfig = RempRewardConfig()) -> float:
    if isinstance(action, PickPlaceAction):
        return action.distance + cfg.pick_fixed_cost
    if isinstance(action, PushTrajectory):
        return action.path_length + cfg.push_fixed_cost
    raise TypeError(f"cannot price {type(action).__name__}")


# ---------------------------------------------------------------- actions

def resolve(state: SceneState, action, time_limit_s: float, seed: int = 0, max_iterations: int | None = None):
    """Concrete executable action for a request, or ``None`` if it cannot be made.

    With ``max_iterations`` the drag planner ignores the clock, so the outcome
    depends on the seed alone.
    """
    if isinstance(action, PickPlaceAction):
        if state.get(action.object_id).movability != PICK_OR_PUSH:
            return None
        return action if state.footprint_free(action.object_id, action.place) else None
    if isinstance(action, PushTrajectoryRequest):
        try:
            limit = math.inf if max_iterations is not None else time_limit_s
            return rrt_connect(state, action.object_id, action.final, limit, seed, max_iterations)
        except MotionError:
            return None
    if isinstance(action, PushTrajectory):
        return action
    raise TypeError(f"unknown action {action!r}")


def request_for(state: SceneState, object_id: int, place: Pose2):
    obj = state.get(object_id)
    if obj.movability == PICK_OR_PUSH:
        return PickPlaceAction(object_id, obj.pose, place)
    return PushTrajectoryRequest(object_id, obj.pose, place)


def apply_action(state: SceneState, action) -> SceneState:
    if isinstance(action, PickPlaceAction):
        return apply_pick_place(state, action.object_id, action.place)
    if isinstance(action, PushTrajectory):
        return apply_push_trajectory(state, action.object_id, action.waypoints)
    raise TypeError(f"cannot apply {action!r}")


def _occupiers(state: SceneState, object_id: int, pose: Pose2) -> list[int]:
    """Objects whose footprint is within clearance of ``object_id`` placed at ``pose``."""
    mine = PolySet.of_shape(state.get(object_id).shape, pose)
    out = []
    for o in state.objects:
        if o.object_id == object_id:
            continue
        w = state.world_of(o.object_id)
        if kernels.sets_collide(mine.xs, mine.ys, mine.start, w.xs, w.ys, w.start, CLEARANCE_TOL):
            out.append(o.object_id)
    return out


def _clear_of(state: SceneState, object_id: int, pose: Pose2, keep_out: PolySet | None) -> bool:
    if not state.footprint_free(object_id, pose):
        return False
    if keep_out is None or len(keep_out.xs) == 0:
        return True
    mine = PolySet.of_shape(state.get(object_id).shape, pose)
    return not kernels.sets_collide(mine.xs, mine.ys, mine.start, keep_out.xs, keep_out.ys, keep_out.start,
                                    CLEARANCE_TOL)


def _toward_goal(state: SceneState, goal: RempGoal, object_id: int, keep_out: PolySet | None = None):
    """Farthest free pose on the straight SE(2) segment from the object's pose to its goal."""
    cur = state.get(object_id).pose
    tgt = goal.goal_poses.get(object_id)
    if tgt is None or goal.at_goal(object_id, cur):
        return None
    dth = math.remainder(tgt.theta - cur.theta, 2.0 * math.pi)
    for f in TOWARD_FRACTIONS:
        p = Pose2(cur.x + f * (tgt.x - cur.x), cur.y + f * (tgt.y - cur.y), cur.theta + f * dth)
        if _clear_of(state, object_id, p, keep_out):
            return p
    return None


# ---------------------------------------------------------------- HBFS

def _hbfs_instance(state: SceneState, goal: RempGoal, cfg: PmmrConfig, seed: int):
    rng = np.random.default_rng([seed, 0x4BF5])
    rc = cfg.reward
    todo = displaced(state, goal)
    t_rrt = cfg.rrt_time_tree

    def best_of(cands):
        best = None
        for req in cands:
            act = resolve(state, req, t_rrt, seed, cfg.rrt_iterations)
            if act is not None:
                c = action_cost(act, rc)
                if best is None or c < best[0]:
                    best = (c, act)
        return best

    # tier 1: straight to goal
    t1 = [request_for(state, i, goal.goal_poses[i]) for i in todo
          if state.footprint_free(i, goal.goal_poses[i])]
    hit = best_of(t1)
    if hit is not None:
        return hit
    # tier 2: clear blocked goals, moving occupiers toward their own goals when possible
    ws = state.workspace
    t2 = []
    for i in todo:
        gp = goal.goal_poses[i]
        keep_out = PolySet.of_shape(state.get(i).shape, gp)
        for j in _occupiers(state, i, gp):
            place = _toward_goal(state, goal, j, keep_out)
            if place is None:
                for _ in range(HBFS_RANDOM_TRIES):
                    p = Pose2(rng.uniform(ws.xmin, ws.xmax), rng.uniform(ws.ymin, ws.ymax),
                              rng.uniform(-math.pi, math.pi))
                    if _clear_of(state, j, p, keep_out):
                        place = p
                        break
            if place is not None:
                t2.append(request_for(state, j, place))
    hit = best_of(t2)
    if hit is not None:
        return hit
    # tier 3: anything sampled
    acts = sample_remp_actions(state, goal, "expansion", cfg.sampler)
    for k in rng.permutation(len(acts))[:20]:
        act = resolve(state, acts[k], t_rrt, seed, cfg.rrt_iterations)
        if act is not None:
            return action_cost(act, rc), act
    return None


def hbfs_step(state: SceneState, goal: RempGoal, cfg: PmmrConfig = PmmrConfig(), seed: int = 0,
              instances: int = 1, pool: WorkerPool | None = None):
    """Lowest-cost action over ``instances`` independently seeded HBFS runs."""
    jobs = [(state, goal, cfg, _mix(seed, w)) for w in range(max(1, instances))]
    pool = pool or WorkerPool(1)
    results = [r for r in pool.map(_hbfs_job, jobs) if r is not None]
    if not results:
        raise PlanningError("HBFS found no executable action")
    return min(results, key=lambda r: r[0])[1]


def _hbfs_job(job):
    return _hbfs_instance(*job)


# ---------------------------------------------------------------- PMMR

@dataclass
class _RCtx:
    goal: RempGoal
    cfg: PmmrConfig
    base: float
    depth_cap: int
    seed: int


def _ordered_requests(state: SceneState, ctx: _RCtx, key: int) -> list:
    acts = list(sample_remp_actions(state, ctx.goal, "expansion", ctx.cfg.sampler))
    direct = [a for a in acts if _is_direct(a, ctx.goal)]
    rest = [a for a in acts if not _is_direct(a, ctx.goal)]
    rng = np.random.default_rng([ctx.seed, key, 41])
    return direct + [rest[i] for i in rng.permutation(len(rest))]


def _place_of(req) -> Pose2:
    return req.place if isinstance(req, PickPlaceAction) else req.final


def _is_direct(req, goal: RempGoal) -> bool:
    return goal.goal_poses.get(req.object_id) == _place_of(req)


def _expand_remp(job):
    state, cost, req, depth, key, ctx = job
    act = resolve(state, req, ctx.cfg.rrt_time_tree, key & 0xFFFFFFFF, ctx.cfg.rrt_iterations)
    if act is None:
        return None
    try:
        child = apply_action(state, act)
    except (PlacementError, TrajectoryError):
        return None
    c = cost + action_cost(act, ctx.cfg.reward)
    r = state_reward(child, ctx.goal, c, ctx.base, ctx.cfg.reward)
    done = all_at_goal(child, ctx.goal)
    untried = [] if (done or depth >= ctx.depth_cap) else LazyActions(partial(_ordered_requests, child, ctx, key))
    return act, child, c, r, done, untried


def _rollout_remp(job):
    """Goal-biased random playout; returns (value, solution actions or None, solution reward)."""
    state, cost, reward, depth, key, ctx = job
    cfg = ctx.cfg
    rng = np.random.default_rng([ctx.seed, key, 53])
    trace = [reward]
    acts = []
    if all_at_goal(state, ctx.goal):
        return rollout_return(trace, cfg.reward.beta, cfg.reward.gamma), [], reward
    d = depth
    while d < ctx.depth_cap:
        d += 1
        # cheap placement check first so infeasible requests never reach the motion planner
        sim = [a for a in sample_remp_actions(state, ctx.goal, "simulation", cfg.sampler)
               if state.footprint_free(a.object_id, _place_of(a))]
        if rng.random() >= theta_sim(d, cfg):
            # goal-biased step: straight to goal if possible, else as far toward it as is free
            pool_ = [a for a in sim if _is_direct(a, ctx.goal)]
            if not pool_:
                pool_ = [request_for(state, i, p) for i in displaced(state, ctx.goal)
                         for p in [_toward_goal(state, ctx.goal, i)] if p is not None]
            pool_ = pool_ or sim
        else:
            pool_ = sim
        act = None
        for k in rng.permutation(len(pool_))[:ROLLOUT_TRIES]:
            it = None if cfg.rrt_iterations is None else max(1, cfg.rrt_iterations // 4)
            act = resolve(state, pool_[k], cfg.rrt_time_tree / 4, int(rng.integers(1 << 31)), it)
            if act is not None:
                break
        if act is None:
            break
        state = apply_action(state, act)
        cost += action_cost(act, cfg.reward)
        acts.append(act)
        r = state_reward(state, ctx.goal, cost, ctx.base, cfg.reward)
        trace.append(r)
        if all_at_goal(state, ctx.goal):
            return rollout_return(trace, cfg.reward.beta, cfg.reward.gamma), acts, r
    return rollout_return(trace, cfg.reward.beta, cfg.reward.gamma), None, 0.0


@dataclass
class PmmrResult:
    plan: list                      # best complete action sequence found (may be empty)
    first_action: object
    solved: bool
    iterations: int = 0
    elapsed_s: float = 0.0
    stop_reason: str = ""
    root: SearchNode | None = field(default=None, repr=False)


def _path_actions(node: SearchNode) -> list:
    out = []
    while node.parent is not None:
        out.append(node.action)
        node = node.parent
    return out[::-1]


def _replay(state: SceneState, plan: list, ctx: _RCtx) -> float | None:
    """Final reward of ``plan`` executed from ``state``, or ``None`` if it fails or does not finish."""
    cost = 0.0
    try:
        for act in plan:
            state = apply_action(state, act)
            cost += action_cost(act, ctx.cfg.reward)
    except (PlacementError, TrajectoryError, KeyError):
        return None
    if not all_at_goal(state, ctx.goal):
        return None
    return state_reward(state, ctx.goal, cost, ctx.base, ctx.cfg.reward)


def pmmr_plan(state: SceneState, goal: RempGoal, cfg: PmmrConfig = PmmrConfig(),
              pool: WorkerPool | None = None, budget_s: float | None = None,
              warm_plan: list | None = None) -> PmmrResult:
    """Parallel MCTS over rearrangement actions with shaped rewards.

    Stops on budget, when the tree is exhausted, or (optionally) once a plan
    with one action per displaced object has been found, since none can be
    shorter.  ``warm_plan`` (the unexecuted tail of the previous step's best
    plan) is re-checked and kept as the incumbent if it still solves the task.
    """
    t0 = time.perf_counter()
    budget = cfg.step_budget_s if budget_s is None else budget_s
    n_obj = len(goal.goal_poses)
    base = object_reward(state, goal, cfg.reward)
    ctx = _RCtx(goal, cfg, base, 2 * n_obj + 2, cfg.seed)
    lower_bound = len(displaced(state, goal))
    own = pool is None
    pool = pool or WorkerPool(cfg.workers)
    policy = SelectionPolicy(UCB_VIRTUAL, cfg.c, top_k=cfg.top_k)
    root_key = _mix(cfg.seed, "remp-root")
    root = SearchNode(state, untried=_ordered_requests(state, ctx, root_key), m_cap=cfg.top_k)
    root.info.update(key=root_key, cost=0.0)
    best: tuple[float, int, list] | None = None
    if lower_bound == 0:
        return PmmrResult([], None, True, 0, 0.0, "solved")

    def offer(reward: float, plan: list):
        nonlocal best
        cand = (reward, -len(plan), plan)
        if best is None or cand[:2] > best[:2]:
            best = cand

    if warm_plan:
        replay = _replay(state, warm_plan, ctx)
        if replay is not None:
            offer(replay, list(warm_plan))

    iterations = 0
    reason = "budget"
    try:
        while True:
            if time.perf_counter() - t0 >= budget:
                reason = "time"
                break
            if cfg.max_iterations is not None and iterations >= cfg.max_iterations:
                reason = "iterations"
                break
            if cfg.stop_at_lower_bound and best is not None and len(best[2]) <= lower_bound:
                reason = "lower_bound"
                break
            pairs = select_batch(root, policy, cfg.n_envs, ctx.depth_cap)
            if not pairs:
                reason = "exhausted"
                break
            iterations += 1
            jobs = [(n.state, n.info["cost"], a, n.depth + 1, _mix(n.info["key"], repr(a)), ctx) for n, a in pairs]
            outs = pool.map(_expand_remp, jobs)
            kids = []
            for (parent, _), job, out in zip(pairs, jobs, outs):
                if out is None:
                    parent.release()
                    continue
                act, child_state, c, r, done, untried = out
                child = SearchNode(child_state, parent, act, untried=untried, terminal=done, reward=r,
                                   m_cap=cfg.top_k)
                child.info.update(key=job[4], cost=c)
                parent.add_child(child)
                kids.append(child)
                if done:
                    offer(r, _path_actions(child))
            sims = pool.map(_rollout_remp, [(k.state, k.info["cost"], k.reward, k.depth, k.info["key"], ctx)
                                            for k in kids])
            for k, (value, tail, sol_r) in zip(kids, sims):
                if tail is not None and not k.terminal:
                    offer(sol_r, _path_actions(k) + tail)
                backpropagate(k, value, "sum", 1.0)
    finally:
        if own:
            pool.close()
    elapsed = time.perf_counter() - t0
    if best is not None:
        plan = best[2]
        return PmmrResult(plan, plan[0], True, iterations, elapsed, reason, root)
    if not root.children:
        raise PlanningError("PMMR could not expand any action")
    pick = max(root.children, key=lambda ch: (ch.top(1)[0] if ch.N else -1.0))
    return PmmrResult([], pick.action, False, iterations, elapsed, reason, root)


# ---------------------------------------------------------------- episodes

@dataclass
class RempLogEntry:
    step: int
    object_id: int
    kind: str
    action: object
    cost: float
    planning_time_s: float


@dataclass
class RempEpisodeResult:
    metrics: EpisodeMetrics
    log: list
    final_state: SceneState
    total_cost: float = 0.0
    failure: str = ""


REMP_MODES = ("hbfs", "pmmr")


def run_rearrangement_episode(state: SceneState, goal: RempGoal, mode: str, cfg: PmmrConfig = PmmrConfig(),
                              episode_mode: str = "step", case_id: str = "", trial: int = 0,
                              hbfs_instances: int = 1, pool: WorkerPool | None = None) -> RempEpisodeResult:
    if mode not in REMP_MODES:
        raise ValueError(f"unknown rearrangement mode {mode!r}")
    if episode_mode not in ("step", "full"):
        raise ValueError("episode_mode must be 'step' or 'full'")
    m = EpisodeMetrics(case_id, trial, mode)
    entries = []
    total = 0.0
    failure = ""
    queued: list = []
    carried = None
    while not all_at_goal(state, goal):
        if m.actions >= cfg.max_actions:
            failure = "action_limit"
            break
        t0 = time.perf_counter()
        try:
            if queued:
                act = queued.pop(0)
            elif mode == "hbfs":
                act = hbfs_step(state, goal, cfg, _mix(cfg.seed, trial, m.actions), hbfs_instances, pool)
            else:
                res = pmmr_plan(state, goal, cfg.replace(seed=_mix(cfg.seed, trial, m.actions) & 0xFFFFFFFF), pool,
                                warm_plan=carried)
                act = res.first_action
                carried = list(res.plan[1:]) if res.solved else None
                if episode_mode == "full" and res.solved:
                    queued, carried = carried, None
        except PlanningError as exc:
            failure = f"planning: {exc}"
            break
        dt = time.perf_counter() - t0
        try:
            nxt = apply_action(state, act)
        except (PlacementError, TrajectoryError):
            # a queued plan step went stale; replan from the current state
            queued = []
            m.planning_time_s += dt
            continue
        c = action_cost(act, cfg.reward)
        total += c
        m.actions += 1
        m.planning_time_s += dt
        kind = "pick_place" if isinstance(act, PickPlaceAction) else "push"
        if kind == "pick_place":
            m.grasp_attempts += 1
            m.grasp_successes += 1
        entries.append(RempLogEntry(m.actions, act.object_id, kind, act, c, dt))
        state = nxt
    m.completed = all_at_goal(state, goal)
    return RempEpisodeResult(m, entries, state, total, failure)
