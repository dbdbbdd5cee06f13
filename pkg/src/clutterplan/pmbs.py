"""Parallel MCTS with batched simulation for object retrieval.

One engine serves every tree-search retrieval planner.  Each iteration
selects a batch of distinct (node, action) pairs with virtual visits,
expands them in one batched step, runs lockstep rollouts in ``n_envs``
environments and backpropagates the max-discounted values.  A batch of one
environment is exactly serial MCTS.

Randomness is keyed by the action path of a node (and a replica number for
rollouts), never by environment index or wall clock, so batch size and
environment order cannot change any individual rollout.
"""
from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .actions import PushAction
from .config import PmbsConfig, RetrievalConfig
from .grasp import grasp_score
from .parallel import WorkerPool
from .physics import InvalidPushError, SceneState, step_push
from .sampling import random_push, sample_retrieval_pushes
from .tree import GUIDED, UCT_TOP_M, SearchNode, SelectionPolicy, backpropagate, select_batch

log = logging.getLogger(__name__)

PriorFn = Callable[[SceneState, PushAction], float]
GUIDED_ROLLOUT_CANDIDATES = 4


class PlanningError(RuntimeError):
    """The planner could not produce any action."""


def _mix(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
    return int.from_bytes(h.digest(), "little")


def state_reward(state: SceneState, cfg: RetrievalConfig) -> tuple[float, float]:
    """(reward, grasp score) of a single state; out-of-bounds states earn nothing."""
    if state.failed:
        return 0.0, 0.0
    s = grasp_score(state, state.target_id, cfg.gripper)
    g = 1.0 if (s > 0.0 and s >= cfg.rc_star) else 0.0
    return (g if cfg.binary_reward else g + cfg.delta * s), s


@dataclass
class _Ctx:
    """Read-only planning context handed to workers."""

    cfg: RetrievalConfig
    seed: int
    guided: bool = False
    prior_fn: PriorFn | None = None


@dataclass
class _Expanded:
    state: SceneState | None
    reward: float = 0.0
    score: float = 0.0
    terminal: bool = False
    untried: list = field(default_factory=list)
    priors: dict = field(default_factory=dict)


def _child_actions(state: SceneState, depth: int, key: int, ctx: _Ctx):
    cfg = ctx.cfg
    if depth >= cfg.d_tree:
        return [], {}
    acts = list(sample_retrieval_pushes(state, cfg.sampler))
    if ctx.guided:
        pri = {a: ctx.prior_fn(state, a) for a in acts}
        acts.sort(key=lambda a: -pri[a])    # stable: sampler order breaks ties
        return acts, pri
    rng = np.random.default_rng([ctx.seed, key, 17])
    return [acts[i] for i in rng.permutation(len(acts))], {}


def expand_one(job) -> _Expanded:
    """Worker: apply one push and prepare the child's reward and action list."""
    state, action, depth, key, ctx = job
    try:
        child = step_push(state, action, ctx.cfg.sim)
    except InvalidPushError:
        return _Expanded(None)
    reward, score = state_reward(child, ctx.cfg)
    terminal = child.failed or reward >= 1.0
    if terminal:
        return _Expanded(child, reward, score, True)
    untried, pri = _child_actions(child, depth, key, ctx)
    return _Expanded(child, reward, score, False, untried, pri)


# ---------------------------------------------------------------- rollouts

@dataclass
class _Rollout:
    node: int
    replica: int
    state: SceneState
    rng: np.random.Generator
    steps: int = 0
    horizon: int = 0
    value: float = 0.0
    done: bool = False


def _rollout_tick(job):
    """Worker: advance one rollout by one push."""
    ro, ctx = job
    cfg = ctx.cfg
    if ctx.guided:
        cands = random_push(ro.state, ro.rng, cfg.sampler, GUIDED_ROLLOUT_CANDIDATES)
        if cands:
            cands = [max(cands, key=lambda a: ctx.prior_fn(ro.state, a))]
    else:
        cands = random_push(ro.state, ro.rng, cfg.sampler, 1)
    if not cands:
        ro.done = True
        return ro
    ro.state = step_push(ro.state, cands[0], cfg.sim)
    ro.steps += 1
    if ro.state.failed:
        ro.done = True
        return ro
    r, s = state_reward(ro.state, cfg)
    ro.value = max(ro.value, cfg.gamma ** ro.steps * r)
    if s >= cfg.rgp_star or ro.steps >= ro.horizon:
        ro.done = True
    return ro


@dataclass
class SimReport:
    rewards: list[float]
    rollouts: list[int]            # completed or truncated rollouts per node
    env_rollouts: list[int]        # rollouts started per environment
    busy_ticks: int = 0
    total_ticks: int = 0

    @property
    def utilization(self) -> float:
        return self.busy_ticks / self.total_ticks if self.total_ticks else 0.0


def simulate_batch(nodes: list[SearchNode], n_envs: int, ctx: _Ctx, pool: WorkerPool,
                   env_order: list[int] | None = None) -> SimReport:
    """Lockstep rollouts from ``nodes`` in ``n_envs`` environments.

    Environments start round-robin over the nodes (replicating rollouts when
    there are more environments than nodes).  An environment whose rollout
    ends early is handed to the node with the fewest rollouts so far and runs
    for the remaining ticks.  Each node's reward is the max over its rollouts.
    """
    cfg = ctx.cfg
    k = len(nodes)
    rewards = [0.0] * k
    counts = [0] * k
    env_rollouts = [0] * n_envs
    if k == 0 or cfg.d_sim == 0:
        return SimReport(rewards, counts, env_rollouts)
    order = list(range(n_envs)) if env_order is None else list(env_order)

    def start(i: int, horizon: int) -> _Rollout:
        rep = counts[i]
        counts[i] += 1
        rng = np.random.default_rng([ctx.seed, nodes[i].info["key"], rep, 29])
        return _Rollout(i, rep, nodes[i].state, rng, 0, horizon)

    envs: dict[int, _Rollout] = {}
    for j, e in enumerate(order):
        envs[e] = start(j % k, cfg.d_sim)
        env_rollouts[e] += 1
    busy = 0
    for tick in range(cfg.d_sim):
        active = sorted(e for e, ro in envs.items() if ro is not None and not ro.done)
        if not active:
            break
        busy += len(active)
        results = pool.map(_rollout_tick, [(envs[e], ctx) for e in active])
        for e, ro in zip(active, results):
            envs[e] = ro
        remaining = cfg.d_sim - tick - 1
        # settle finished rollouts in (node, replica) order so env labels never matter
        finished = sorted((ro.node, ro.replica, e) for e, ro in envs.items() if ro is not None and ro.done)
        for node_i, _, e in finished:
            ro = envs[e]
            rewards[node_i] = max(rewards[node_i], ro.value)
            envs[e] = None
        if remaining > 0:
            free = sorted(e for e, ro in envs.items() if ro is None)
            for slot, e in enumerate(free):
                i = min(range(k), key=lambda t: (counts[t], t))
                envs[e] = start(i, remaining)
                env_rollouts[e] += 1
    for e, ro in envs.items():
        if ro is not None:
            rewards[ro.node] = max(rewards[ro.node], ro.value)
    return SimReport(rewards, counts, env_rollouts, busy, n_envs * cfg.d_sim)


# ---------------------------------------------------------------- driver

@dataclass
class StepResult:
    action: PushAction
    fallback: bool = False
    iterations: int = 0
    expansions: int = 0
    elapsed_s: float = 0.0
    stop_reason: str = ""
    root: SearchNode | None = None
    utilization: float = 0.0


def _policy_for(cfg: RetrievalConfig) -> SelectionPolicy:
    return SelectionPolicy(cfg.variant, cfg.c, cfg.m)


def _rank(node: SearchNode, variant: str) -> float:
    if node.N == 0:
        return -math.inf
    if variant == GUIDED:
        return node.prior + node.top(1)[0]
    if variant == UCT_TOP_M:
        return node.top(1)[0]
    return node.q_sum / node.N


def best_root_child(root: SearchNode, variant: str) -> tuple[SearchNode, bool]:
    """Exploitation-only choice; falls back to the highest grasp score when
    the whole tree collected no reward at all."""
    if not root.children:
        raise PlanningError("root has no expanded children")
    visited = [c for c in root.children if c.N > 0]
    if visited and max(c.top(1)[0] for c in visited) > 0.0:
        best = visited[0]
        for c in visited[1:]:
            if _rank(c, variant) > _rank(best, variant):
                best = c
        return best, False
    best = root.children[0]
    for c in root.children[1:]:
        if not c.state.failed and c.info["score"] > best.info["score"]:
            best = c
    return best, True


def run_search(state: SceneState, cfg: RetrievalConfig, n_envs: int = 1, pool: WorkerPool | None = None,
               guided: bool = False, prior_fn: PriorFn | None = None) -> StepResult:
    if state.target_id is None:
        raise PlanningError("scene has no target")
    own_pool = pool is None
    pool = pool or WorkerPool(1)
    ctx = _Ctx(cfg, cfg.seed, guided, prior_fn)
    policy = _policy_for(cfg)
    t0 = time.perf_counter()
    root_key = _mix(cfg.seed, "root")
    untried, pri = _child_actions(state, 0, root_key, ctx)
    r0, s0 = state_reward(state, cfg)
    root = SearchNode(state, untried=untried, reward=r0)
    root.info.update(key=root_key, score=s0, priors=pri)
    max_depth = min(cfg.d_tree, 3) if guided else cfg.d_tree
    levels: list[list[SearchNode]] = [[root]]
    done_levels = 0
    min_grasp_depth = math.inf
    iterations = expansions = 0
    busy = total = 0
    reason = "budget"

    def fully_expanded(n: SearchNode) -> bool:
        return n.terminal or n.depth >= max_depth or (not n.untried and n.pending == 0)

    try:
        while True:
            if cfg.t_max is not None and time.perf_counter() - t0 >= cfg.t_max:
                reason = "time"
                break
            room = n_envs
            if cfg.max_expansions is not None:
                room = min(room, cfg.max_expansions - expansions)
                if room <= 0:
                    reason = "expansions"
                    break
            pairs = select_batch(root, policy, room, max_depth)
            if not pairs:
                reason = "exhausted"
                break
            iterations += 1
            expansions += len(pairs)
            jobs = [(n.state, a, n.depth + 1, _mix(n.info["key"], a), ctx) for n, a in pairs]
            outs = pool.map(expand_one, jobs)
            fresh: list[SearchNode] = []
            leaves: list[tuple[SearchNode, float | None]] = []
            for (parent, action), job, out in zip(pairs, jobs, outs):
                if out.state is None:
                    parent.release()
                    continue
                child = SearchNode(out.state, parent, action, untried=out.untried, terminal=out.terminal,
                                   reward=out.reward, prior=parent.info["priors"].get(action, 0.0))
                child.info.update(key=job[3], score=out.score, priors=out.priors)
                parent.add_child(child)
                while len(levels) <= child.depth:
                    levels.append([])
                levels[child.depth].append(child)
                if out.reward >= 1.0:
                    min_grasp_depth = min(min_grasp_depth, child.depth)
                if child.terminal or cfg.d_sim == 0:
                    leaves.append((child, 0.0))
                else:
                    fresh.append(child)
                    leaves.append((child, None))
            report = simulate_batch(fresh, n_envs, ctx, pool)
            busy += report.busy_ticks
            total += report.total_ticks
            sim = iter(report.rewards)
            for child, value in leaves:
                backpropagate(child, next(sim) if value is None else value, "max", cfg.gamma)
            while done_levels < len(levels) and all(fully_expanded(n) for n in levels[done_levels]):
                done_levels += 1
            if cfg.early_stop and min_grasp_depth <= done_levels:
                reason = "early_stop"
                break
    finally:
        if own_pool:
            pool.close()
    best, fallback = best_root_child(root, cfg.variant)
    if fallback:
        log.warning("search found no reward; returning the least-bad push")
    return StepResult(best.action, fallback, iterations, expansions, time.perf_counter() - t0, reason,
                      root, busy / total if total else 0.0)


def pmbs_step(state: SceneState, cfg: PmbsConfig = PmbsConfig(), pool: WorkerPool | None = None) -> StepResult:
    own = pool is None
    pool = pool or WorkerPool(cfg.workers, cfg.pool_kind)
    try:
        return run_search(state, cfg, cfg.n_envs, pool)
    finally:
        if own:
            pool.close()
