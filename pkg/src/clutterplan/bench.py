"""Benchmark runner: every (case, mode, trial) episode becomes one CSV row."""
from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .config import PmbsConfig, PmmrConfig
from .parallel import WorkerPool
from .remp import REMP_MODES, run_rearrangement_episode
from .retrieval import MODES as RETRIEVAL_MODES, run_retrieval_episode
from .scenes import Scene, load_suite

log = logging.getLogger(__name__)

COLUMNS = ("case_id", "kind", "mode", "trial", "seed", "actions", "planning_time_s", "completed",
           "grasp_attempts", "grasp_successes", "total_cost", "failure", "action_digest")
MEAN_ROW = "__mean__"
TRIAL_SEED_STRIDE = 1009


@dataclass
class BenchSettings:
    retrieval: PmbsConfig = field(default_factory=PmbsConfig)
    remp: PmmrConfig = field(default_factory=PmmrConfig)
    episode_mode: str = "step"
    seed: int = 0


def action_digest(actions) -> str:
    """Short stable fingerprint of an action sequence (reprs are float-exact)."""
    h = hashlib.blake2b(digest_size=8)
    for a in actions:
        h.update(repr(a).encode())
        h.update(b"\n")
    return h.hexdigest()


def modes_for(kind: str, modes) -> list[str]:
    allowed = RETRIEVAL_MODES if kind == "retrieval" else REMP_MODES
    return [m for m in modes if m in allowed]


def run_case(scene: Scene, mode: str, trial: int, settings: BenchSettings) -> dict:
    seed = settings.seed + TRIAL_SEED_STRIDE * trial
    if scene.kind == "retrieval":
        cfg = settings.retrieval.replace(seed=seed)
        res = run_retrieval_episode(scene.state, mode, cfg, scene.case_id, trial)
        acts, cost = [e.action for e in res.log], ""
    else:
        cfg = settings.remp.replace(seed=seed)
        res = run_rearrangement_episode(scene.state, scene.goal, mode, cfg, settings.episode_mode,
                                        scene.case_id, trial)
        acts, cost = [e.action for e in res.log], f"{res.total_cost:.6f}"
    m = res.metrics
    return {"case_id": scene.case_id, "kind": scene.kind, "mode": mode, "trial": trial, "seed": seed,
            "actions": m.actions, "planning_time_s": f"{m.planning_time_s:.6f}", "completed": int(m.completed),
            "grasp_attempts": m.grasp_attempts, "grasp_successes": m.grasp_successes, "total_cost": cost,
            "failure": res.failure, "action_digest": action_digest(acts)}


def _job(args):
    return run_case(*args)


def aggregate(rows: list[dict]) -> list[dict]:
    """One mean row per (kind, mode), in first-seen order."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["kind"], r["mode"]), []).append(r)
    out = []
    for (kind, mode), rs in groups.items():
        n = len(rs)
        mean = lambda k: sum(float(r[k]) for r in rs) / n  # noqa: E731
        costs = [float(r["total_cost"]) for r in rs if r["total_cost"] != ""]
        out.append({"case_id": MEAN_ROW, "kind": kind, "mode": mode, "trial": n, "seed": "",
                    "actions": f"{mean('actions'):.6f}", "planning_time_s": f"{mean('planning_time_s'):.6f}",
                    "completed": f"{mean('completed'):.6f}", "grasp_attempts": f"{mean('grasp_attempts'):.6f}",
                    "grasp_successes": f"{mean('grasp_successes'):.6f}",
                    "total_cost": f"{sum(costs) / len(costs):.6f}" if costs else "",
                    "failure": "", "action_digest": ""})
    return out


def run_benchmark(suite_dir, modes, trials: int, out_csv, settings: BenchSettings | None = None,
                  parallel_cases: int = 1) -> list[dict]:
    """Run the suite and write the CSV (rows, then aggregate rows).  Planning
    failures are recorded in the ``failure`` column and never raise."""
    settings = settings or BenchSettings()
    scenes = load_suite(suite_dir)
    jobs = [(s, mode, t, settings) for s in scenes for mode in modes_for(s.kind, modes) for t in range(trials)]
    with WorkerPool(parallel_cases, kind="process") as pool:
        rows = []
        for r in pool.map(_job, jobs):
            log.info("%s %s trial %s: %s actions, completed=%s", r["case_id"], r["mode"], r["trial"],
                     r["actions"], r["completed"])
            rows.append(r)
    write_csv(rows + aggregate(rows), out_csv)
    return rows


def write_csv(rows: list[dict], path) -> None:
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        w.writerows(rows)


def read_csv(path) -> tuple[list[dict], list[dict]]:
    """(episode rows, aggregate rows)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [r for r in rows if r["case_id"] != MEAN_ROW], [r for r in rows if r["case_id"] == MEAN_ROW]
