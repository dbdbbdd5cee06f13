"""Command-line entry point.

Every option can also be set through ``CLUTTER_<FLAG>`` (upper case, dashes
as underscores), e.g. ``CLUTTER_BUDGET_S=5``.  Exit status is 0 whenever the
run itself completed, including episodes that recorded a planning failure;
bad input files, bad options and I/O problems exit nonzero.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import yaml

from .actions import action_from_dict, action_to_dict
from .bench import BenchSettings, run_benchmark
from .config import PmbsConfig, PmmrConfig, from_dict, to_dict
from .remp import REMP_MODES, run_rearrangement_episode
from .render import render_svg
from .retrieval import MODES as RETRIEVAL_MODES, run_retrieval_episode
from .scenes import SceneError, generate_scenes, load_scene

EXIT_IO = 1
EXIT_INVALID = 2

CONFIG_SECTIONS = ("retrieval", "rearrangement", "bench")


class CliFailure(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _opt(*decls, **kw):
    """click.option with the CLUTTER_ env var derived from the long flag name."""
    long = next(d for d in decls if d.startswith("--"))
    kw.setdefault("envvar", "CLUTTER_" + long[2:].replace("-", "_").upper())
    kw.setdefault("show_envvar", True)
    return click.option(*decls, **kw)


def load_config(path) -> dict:
    """JSON or YAML mapping with optional ``retrieval``, ``rearrangement`` and ``bench`` sections."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliFailure(f"cannot read config {path}: {exc}", EXIT_IO)
    try:
        data = yaml.safe_load(text) if str(path).endswith((".yaml", ".yml")) else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise CliFailure(f"{path}: {exc}", EXIT_INVALID)
    data = data or {}
    if not isinstance(data, dict) or set(data) - set(CONFIG_SECTIONS):
        raise CliFailure(f"{path}: top level must be a mapping with keys from {list(CONFIG_SECTIONS)}",
                         EXIT_INVALID)
    return data


def retrieval_config(data: dict, budget_s, envs, seed) -> PmbsConfig:
    try:
        cfg = from_dict(PmbsConfig, data.get("retrieval"))
        kw = {}
        if budget_s is not None:
            kw.update(t_max=budget_s, max_expansions=None)
        if envs is not None:
            kw["n_envs"] = envs
        if seed is not None:
            kw["seed"] = seed
        return cfg.replace(**kw)
    except (TypeError, ValueError) as exc:
        raise CliFailure(f"invalid retrieval config: {exc}", EXIT_INVALID)


def remp_config(data: dict, step_budget_s, envs, seed) -> PmmrConfig:
    try:
        cfg = from_dict(PmmrConfig, data.get("rearrangement"))
        kw = {}
        if step_budget_s is not None:
            kw["step_budget_s"] = step_budget_s
        if envs is not None:
            kw["n_envs"] = envs
        if seed is not None:
            kw["seed"] = seed
        return cfg.replace(**kw)
    except (TypeError, ValueError) as exc:
        raise CliFailure(f"invalid rearrangement config: {exc}", EXIT_INVALID)


def _load(path):
    try:
        return load_scene(path)
    except OSError as exc:
        raise CliFailure(f"cannot read scene {path}: {exc}", EXIT_IO)
    except SceneError as exc:
        raise CliFailure(str(exc), EXIT_INVALID)


def _write(path, text: str) -> None:
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise CliFailure(f"cannot write {path}: {exc}", EXIT_IO)


def _episode_json(result, scene_path, mode, cfg, extra=None) -> str:
    m = result.metrics
    doc = {"scene": str(scene_path), "mode": mode, "metrics": m.__dict__, "failure": result.failure,
           "actions": [action_to_dict(e.action) for e in result.log],
           "planning_time_s": [e.planning_time_s for e in result.log], "config": to_dict(cfg)}
    doc.update(extra or {})
    return json.dumps(doc, indent=1, default=str) + "\n"


def _report(result):
    m = result.metrics
    status = "completed" if m.completed else f"not completed ({result.failure or 'unknown'})"
    click.echo(f"{m.mode}: {m.actions} actions, {status}, planning {m.planning_time_s:.2f} s")


scene_opt = _opt("--scene", type=click.Path(dir_okay=False), required=True, help="Scene JSON file.")
seed_opt = _opt("--seed", type=int, default=None, help="Base seed.")
envs_opt = _opt("--envs", type=click.IntRange(min=1), default=None, help="Parallel simulation environments.")
config_opt = _opt("--config", type=click.Path(dir_okay=False), default=None, help="JSON or YAML config file.")


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging.")
def main(verbose):
    """Tree-search planners for retrieval from clutter and rearrangement."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@main.command("gen-scenes")
@_opt("--kind", type=click.Choice(["retrieval", "rearrangement"]), required=True)
@_opt("--count", type=click.IntRange(min=1), default=1)
@_opt("--n-objects", type=click.IntRange(min=1), default=None, help="Objects per scene (retrieval: random 4-10).")
@seed_opt
@_opt("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
@_opt("--no-trivial-filter", is_flag=True, default=False, help="Keep rearrangement cases a greedy pass solves.")
def gen_scenes(kind, count, n_objects, seed, out, no_trivial_filter):
    """Generate a deterministic set of scene files."""
    try:
        scenes = generate_scenes(kind, count, seed or 0, n_objects, out, trivial_filter=not no_trivial_filter)
    except OSError as exc:
        raise CliFailure(f"cannot write scenes to {out}: {exc}", EXIT_IO)
    except (SceneError, ValueError) as exc:
        raise CliFailure(str(exc), EXIT_INVALID)
    click.echo(f"wrote {len(scenes)} scenes to {out}")


@main.group()
def plan():
    """Run one planning episode on a scene."""


@plan.command("retrieve")
@scene_opt
@_opt("--mode", type=click.Choice(list(RETRIEVAL_MODES)), default="pmbs")
@_opt("--budget-s", type=click.FloatRange(min=0, min_open=True), default=None, help="Planning time per step.")
@envs_opt
@seed_opt
@_opt("--out", type=click.Path(dir_okay=False), default=None, help="Episode log (JSON).")
@config_opt
def plan_retrieve(scene, mode, budget_s, envs, seed, out, config):
    """Retrieve the target object from clutter."""
    sc = _load(scene)
    if sc.kind != "retrieval":
        raise CliFailure(f"{scene} is a {sc.kind} scene, not a retrieval scene", EXIT_INVALID)
    cfg = retrieval_config(load_config(config), budget_s, envs, seed)
    res = run_retrieval_episode(sc.state, mode, cfg, sc.case_id)
    _report(res)
    if out:
        _write(out, _episode_json(res, scene, mode, cfg))


@plan.command("rearrange")
@scene_opt
@_opt("--mode", type=click.Choice(list(REMP_MODES)), default="pmmr")
@_opt("--step-budget-s", type=click.FloatRange(min=0, min_open=True), default=None,
      help="Planning time per percept-plan-act step.")
@_opt("--budget-s", type=click.FloatRange(min=0, min_open=True), default=None,
      help="Alias of --step-budget-s.")
@_opt("--episode-mode", type=click.Choice(["step", "full"]), default="step",
      help="Replan every step, or execute the first full plan found.")
@envs_opt
@seed_opt
@_opt("--out", type=click.Path(dir_okay=False), default=None, help="Episode log (JSON).")
@config_opt
def plan_rearrange(scene, mode, step_budget_s, budget_s, episode_mode, envs, seed, out, config):
    """Move every object to its goal pose."""
    sc = _load(scene)
    if sc.kind != "rearrangement":
        raise CliFailure(f"{scene} is a {sc.kind} scene, not a rearrangement scene", EXIT_INVALID)
    cfg = remp_config(load_config(config), step_budget_s if step_budget_s is not None else budget_s, envs, seed)
    res = run_rearrangement_episode(sc.state, sc.goal, mode, cfg, episode_mode, sc.case_id)
    _report(res)
    click.echo(f"total cost {res.total_cost:.3f}")
    if out:
        _write(out, _episode_json(res, scene, mode, cfg, {"total_cost": res.total_cost,
                                                          "episode_mode": episode_mode}))


@main.command()
@_opt("--suite", type=click.Path(file_okay=False, exists=True), required=True, help="Directory of scene files.")
@_opt("--mode", type=click.Choice(list(RETRIEVAL_MODES) + list(REMP_MODES)), multiple=True, required=True,
      help="Repeat for several modes; modes that do not fit a scene kind are skipped.")
@_opt("--trials", type=click.IntRange(min=1), default=1)
@_opt("--budget-s", type=click.FloatRange(min=0, min_open=True), default=None, help="Planning time per step.")
@_opt("--step-budget-s", type=click.FloatRange(min=0, min_open=True), default=None,
      help="Per-step budget for rearrangement (defaults to --budget-s).")
@_opt("--episode-mode", type=click.Choice(["step", "full"]), default="step")
@envs_opt
@seed_opt
@_opt("--parallel-cases", type=click.IntRange(min=1), default=1, help="Run cases in this many processes.")
@_opt("--out", type=click.Path(dir_okay=False), required=True, help="Results CSV.")
@config_opt
def bench(suite, mode, trials, budget_s, step_budget_s, episode_mode, envs, seed, parallel_cases, out, config):
    """Run a benchmark suite and write per-episode rows plus mean rows."""
    data = load_config(config)
    settings = BenchSettings(retrieval_config(data, budget_s, envs, seed),
                             remp_config(data, step_budget_s if step_budget_s is not None else budget_s, envs, seed),
                             episode_mode, seed or 0)
    try:
        rows = run_benchmark(suite, mode, trials, out, settings, parallel_cases)
    except OSError as exc:
        raise CliFailure(f"benchmark I/O error: {exc}", EXIT_IO)
    except SceneError as exc:
        raise CliFailure(str(exc), EXIT_INVALID)
    done = sum(int(r["completed"]) for r in rows)
    click.echo(f"{len(rows)} episodes, {done} completed; results in {out}")


@main.command()
@scene_opt
@_opt("--log", "log_path", type=click.Path(dir_okay=False), default=None,
      help="Episode log from `plan --out`; its actions are drawn as numbered arrows.")
@_opt("--out", type=click.Path(dir_okay=False), required=True, help="SVG file.")
def render(scene, log_path, out):
    """Draw a scene (and optionally an episode) as SVG."""
    sc = _load(scene)
    actions = []
    if log_path:
        try:
            doc = json.loads(Path(log_path).read_text())
            actions = [action_from_dict(a) for a in doc["actions"]]
        except OSError as exc:
            raise CliFailure(f"cannot read log {log_path}: {exc}", EXIT_IO)
        except (ValueError, KeyError, TypeError) as exc:
            raise CliFailure(f"{log_path}: malformed episode log ({exc})", EXIT_INVALID)
    try:
        render_svg(sc.state, out, sc.goal, actions)
    except OSError as exc:
        raise CliFailure(f"cannot write {out}: {exc}", EXIT_IO)
    click.echo(f"wrote {out}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
