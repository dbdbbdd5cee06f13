import csv
import json
import shutil

import pytest
from click.testing import CliRunner

from clutterplan.cli import EXIT_INVALID, EXIT_IO, main
from clutterplan.scenes import Scene, bundled_suite, save_scene

from conftest import box, scene

RETRIEVAL = bundled_suite("retrieval") / "retrieval-00.json"
REMP = bundled_suite("rearrangement") / "remp-4.1.json"


@pytest.fixture
def run():
    runner = CliRunner()

    def go(*args, env=None):
        return runner.invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)
    return go


@pytest.fixture
def easy_scene(tmp_path):
    p = tmp_path / "easy.json"
    save_scene(Scene(scene([box(0, 0.04, 0.04, 0.144, 0.144)], target=0), "retrieval", None, "easy"), p)
    return p


@pytest.fixture
def fast_config(tmp_path):
    p = tmp_path / "fast.yaml"
    p.write_text("retrieval:\n  max_expansions: 12\n  t_max: null\n  max_episode_actions: 2\n"
                 "rearrangement:\n  max_iterations: 3\n  rrt_iterations: 200\n  max_actions: 6\n")
    return p


# ---------------------------------------------------------------- plan retrieve

def test_plan_retrieve_writes_log(run, easy_scene, tmp_path):
    out = tmp_path / "log.json"
    res = run("plan", "retrieve", "--scene", easy_scene, "--mode", "greedy", "--out", out)
    assert res.exit_code == 0, res.output
    assert "completed" in res.output
    doc = json.loads(out.read_text())
    assert doc["metrics"]["completed"] and doc["actions"][0]["type"] == "grasp"


def test_recorded_failure_still_exits_zero(run, fast_config, tmp_path):
    out = tmp_path / "log.json"
    res = run("plan", "retrieve", "--scene", RETRIEVAL, "--mode", "serial", "--config", fast_config, "--out", out)
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    assert len(doc["actions"]) <= 2
    if not doc["metrics"]["completed"]:
        assert doc["failure"] == "action_limit"


def test_missing_scene_is_an_io_error(run, tmp_path):
    res = run("plan", "retrieve", "--scene", tmp_path / "nope.json")
    assert res.exit_code == EXIT_IO


def test_malformed_scene_is_a_validation_error(run, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": 1,\n "workspace": }')
    res = run("plan", "retrieve", "--scene", bad)
    assert res.exit_code == EXIT_INVALID
    assert "line 2" in res.output


def test_wrong_scene_kind(run):
    assert run("plan", "retrieve", "--scene", REMP).exit_code == EXIT_INVALID
    assert run("plan", "rearrange", "--scene", RETRIEVAL).exit_code == EXIT_INVALID


def test_bad_config_is_rejected(run, easy_scene, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("retrieval:\n  warp_speed: 9\n")
    assert run("plan", "retrieve", "--scene", easy_scene, "--config", cfg).exit_code == EXIT_INVALID
    cfg.write_text("planner: {}\n")
    assert run("plan", "retrieve", "--scene", easy_scene, "--config", cfg).exit_code == EXIT_INVALID
    assert run("plan", "retrieve", "--scene", easy_scene, "--config", tmp_path / "none.yaml").exit_code == EXIT_IO


def test_env_var_overrides(run, easy_scene, tmp_path):
    out = tmp_path / "log.json"
    res = run("plan", "retrieve", "--scene", easy_scene, "--out", out,
              env={"CLUTTER_BUDGET_S": "0.25", "CLUTTER_ENVS": "3", "CLUTTER_MODE": "greedy", "CLUTTER_SEED": "11"})
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    assert doc["mode"] == "greedy"
    assert (doc["config"]["t_max"], doc["config"]["n_envs"], doc["config"]["seed"]) == (0.25, 3, 11)


def test_flag_beats_env_var(run, easy_scene, tmp_path):
    out = tmp_path / "log.json"
    run("plan", "retrieve", "--scene", easy_scene, "--out", out, "--seed", "5", env={"CLUTTER_SEED": "11"})
    assert json.loads(out.read_text())["config"]["seed"] == 5


def test_invalid_env_value(run, easy_scene):
    res = CliRunner().invoke(main, ["plan", "retrieve", "--scene", str(easy_scene)], env={"CLUTTER_ENVS": "zero"})
    assert res.exit_code == EXIT_INVALID


# ---------------------------------------------------------------- plan rearrange

def test_plan_rearrange(run, fast_config, tmp_path):
    out = tmp_path / "log.json"
    res = run("plan", "rearrange", "--scene", REMP, "--mode", "hbfs", "--config", fast_config, "--out", out)
    assert res.exit_code == 0, res.output
    assert "total cost" in res.output
    doc = json.loads(out.read_text())
    assert doc["total_cost"] >= 0 and doc["episode_mode"] == "step"


def test_budget_alias_for_rearrangement(run, fast_config, tmp_path):
    out = tmp_path / "log.json"
    run("plan", "rearrange", "--scene", REMP, "--mode", "hbfs", "--budget-s", "7", "--config", fast_config,
        "--out", out)
    assert json.loads(out.read_text())["config"]["step_budget_s"] == 7.0


# ---------------------------------------------------------------- gen-scenes / bench / render

def test_gen_scenes(run, tmp_path):
    res = run("gen-scenes", "--kind", "retrieval", "--count", "2", "--seed", "3", "--out", tmp_path / "s")
    assert res.exit_code == 0, res.output
    assert sorted(p.name for p in (tmp_path / "s").iterdir()) == ["retrieval-00.json", "retrieval-01.json"]


def test_gen_scenes_rearrangement_needs_object_count(run, tmp_path):
    res = run("gen-scenes", "--kind", "rearrangement", "--out", tmp_path / "s")
    assert res.exit_code == EXIT_INVALID


def test_bench(run, fast_config, tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    shutil.copy(RETRIEVAL, suite)
    out = tmp_path / "r.csv"
    res = run("bench", "--suite", suite, "--mode", "greedy", "--mode", "serial", "--trials", "2",
              "--config", fast_config, "--out", out)
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4 + 2


def test_bench_missing_suite(run, tmp_path):
    res = CliRunner().invoke(main, ["bench", "--suite", str(tmp_path / "x"), "--mode", "greedy",
                                    "--out", str(tmp_path / "r.csv")])
    assert res.exit_code != 0


def test_render_with_log(run, easy_scene, tmp_path):
    log = tmp_path / "log.json"
    log.write_text(json.dumps({"actions": [
        {"type": "push", "start": [0.05, 0.05], "direction": [1.0, 0.0], "distance": 0.03},
        {"type": "push", "start": [0.05, 0.08], "direction": [1.0, 0.0], "distance": 0.03}]}))
    out = tmp_path / "s.svg"
    res = run("render", "--scene", easy_scene, "--log", log, "--out", out)
    assert res.exit_code == 0, res.output
    assert out.read_text().count('class="push"') == 2


def test_render_bad_log(run, easy_scene, tmp_path):
    log = tmp_path / "log.json"
    log.write_text('{"actions": [{"type": "teleport"}]}')
    assert run("render", "--scene", easy_scene, "--log", log, "--out", tmp_path / "s.svg").exit_code == EXIT_INVALID
    assert run("render", "--scene", easy_scene, "--log", tmp_path / "missing.json",
               "--out", tmp_path / "s.svg").exit_code == EXIT_IO
