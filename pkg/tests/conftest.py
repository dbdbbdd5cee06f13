import copy
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from clutterplan.geometry import Pose2, Shape, Workspace
from clutterplan.physics import PICK_OR_PUSH, ObjectState, SceneState

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=1000,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

RETRIEVAL_WS = Workspace.from_size(0.288, 0.288)
REMP_WS = Workspace.from_size(0.78, 0.52)


def box(i, w, h, x, y, th=0.0, movability=PICK_OR_PUSH):
    return ObjectState(i, Shape.box(w, h), Pose2(x, y, th), movability)


def scene(objects, target=None, ws=RETRIEVAL_WS):
    return SceneState(ws, tuple(objects), target)


def fresh(state: SceneState) -> SceneState:
    """Equal state with empty caches (successor and grasp memos are per instance)."""
    return copy.deepcopy(SceneState(state.workspace, state.objects, state.target_id, state.rng_seed))


@pytest.fixture
def lone_square():
    return scene([box(0, 0.04, 0.04, 0.144, 0.144)], target=0)


def pytest_terminal_summary(terminalreporter):
    # acceptance outcomes are collected by test_acceptance.report()
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
