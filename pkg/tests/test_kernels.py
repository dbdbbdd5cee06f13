import os
import subprocess
import sys

import numpy as np
import pytest

from clutterplan import kernels
from clutterplan.grasp import grasp_table
from clutterplan.physics import step_push
from clutterplan.sampling import sample_retrieval_pushes
from clutterplan.scenes import bundled_suite, load_suite

from conftest import fresh

BACKENDS = kernels.backends()
NAMES = ("sat_mtv", "disc_penetration", "disc_hits_any", "sets_collide", "first_blocked",
         "max_penetration", "grasp_table", "push_objects")
needs_both = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


@pytest.fixture
def use_backend(monkeypatch):
    def switch(name):
        mod = BACKENDS[name]
        for n in NAMES:
            monkeypatch.setattr(kernels, n, getattr(mod, n))
    return switch


def test_backends_export_the_same_kernels():
    for mod in BACKENDS.values():
        for n in NAMES:
            assert callable(getattr(mod, n))


def test_env_var_forces_python_backend():
    code = "from clutterplan import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, CLUTTERPLAN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def _polys(rng, k):
    xs, ys, start = [], [], [0]
    for _ in range(k):
        n = int(rng.integers(3, 8))
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
        r = rng.uniform(0.01, 0.05)
        c = rng.uniform(0, 0.2, 2)
        xs.extend(c[0] + r * np.cos(ang))
        ys.extend(c[1] + r * np.sin(ang))
        start.append(start[-1] + n)
    return np.array(xs), np.array(ys), np.array(start, dtype=np.intc)


@needs_both
def test_low_level_kernels_bit_identical():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    rng = np.random.default_rng(1)
    for _ in range(300):
        ax, ay, ast = _polys(rng, 2)
        bx, by, bst = _polys(rng, 3)
        a0 = slice(ast[0], ast[1])
        b0 = slice(bst[0], bst[1])
        assert py.sat_mtv(ax[a0], ay[a0], bx[b0], by[b0]) == cy.sat_mtv(ax[a0], ay[a0], bx[b0], by[b0])
        assert py.sets_collide(ax, ay, ast, bx, by, bst, 1e-6) == cy.sets_collide(ax, ay, ast, bx, by, bst, 1e-6)
        px, py_, r = *rng.uniform(0, 0.2, 2), 0.01
        assert (py.disc_hits_any(px, py_, r, bx, by, bst, 1e-9)
                == cy.disc_hits_any(px, py_, r, bx, by, bst, 1e-9))
        owner = np.arange(3, dtype=np.intc)
        assert py.max_penetration(bx, by, bst, owner) == cy.max_penetration(bx, by, bst, owner)
        poses = rng.uniform(0, 0.2, 30)
        poses[2::3] = rng.uniform(-3, 3, 10)
        lx, ly = ax - ax.mean(), ay - ay.mean()
        args = (lx, ly, ast, poses, bx, by, bst, 0.0, 0.0, 0.25, 0.25, 1e-6)
        assert py.first_blocked(*args) == cy.first_blocked(*args)


@needs_both
def test_simulation_and_grasp_tables_bit_identical(use_backend):
    scenes = load_suite(bundled_suite("retrieval"))[:6]
    results = {}
    for name in ("python", "cython"):
        use_backend(name)
        out = []
        for sc in scenes:
            st0 = fresh(sc.state)
            for a in sample_retrieval_pushes(st0)[::5]:
                nxt = step_push(st0, a)
                t = grasp_table(nxt, nxt.target_id)
                out.append((nxt.digest(), t.feasible, tuple(m.hex() for m in t.margin)))
        results[name] = out
    assert results["python"] == results["cython"]


@needs_both
def test_wedged_chain_push_bit_identical(use_backend):
    # a rotating neighbour wedges a small block ahead of the pusher; the travel
    # limit has to engage the same way in both backends
    from clutterplan.actions import PushAction
    from clutterplan.scenes import generate_retrieval_scene
    a = PushAction((0.07334709053338222, 0.2065778991152253), (0.3155146480795055, -0.9489207063012514),
                   0.0457718625096706)
    digests = set()
    for name in ("python", "cython"):
        use_backend(name)
        digests.add(step_push(generate_retrieval_scene(10), a).digest())
    assert len(digests) == 1
