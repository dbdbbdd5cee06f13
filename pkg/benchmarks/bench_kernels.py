"""Compiled vs pure-Python kernels on the bundled retrieval suite.

    python benchmarks/bench_kernels.py [--pushes 200] [--repeat 3]

For each backend the same workload runs on freshly loaded scenes (no cached
successors): every sampled push of every scene is simulated, and the grasp
table of every resulting state is computed.  Outputs must match exactly
between backends; the script exits nonzero if they do not.
"""
from __future__ import annotations

import argparse
import statistics
import sys
import time

from clutterplan import kernels
from clutterplan.grasp import grasp_table
from clutterplan.physics import SimConfig, step_push
from clutterplan.sampling import sample_retrieval_pushes
from clutterplan.scenes import bundled_suite, load_suite

KERNEL_NAMES = ("sat_mtv", "disc_penetration", "disc_hits_any", "sets_collide", "max_penetration",
                "grasp_table", "push_objects")


def use_backend(mod) -> None:
    for name in KERNEL_NAMES:
        setattr(kernels, name, getattr(mod, name))


def workload(max_pushes: int):
    """(push seconds, grasp seconds, fingerprint of every result)."""
    scenes = load_suite(bundled_suite("retrieval"))
    cfg = SimConfig()
    jobs = []
    for sc in scenes:
        for a in sample_retrieval_pushes(sc.state):
            jobs.append((sc.state, a))
    jobs = jobs[:max_pushes]
    t0 = time.perf_counter()
    nexts = [step_push(s, a, cfg) for s, a in jobs]
    t1 = time.perf_counter()
    tables = [grasp_table(n, n.target_id) for n in nexts]
    t2 = time.perf_counter()
    fp = [(n.digest(), repr(t.feasible), repr(t.margin)) for n, t in zip(nexts, tables)]
    return t1 - t0, t2 - t1, fp


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--pushes", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    found = kernels.backends()
    if "cython" not in found:
        print("compiled extension not built; only the Python backend is available")
    results, prints = {}, {}
    for name, mod in found.items():
        use_backend(mod)
        runs = [workload(args.pushes) for _ in range(args.repeat)]
        results[name] = (statistics.median(r[0] for r in runs), statistics.median(r[1] for r in runs))
        prints[name] = runs[0][2]
    print(f"{'backend':<10}{'push ms/op':>12}{'grasp ms/op':>13}")
    for name, (tp, tg) in results.items():
        print(f"{name:<10}{1e3 * tp / args.pushes:>12.3f}{1e3 * tg / args.pushes:>13.3f}")
    if len(results) == 2:
        (pp, pg), (cp, cg) = results["python"], results["cython"]
        print(f"speedup: push x{pp / cp:.1f}, grasp x{pg / cg:.1f}")
        if prints["python"] != prints["cython"]:
            print("MISMATCH: backends disagree")
            return 1
        print("outputs identical")
    return 0


if __name__ == "__main__":
    sys.exit(main())
