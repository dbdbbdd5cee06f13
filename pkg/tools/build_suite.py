"""Regenerate the scene suites bundled with the package.

    python tools/build_suite.py [--out src/clutterplan/suite]
"""
from __future__ import annotations

import argparse
import json
import shutil
from pathlib import Path

from clutterplan.scenes import generate_scenes, hard_retrieval_cases, save_scene, validate_scene

RETRIEVAL_SEED = 2024
REARRANGE_SEED = 7
REARRANGE_COUNTS = range(4, 9)
PER_COUNT = 5


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src" / "clutterplan" / "suite"))
    out = Path(ap.parse_args().out)
    if out.exists():
        shutil.rmtree(out)
    manifest = {"retrieval": [], "rearrangement": [], "hard": []}

    for s in generate_scenes("retrieval", 20, RETRIEVAL_SEED, out_dir=out / "retrieval"):
        manifest["retrieval"].append({"case_id": s.case_id, "objects": len(s.state.objects) - 1,
                                      "generated": True, "seed": s.meta["seed"]})
    for n in REARRANGE_COUNTS:
        for s in generate_scenes("rearrangement", PER_COUNT, REARRANGE_SEED * 100 + n, n, out / "rearrangement"):
            manifest["rearrangement"].append({"case_id": s.case_id, "objects": n, "generated": True,
                                              "seed": s.meta["seed"]})
    hard = out / "hard"
    hard.mkdir(parents=True)
    for s in hard_retrieval_cases():
        validate_scene(s)
        save_scene(s, hard / f"{s.case_id}.json")
        manifest["hard"].append({"case_id": s.case_id, "objects": len(s.state.objects) - 1, "generated": False,
                                 "hand_authored_approximation": True, "layout": s.meta["layout"]})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    print(f"suite written to {out}")


if __name__ == "__main__":
    main()
