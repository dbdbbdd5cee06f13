"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise (or when
``CLUTTERPLAN_PURE_PYTHON=1``) the pure-Python twin is used.  Both produce
bit-identical results.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("CLUTTERPLAN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

sat_mtv = _impl.sat_mtv
disc_penetration = _impl.disc_penetration
disc_hits_any = _impl.disc_hits_any
sets_collide = _impl.sets_collide
first_blocked = _impl.first_blocked
max_penetration = _impl.max_penetration
grasp_table = _impl.grasp_table
push_objects = _impl.push_objects


def backends() -> dict:
    """All importable backends by name (for equivalence tests and benchmarks)."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
