"""Kernel lane selection.

The planner's inner loop runs through a macro-step kernel that exists twice:
a compiled Cython extension and a pure-Python fallback with bit-identical
arithmetic. The compiled lane is picked at import when available; set
MERGEPLAN_PURE=1 in the environment to force the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernel

_FORCE_PURE = os.environ.get("MERGEPLAN_PURE", "") not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _kernel as _compiled
    except ImportError:
        _compiled = None
else:
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _pykernel

BACKEND: str = _active.BACKEND


def active() -> ModuleType:
    """The kernel module selected at import time."""
    return _active


def get(name: str) -> ModuleType:
    """Fetch a kernel lane by name ('compiled' or 'python').

    Raises RuntimeError when the compiled lane is requested but the extension
    is not built.
    """
    if name == "python":
        return _pykernel
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled
    raise ValueError(f"unknown kernel lane: {name!r}")


def available() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)
