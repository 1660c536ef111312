"""Kernel backend selection.

The compiled extension (_kernels) is used when importable; otherwise the
pure-Python twin (_pykernels). Set EGOSTREAM_PURE=1 to force the fallback.
Both expose the same surface: run_plain, run_sbl, run_dbl, run_a2 and the
SingleStepper/TwoFoldStepper/SblStepper classes.
"""

from __future__ import annotations

import os
from types import ModuleType

from .boundary import Metric, Reference

METRIC_CODES = {Metric.MSE: 0, Metric.COSINE_DISTANCE: 1}
REFERENCE_CODES = {Reference.SEGMENT_MEAN: 0, Reference.PREVIOUS_FRAME: 1}


def _select() -> ModuleType:
    if os.environ.get("EGOSTREAM_PURE"):
        from . import _pykernels
        return _pykernels
    try:
        from . import _kernels  # type: ignore[attr-defined]
        return _kernels
    except ImportError:
        from . import _pykernels
        return _pykernels


KERNELS = _select()


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "pure")."""
    return KERNELS.BACKEND_NAME


def get_backend(name: str | None = None) -> ModuleType:
    """Fetch a backend by name; None returns the active one."""
    if name is None:
        return KERNELS
    if name == "pure":
        from . import _pykernels
        return _pykernels
    if name == "compiled":
        from . import _kernels  # type: ignore[attr-defined]
        return _kernels
    raise ValueError(f"unknown backend {name!r} (expected 'pure' or 'compiled')")
