"""Batch kernel backend selection.

The compiled extension is preferred when it imported cleanly at build time;
the numpy fallback implements identical arithmetic and is always available.
Set the environment variable CAV_CORRIDOR_PURE_PY to any non-empty value to
force the fallback (useful for benchmarking and parity testing).
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("CAV_CORRIDOR_PURE_PY"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

evaluate_candidates = _impl.evaluate_candidates

__all__ = ["BACKEND", "evaluate_candidates"]
