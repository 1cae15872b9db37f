"""Backend selection for the hot numeric kernels.

Prefers the compiled extension when it has been built; falls back to the
pure-numpy implementations otherwise.  Set PINVIEW_PURE_PYTHON=1 to force
the fallback (useful for benchmarking and debugging).
"""
from __future__ import annotations

import os

from . import fallback as _fallback

if os.environ.get("PINVIEW_PURE_PYTHON", "").strip() not in ("", "0"):
    _backend = _fallback
else:
    try:
        from . import _kernels as _backend  # type: ignore[no-redef]
    except ImportError:
        _backend = _fallback

BACKEND = _backend.BACKEND_NAME
idt_windows = _backend.idt_windows
cooccur_counts = _backend.cooccur_counts
brightness_counts = _backend.brightness_counts

__all__ = ["BACKEND", "idt_windows", "cooccur_counts", "brightness_counts",
           "fallback"]
fallback = _fallback
