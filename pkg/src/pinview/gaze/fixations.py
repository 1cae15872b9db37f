"""Dispersion-threshold fixation detection.

A fixation is a maximal time window whose samples fit in a small spatial
box — (max x - min x) + (max y - min y) at most ``dispersion`` pixels —
and whose time span reaches ``min_duration`` milliseconds.  Invalid
samples are dropped before detection.
"""
from __future__ import annotations

import numpy as np

from pinview._native import idt_windows

from .types import Fixation, GazeSample

DEFAULT_DISPERSION = 30.0
DEFAULT_MIN_DURATION = 100.0


def detect_fixations(samples, dispersion: float = DEFAULT_DISPERSION,
                     min_duration: float = DEFAULT_MIN_DURATION) -> list[Fixation]:
    """Detect fixations in a time-ordered gaze stream.

    Returns non-overlapping fixations in chronological order.  Raises
    ValueError if timestamps of valid samples decrease.
    """
    usable = [s for s in samples if s.valid]
    if not usable:
        return []
    t = np.array([s.t for s in usable], dtype=np.float64)
    if np.any(np.diff(t) < 0):
        raise ValueError("gaze samples are not time-ordered")
    x = np.array([s.x for s in usable], dtype=np.float64)
    y = np.array([s.y for s in usable], dtype=np.float64)
    windows = idt_windows(t, x, y, float(dispersion), float(min_duration))
    out = []
    for start, end in np.asarray(windows):
        sl = slice(int(start), int(end) + 1)
        out.append(Fixation(
            start=float(t[sl][0]),
            end=float(t[sl][-1]),
            x=float(x[sl].mean()),
            y=float(y[sl].mean()),
            n_samples=int(end - start + 1),
        ))
    return out


def samples_from_arrays(t, x, y, pupil=None, valid=None) -> list[GazeSample]:
    """Convenience constructor for tests and synthetic streams."""
    n = len(t)
    pupil = pupil if pupil is not None else [0.0] * n
    valid = valid if valid is not None else [True] * n
    return [GazeSample(float(t[i]), float(x[i]), float(y[i]),
                       float(pupil[i]), bool(valid[i])) for i in range(n)]
