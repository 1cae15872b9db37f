"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or explicitly disabled via
PINVIEW_PURE_PYTHON=1.  Semantics are identical to the compiled versions.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "fallback"

_COOCCUR_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))
_BRIGHTNESS_OFFSETS = ((0, 1), (1, 0))


def idt_windows(t, x, y, dispersion, min_duration):
    """Dispersion-threshold fixation windows; see the compiled twin."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = t.shape[0]
    out = []
    i = 0
    while i < n:
        j = i
        minx = maxx = x[i]
        miny = maxy = y[i]
        exceeded = False
        while t[j] - t[i] < min_duration:
            j += 1
            if j >= n:
                return np.asarray(out, dtype=np.int64).reshape(-1, 2)
            minx = min(minx, x[j])
            maxx = max(maxx, x[j])
            miny = min(miny, y[j])
            maxy = max(maxy, y[j])
            if (maxx - minx) + (maxy - miny) > dispersion:
                exceeded = True
                break
        if exceeded:
            i += 1
            continue
        while j + 1 < n:
            k = j + 1
            nminx = min(minx, x[k])
            nmaxx = max(maxx, x[k])
            nminy = min(miny, y[k])
            nmaxy = max(maxy, y[k])
            if (nmaxx - nminx) + (nmaxy - nminy) > dispersion:
                break
            minx, maxx, miny, maxy = nminx, nmaxx, nminy, nmaxy
            j = k
        out.append((i, j))
        i = j + 1
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def cooccur_counts(codes, zones, n_zones):
    """Per-zone 4x4 co-occurrence counts of edge-direction codes."""
    codes = np.asarray(codes, dtype=np.int32)
    zones = np.asarray(zones, dtype=np.uint8)
    counts = np.zeros(n_zones * 16, dtype=np.float64)
    for dr, dc in _COOCCUR_OFFSETS:
        h, w = codes.shape
        r0, r1 = max(0, -dr), min(h, h - dr)
        c0, c1 = max(0, -dc), min(w, w - dc)
        p = codes[r0:r1, c0:c1]
        q = codes[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        z = zones[r0:r1, c0:c1]
        mask = (p >= 0) & (q >= 0)
        if not mask.any():
            continue
        flat = (z[mask].astype(np.int64) * 16 + p[mask] * 4 + q[mask])
        counts += np.bincount(flat, minlength=n_zones * 16)
    return counts.reshape(n_zones, 4, 4)


def brightness_counts(lum, zones, n_zones, n_bins, lo, hi):
    """Per-zone histogram of brightness differences to east/south neighbours."""
    lum = np.asarray(lum, dtype=np.float64)
    zones = np.asarray(zones, dtype=np.uint8)
    counts = np.zeros(n_zones * n_bins, dtype=np.float64)
    scale = n_bins / (hi - lo)
    h, w = lum.shape
    for dr, dc in _BRIGHTNESS_OFFSETS:
        r1, c1 = h - dr, w - dc
        d = lum[dr:, dc:] - lum[:r1, :c1]
        z = zones[:r1, :c1]
        idx = np.clip(np.floor((d - lo) * scale).astype(np.int64), 0, n_bins - 1)
        flat = z.astype(np.int64).ravel() * n_bins + idx.ravel()
        counts += np.bincount(flat, minlength=n_zones * n_bins)
    return counts.reshape(n_zones, n_bins)
