# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: fixation window scan and per-zone pixel-pair counting.

Semantics must match pinview._native.fallback exactly; the test suite
checks parity between the two backends.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BACKEND_NAME = "compiled"


def idt_windows(double[::1] t, double[::1] x, double[::1] y,
                double dispersion, double min_duration):
    """Dispersion-threshold fixation windows over a time-ordered sample stream.

    Returns an (k, 2) int64 array of inclusive [start, end] sample index
    pairs.  A window qualifies when its bounding-box dispersion
    (max x - min x) + (max y - min y) stays within ``dispersion`` and its
    time span t[end] - t[start] reaches ``min_duration``; each reported
    window is maximal and windows never overlap.
    """
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t i = 0, j, k
    cdef double minx, maxx, miny, maxy
    cdef double nminx, nmaxx, nminy, nmaxy
    cdef bint exceeded
    out = []
    while i < n:
        j = i
        minx = x[i]; maxx = x[i]; miny = y[i]; maxy = y[i]
        exceeded = False
        while t[j] - t[i] < min_duration:
            j += 1
            if j >= n:
                return np.asarray(out, dtype=np.int64).reshape(-1, 2)
            if x[j] < minx: minx = x[j]
            if x[j] > maxx: maxx = x[j]
            if y[j] < miny: miny = y[j]
            if y[j] > maxy: maxy = y[j]
            if (maxx - minx) + (maxy - miny) > dispersion:
                exceeded = True
                break
        if exceeded:
            i += 1
            continue
        while j + 1 < n:
            k = j + 1
            nminx = minx if x[k] >= minx else x[k]
            nmaxx = maxx if x[k] <= maxx else x[k]
            nminy = miny if y[k] >= miny else y[k]
            nmaxy = maxy if y[k] <= maxy else y[k]
            if (nmaxx - nminx) + (nmaxy - nminy) > dispersion:
                break
            minx = nminx; maxx = nmaxx; miny = nminy; maxy = nmaxy
            j = k
        out.append((i, j))
        i = j + 1
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def cooccur_counts(int[:, ::1] codes, unsigned char[:, ::1] zones, int n_zones):
    """Count ordered pairs of edge-direction codes between neighbouring pixels.

    ``codes`` holds a direction code in 0..3 for edge pixels and -1
    elsewhere.  For each edge pixel p and each of its east, south,
    south-east and south-west neighbours q that is also an edge pixel,
    counts[zone(p), code(p), code(q)] is incremented.
    """
    cdef Py_ssize_t h = codes.shape[0], w = codes.shape[1]
    cdef Py_ssize_t r, c, rr, cc, o
    cdef int cp, cq
    cdef int[4] dr = [0, 1, 1, 1]
    cdef int[4] dc = [1, 0, 1, -1]
    counts = np.zeros((n_zones, 4, 4), dtype=np.float64)
    cdef double[:, :, ::1] cv = counts
    for r in range(h):
        for c in range(w):
            cp = codes[r, c]
            if cp < 0:
                continue
            for o in range(4):
                rr = r + dr[o]
                cc = c + dc[o]
                if rr < 0 or rr >= h or cc < 0 or cc >= w:
                    continue
                cq = codes[rr, cc]
                if cq < 0:
                    continue
                cv[zones[r, c], cp, cq] += 1.0
    return counts


def brightness_counts(double[:, ::1] lum, unsigned char[:, ::1] zones,
                      int n_zones, int n_bins, double lo, double hi):
    """Histogram of brightness differences to east/south neighbours, per zone.

    The difference lum[q] - lum[p] is linearly binned over [lo, hi) into
    ``n_bins`` bins; out-of-range differences land in the end bins.
    """
    cdef Py_ssize_t h = lum.shape[0], w = lum.shape[1]
    cdef Py_ssize_t r, c, rr, cc, o
    cdef double d, scale = n_bins / (hi - lo)
    cdef long idx
    cdef int[2] dr = [0, 1]
    cdef int[2] dc = [1, 0]
    counts = np.zeros((n_zones, n_bins), dtype=np.float64)
    cdef double[:, ::1] cv = counts
    for r in range(h):
        for c in range(w):
            for o in range(2):
                rr = r + dr[o]
                cc = c + dc[o]
                if rr >= h or cc >= w:
                    continue
                d = lum[rr, cc] - lum[r, c]
                idx = <long>floor((d - lo) * scale)
                if idx < 0:
                    idx = 0
                elif idx >= n_bins:
                    idx = n_bins - 1
                cv[zones[r, c], idx] += 1.0
    return counts
