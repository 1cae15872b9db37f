"""Per-image eye-movement features computed from one collage viewing.

For every image on the collage a 19-dimensional feature vector is
derived from the gaze samples that fell inside its cell, the fixations
whose centroid lies in the cell, and the visit structure (maximal runs
of consecutive in-cell samples).  Images never looked at get an all-zero
vector and viewed=False.
"""
from __future__ import annotations

import math

import numpy as np

from .fixations import DEFAULT_DISPERSION, DEFAULT_MIN_DURATION, detect_fixations
from .types import Cell, CollageLayout, EyeFeatureVector, Fixation, Visit

EYE_FEATURE_NAMES = (
    "numMeasurements",      # ln(1 + total viewing time in ms)
    "numOutsideFix",        # viewing time not covered by fixations (ms)
    "ratioInsideOutside",   # share of samples inside fixations, in [0, 1]
    "speed",                # mean distance between consecutive in-visit samples
    "coverage",             # 4x4 sub-cells of the image cell containing samples
    "normCoverage",         # coverage / number of samples
    "pupil",                # maximal observed pupil size
    "nJumps1",              # breaks between visits longer than 60 ms
    "nJumps2",              # breaks between visits longer than 600 ms
    "numFix",               # number of fixations on the image
    "meanFixLen",           # mean fixation duration (ms)
    "totalFixLen",          # total fixation duration (ms)
    "fixPrct",              # totalFixLen / viewing time, in [0, 1]
    "nJumpsFix",            # number of re-visits (visits after the first)
    "maxAngle",             # largest angle between consecutive saccades (rad)
    "firstFixLen",          # duration of the first fixation (ms)
    "firstFixNum",          # fixations during the first visit
    "distPrev",             # distance from previous fixation to visit entry
    "durPrev",              # duration of that previous fixation (ms)
)
N_EYE_FEATURES = len(EYE_FEATURE_NAMES)

JUMP_BREAK_SHORT_MS = 60.0
JUMP_BREAK_LONG_MS = 600.0
COVERAGE_GRID = 4


def assign_visits(samples, layout: CollageLayout) -> list[Visit]:
    """Split a valid, time-ordered sample stream into per-cell visits.

    A visit is a maximal run of consecutive samples falling inside the
    same cell; samples outside every cell break runs and belong to no
    visit.  Returns visits in chronological order.
    """
    visits: list[Visit] = []
    current_id = None
    current: list = []
    for s in samples:
        if not s.valid:
            continue
        cell = layout.cell_at(s.x, s.y)
        cid = cell.image_id if cell is not None else None
        if cid != current_id:
            if current_id is not None and current:
                visits.append(Visit(current_id, current[0].t, current[-1].t,
                                    tuple(current)))
            current_id = cid
            current = []
        if cid is not None:
            current.append(s)
    if current_id is not None and current:
        visits.append(Visit(current_id, current[0].t, current[-1].t,
                            tuple(current)))
    return visits


def compute_eye_features(visits, fixations, cell: Cell,
                         prev_fixation: Fixation | None = None) -> np.ndarray:
    """The 19 eye features for one image from its visits and fixations.

    ``visits`` and ``fixations`` are this image's only, in chronological
    order; ``prev_fixation`` is the last fixation anywhere on screen that
    ended before the first visit (None when there was none).
    """
    out = np.zeros(N_EYE_FEATURES, dtype=np.float64)
    samples = [s for v in visits for s in v.samples]
    if not samples:
        return out
    n_samples = len(samples)

    total_view = sum(v.exit_t - v.entry_t for v in visits)
    durations = [f.duration for f in fixations]
    total_fix = float(sum(durations))

    out[0] = math.log1p(total_view)
    out[1] = max(0.0, total_view - total_fix)

    inside = sum(
        1 for s in samples
        if any(f.start <= s.t <= f.end for f in fixations)
    )
    out[2] = inside / n_samples

    dists = [
        math.hypot(b.x - a.x, b.y - a.y)
        for v in visits
        for a, b in zip(v.samples, v.samples[1:])
    ]
    out[3] = float(np.mean(dists)) if dists else 0.0

    cells_hit = set()
    for s in samples:
        col = min(COVERAGE_GRID - 1,
                  max(0, int((s.x - cell.x) / cell.w * COVERAGE_GRID)))
        row = min(COVERAGE_GRID - 1,
                  max(0, int((s.y - cell.y) / cell.h * COVERAGE_GRID)))
        cells_hit.add((row, col))
    out[4] = len(cells_hit)
    out[5] = len(cells_hit) / n_samples

    out[6] = max(s.pupil for s in samples)

    breaks = [b.entry_t - a.exit_t for a, b in zip(visits, visits[1:])]
    out[7] = sum(1 for b in breaks if b > JUMP_BREAK_SHORT_MS)
    out[8] = sum(1 for b in breaks if b > JUMP_BREAK_LONG_MS)

    out[9] = len(fixations)
    out[10] = float(np.mean(durations)) if durations else 0.0
    out[11] = total_fix
    out[12] = min(1.0, total_fix / total_view) if total_view > 0 else 0.0
    out[13] = max(0, len(visits) - 1)

    if len(fixations) >= 3:
        pts = np.array([(f.x, f.y) for f in fixations])
        vecs = np.diff(pts, axis=0)
        best = 0.0
        for a, b in zip(vecs, vecs[1:]):
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na > 0 and nb > 0:
                cosang = np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)
                best = max(best, math.acos(cosang))
        out[14] = best

    if fixations:
        out[15] = fixations[0].duration
    first = visits[0]
    out[16] = sum(1 for f in fixations if first.entry_t <= f.start <= first.exit_t)

    if prev_fixation is not None:
        entry = first.samples[0]
        out[17] = math.hypot(entry.x - prev_fixation.x, entry.y - prev_fixation.y)
        out[18] = prev_fixation.duration
    return out


def extract_collage_features(samples, layout: CollageLayout,
                             dispersion: float = DEFAULT_DISPERSION,
                             min_duration: float = DEFAULT_MIN_DURATION,
                             ) -> dict[str, EyeFeatureVector]:
    """Eye features for every image on a collage from one gaze stream.

    Fixations are detected on the whole stream first, then assigned to
    images by centroid location; visits are per-cell sample runs.
    """
    usable = [s for s in samples if s.valid]
    fixations = detect_fixations(usable, dispersion, min_duration)
    visits = assign_visits(usable, layout)

    by_image: dict[str, list[Visit]] = {}
    for v in visits:
        by_image.setdefault(v.image_id, []).append(v)
    fix_by_image: dict[str, list[Fixation]] = {}
    for f in fixations:
        cell = layout.cell_at(f.x, f.y)
        if cell is not None:
            fix_by_image.setdefault(cell.image_id, []).append(f)

    out = {}
    for cell in layout.cells:
        image_id = cell.image_id
        ivisits = by_image.get(image_id, [])
        if not ivisits:
            out[image_id] = EyeFeatureVector(
                image_id, np.zeros(N_EYE_FEATURES), viewed=False)
            continue
        entry_t = ivisits[0].entry_t
        prev = None
        for f in fixations:
            if f.end <= entry_t:
                prev = f
            else:
                break
        vec = compute_eye_features(ivisits, fix_by_image.get(image_id, []),
                                   cell, prev)
        out[image_id] = EyeFeatureVector(image_id, vec, viewed=True)
    return out
