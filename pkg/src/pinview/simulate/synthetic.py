"""Synthetic labelled corpora for offline experiments and demos.

Images are latent feature vectors, not pixels: each category owns a unit
signature direction per feature space, scaled by that space's signal
strength, plus unit Gaussian noise.  One space carries strong category
signal, one weak, one none, so metric learning has something real to
discover.  Optionally writes small placeholder PNGs (category-tinted
noise) so a browser UI has something to draw; the feature vectors are
unrelated to those pixels.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from pinview.corpus.store import ALL_SPECS, Corpus, ImageRecord

# (feature space, category signal strength); noise is always unit variance.
SPACE_PLAN = (
    ("dct_grid", 3.0),
    ("dominant_colors", 1.0),
    ("sift_hist", 0.0),
)

DEFAULT_FRACTIONS = (0.066, 0.08, 0.09, 0.10, 0.11, 0.12,
                     0.104, 0.11, 0.12, 0.10)


def _counts_from_fractions(n_images: int, fractions) -> list:
    """Largest-remainder apportionment of n_images over the fractions."""
    raw = np.asarray(fractions, dtype=np.float64) * n_images
    counts = np.floor(raw).astype(int)
    short = n_images - counts.sum()
    order = np.argsort(-(raw - counts))
    for k in range(short):
        counts[order[k % len(counts)]] += 1
    return counts.tolist()


def make_synthetic_corpus(n_images: int = 1000, seed: int = 0,
                          fractions=DEFAULT_FRACTIONS,
                          assets_dir=None,
                          name: str = "synthetic") -> Corpus:
    """Labelled synthetic corpus with per-category feature signatures.

    Category k is named ``cat{k:02d}`` and covers roughly
    ``fractions[k]`` of the corpus (largest-remainder rounding; with the
    defaults and 1000 images, cat00 holds exactly 66).  When
    ``assets_dir`` is given, a placeholder PNG per image is written
    there and recorded as the image source.
    """
    if n_images < len(fractions):
        raise ValueError("need at least one image per category")
    rng = np.random.default_rng(seed)
    counts = _counts_from_fractions(n_images, fractions)
    labels = [f"cat{k:02d}" for k in range(len(fractions))]
    assignment = np.repeat(np.arange(len(counts)), counts)
    rng.shuffle(assignment)

    signatures = {}
    for space, strength in SPACE_PLAN:
        dim = ALL_SPECS[space].dim
        sig = rng.standard_normal((len(counts), dim))
        sig /= np.linalg.norm(sig, axis=1, keepdims=True)
        signatures[space] = sig * strength

    width = max(4, len(str(n_images - 1)))
    ids = [f"img{k:0{width}d}" for k in range(n_images)]
    data = {}
    for space, _ in SPACE_PLAN:
        dim = ALL_SPECS[space].dim
        noise = rng.standard_normal((n_images, dim))
        data[space] = signatures[space][assignment] + noise

    sources = [None] * n_images
    if assets_dir is not None:
        sources = _render_assets(assets_dir, ids, assignment, len(counts), seed)

    records = [
        ImageRecord(ids[k], sources[k], (labels[int(assignment[k])],))
        for k in range(n_images)
    ]
    return Corpus(records, data, name=name)


def _render_assets(directory, ids, assignment, n_categories, seed) -> list:
    """Category-tinted noise PNGs; purely cosmetic for demo UIs."""
    import cv2

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    hues = (np.arange(n_categories) * (180 / n_categories)).astype(np.uint8)
    sources = []
    for image_id, cat in zip(ids, assignment):
        hsv = np.full((64, 64, 3), 255, dtype=np.uint8)
        hsv[:, :, 0] = hues[int(cat)]
        hsv[:, :, 1] = 140
        hsv[:, :, 2] = np.clip(
            180 + rng.integers(-60, 60, size=(64, 64)), 0, 255).astype(np.uint8)
        path = directory / f"{image_id}.png"
        cv2.imwrite(str(path), cv2.cvtColor(hsv, cv2.COLOR_HSV2BGR))
        sources.append(str(path))
    return sources
