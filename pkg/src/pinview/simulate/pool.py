"""Pools of recorded or synthetic eye-feature vectors for simulated gaze.

Real viewing behaviour depends on how many relevant images share the
collage, so pools are split into six bins by that count: 0, 1, 2-3, 4-6,
7-10 and 11-15 relevant images.  A simulated viewer draws, for every
image on a collage, a feature vector from the (relevance, bin) cell that
matches the ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pinview.gaze.features import N_EYE_FEATURES

BIN_LABELS = ("0", "1", "2-3", "4-6", "7-10", "11-15")
N_BINS = len(BIN_LABELS)

# Feature indices carrying class signal in synthetic pools (viewing time,
# sample share inside fixations, fixation count/length statistics).
DEFAULT_INFORMATIVE = (0, 2, 9, 11, 12, 15)


def bin_index(n_relevant: int, collage_size: int = 15) -> int:
    """Bin index for the number of relevant images on one collage."""
    if not 0 <= n_relevant <= collage_size:
        raise ValueError(
            f"relevant count {n_relevant} outside 0..{collage_size}")
    if n_relevant == 0:
        return 0
    if n_relevant == 1:
        return 1
    if n_relevant <= 3:
        return 2
    if n_relevant <= 6:
        return 3
    if n_relevant <= 10:
        return 4
    return 5


@dataclass
class SimPool:
    """Per-bin banks of eye-feature vectors for both relevance classes."""

    positive: list            # N_BINS arrays of shape (m, 19)
    negative: list

    def __post_init__(self):
        if len(self.positive) != N_BINS or len(self.negative) != N_BINS:
            raise ValueError(f"pools must have {N_BINS} bins")
        for bank in (self.positive, self.negative):
            for b, arr in enumerate(bank):
                arr = np.asarray(arr, dtype=np.float64)
                if arr.ndim != 2 or arr.shape[0] == 0 \
                        or arr.shape[1] != N_EYE_FEATURES:
                    raise ValueError(
                        f"bin {BIN_LABELS[b]!r} must hold a non-empty "
                        f"(m, {N_EYE_FEATURES}) array")

    def draw(self, relevant: bool, bin_idx: int,
             rng: np.random.Generator) -> np.ndarray:
        """One feature vector for an image of the given relevance class."""
        bank = self.positive if relevant else self.negative
        rows = bank[bin_idx]
        return np.array(rows[int(rng.integers(rows.shape[0]))])


# Per-bin multipliers on the class separation, mean 1.0: discriminating a
# lone relevant image on a barren collage is much harder than telling
# classes apart on a relevance-rich one where attention patterns diverge.
ATTENTION_BIN_PROFILE = (0.05, 0.15, 0.4, 0.9, 1.7, 2.8)


def generate_synthetic_pool(separation: float = 3.0, seed: int = 0,
                            samples_per_bin: int = 400,
                            informative=DEFAULT_INFORMATIVE,
                            bin_context: float = 0.0,
                            bin_profile=None) -> SimPool:
    """Gaussian pools whose class means sit ``separation`` apart.

    All 19 features are unit-variance Gaussians; on the informative
    subset the class means differ by a vector of Mahalanobis length
    ``separation`` (equal share per informative feature), putting the
    optimal discriminator's AUC at Phi(separation / sqrt(2)).

    Two optional bin-structure knobs model attention effects seen in
    recorded pools (defaults keep every bin identically distributed):

    - ``bin_context``: class-neutral mean shift per bin along the
      discriminative direction, from -bin_context (bin "0") to
      +bin_context (bin "11-15") standardized units.  Overall attention
      rises with collage richness, so scores stop being comparable
      across collages while within-bin separation is untouched.
    - ``bin_profile``: six multipliers with mean 1.0 scaling the class
      separation per bin (pooled class means stay ``separation`` apart).
    """
    if separation < 0:
        raise ValueError("separation must be non-negative")
    if bin_context < 0:
        raise ValueError("bin_context must be non-negative")
    if bin_profile is None:
        profile = np.ones(N_BINS)
    else:
        profile = np.asarray(bin_profile, dtype=np.float64)
        if profile.shape != (N_BINS,) or np.any(profile < 0):
            raise ValueError(f"bin_profile must be {N_BINS} non-negative values")
        if abs(profile.mean() - 1.0) > 1e-9:
            raise ValueError("bin_profile multipliers must average to 1")
    rng = np.random.default_rng(seed)
    informative = tuple(informative)
    delta = np.zeros(N_EYE_FEATURES)
    delta[list(informative)] = separation / np.sqrt(len(informative))
    unit = np.zeros(N_EYE_FEATURES)
    unit[list(informative)] = 1.0 / np.sqrt(len(informative))
    positive, negative = [], []
    for b in range(N_BINS):
        context = bin_context * (2.0 * b / (N_BINS - 1) - 1.0) * unit
        half = profile[b] * delta / 2.0
        positive.append(context + half
                        + rng.standard_normal((samples_per_bin,
                                               N_EYE_FEATURES)))
        negative.append(context - half
                        + rng.standard_normal((samples_per_bin,
                                               N_EYE_FEATURES)))
    return SimPool(positive=positive, negative=negative)


def draw_training_set(pool: SimPool, per_cell: int, rng: np.random.Generator):
    """Labelled sample mixing all bins equally: (X, y) for predictor training."""
    xs, ys = [], []
    for b in range(N_BINS):
        for relevant in (True, False):
            for _ in range(per_cell):
                xs.append(pool.draw(relevant, b, rng))
                ys.append(1.0 if relevant else 0.0)
    return np.vstack(xs), np.array(ys)
