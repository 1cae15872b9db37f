"""Visual feature extraction for corpus images.

Each image is split into five zones (a centre ellipse inscribed in the
raster plus the four corner remainders) and described by six low-level
descriptors computed per zone or on the whole raster:

- ``avg_lab``            average CIE Lab colour per zone            (15)
- ``lab_moments``        2nd/3rd/4th central Lab moments per zone   (45)
- ``edge_hist``          histogram of four Sobel edge directions    (20)
- ``edge_cooccurrence``  4x4 direction co-occurrence per zone       (80)
- ``edge_fft``           magnitude of the 16x16 FFT of the Sobel
                         edge-magnitude image (half spectrum)       (128)
- ``brightness_hist``    histogram of relative brightness of
                         neighbouring pixels per zone               (40)

Histograms are L1-normalised per zone; zones with no mass stay zero.
"""
from __future__ import annotations

import numpy as np

try:
    import cv2
except ImportError as _exc:  # pragma: no cover - hard dependency in practice
    cv2 = None
    _cv2_error = _exc

from pinview._native import brightness_counts, cooccur_counts

N_ZONES = 5
MIN_SIZE = 16
FFT_SIZE = 16
BRIGHTNESS_BINS = 8
BRIGHTNESS_RANGE = (-50.0, 50.0)
EDGE_MAG_THRESHOLD = 1.0

FEATURE_DIMS = {
    "avg_lab": 15,
    "lab_moments": 45,
    "edge_hist": 20,
    "edge_cooccurrence": 80,
    "edge_fft": 128,
    "brightness_hist": 40,
}


class DegenerateInputError(ValueError):
    """Raised for rasters too small or malformed to describe."""


def zone_map(height: int, width: int) -> np.ndarray:
    """Zone index per pixel: 0 = inscribed centre ellipse, 1..4 = corners.

    Corners are numbered top-left, top-right, bottom-left, bottom-right.
    """
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    ry, rx = height / 2.0, width / 2.0
    yy, xx = np.mgrid[0:height, 0:width]
    inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    zones = np.where(yy <= cy, 1, 3) + np.where(xx <= cx, 0, 1)
    zones[inside] = 0
    return zones.astype(np.uint8)


def _to_lab(pixels: np.ndarray) -> np.ndarray:
    """RGB raster (uint8 0..255 or float 0..1) to CIE Lab (L 0..100)."""
    if cv2 is None:  # pragma: no cover
        raise RuntimeError("opencv is required for feature extraction") from _cv2_error
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DegenerateInputError(
            f"expected an HxWx3 colour raster, got shape {arr.shape}")
    if arr.shape[0] < MIN_SIZE or arr.shape[1] < MIN_SIZE:
        raise DegenerateInputError(
            f"raster {arr.shape[0]}x{arr.shape[1]} is smaller than "
            f"{MIN_SIZE}x{MIN_SIZE}")
    if arr.dtype == np.uint8:
        rgb = arr.astype(np.float32) / 255.0
    else:
        rgb = np.clip(arr.astype(np.float32), 0.0, 1.0)
    return cv2.cvtColor(rgb, cv2.COLOR_RGB2Lab)


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    """L1-normalise each row; all-zero rows are left untouched."""
    sums = mat.sum(axis=1, keepdims=True)
    safe = np.where(sums > 0, sums, 1.0)
    return mat / safe


def extract_features(pixels: np.ndarray) -> dict[str, np.ndarray]:
    """Compute all six descriptors for one RGB raster.

    Returns a dict mapping descriptor name to a 1-D float64 vector with
    the dimensionality recorded in FEATURE_DIMS.  Raises
    DegenerateInputError for rasters smaller than 16x16 or without three
    colour channels.
    """
    lab = _to_lab(pixels).astype(np.float64)
    h, w = lab.shape[:2]
    zones = zone_map(h, w)
    zone_flat = zones.ravel()
    lab_flat = lab.reshape(-1, 3)

    avg = np.zeros((N_ZONES, 3))
    moments = np.zeros((N_ZONES, 3, 3))
    for z in range(N_ZONES):
        vals = lab_flat[zone_flat == z]
        if vals.size == 0:
            continue
        mean = vals.mean(axis=0)
        avg[z] = mean
        centred = vals - mean
        for k, order in enumerate((2, 3, 4)):
            moments[z, :, k] = (centred ** order).mean(axis=0)

    lum = lab[:, :, 0]
    gx = cv2.Sobel(lum, cv2.CV_64F, 1, 0, ksize=3)
    gy = cv2.Sobel(lum, cv2.CV_64F, 0, 1, ksize=3)
    mag = np.hypot(gx, gy)
    edge = mag > EDGE_MAG_THRESHOLD
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    codes = (np.floor((angle + np.pi / 8) / (np.pi / 4)).astype(np.int64) % 4)

    edge_hist = np.zeros((N_ZONES, 4))
    edge_z = zone_flat[edge.ravel()]
    edge_c = codes.ravel()[edge.ravel()]
    if edge_c.size:
        flat = np.bincount(edge_z.astype(np.int64) * 4 + edge_c,
                           minlength=N_ZONES * 4)
        edge_hist = flat.reshape(N_ZONES, 4).astype(np.float64)
    edge_hist = _normalize_rows(edge_hist)

    codes_masked = np.where(edge, codes, -1).astype(np.int32)
    cooc = np.asarray(cooccur_counts(np.ascontiguousarray(codes_masked),
                                     np.ascontiguousarray(zones), N_ZONES))
    cooc = _normalize_rows(cooc.reshape(N_ZONES, 16))

    resized = cv2.resize(mag, (FFT_SIZE, FFT_SIZE), interpolation=cv2.INTER_AREA)
    spectrum = np.abs(np.fft.fft2(resized))[:, : FFT_SIZE // 2]

    lo, hi = BRIGHTNESS_RANGE
    bright = np.asarray(brightness_counts(np.ascontiguousarray(lum),
                                          np.ascontiguousarray(zones),
                                          N_ZONES, BRIGHTNESS_BINS, lo, hi))
    bright = _normalize_rows(bright)

    out = {
        "avg_lab": avg.ravel(),
        "lab_moments": moments.reshape(N_ZONES, 9).ravel(),
        "edge_hist": edge_hist.ravel(),
        "edge_cooccurrence": cooc.ravel(),
        "edge_fft": spectrum.ravel(),
        "brightness_hist": bright.ravel(),
    }
    for name, vec in out.items():
        assert vec.shape == (FEATURE_DIMS[name],)
    return {name: np.ascontiguousarray(vec, dtype=np.float64)
            for name, vec in out.items()}
