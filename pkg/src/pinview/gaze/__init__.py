"""Gaze processing: fixation detection, collage assignment, eye features."""
from .types import Cell, CollageLayout, EyeFeatureVector, Fixation, GazeSample, Visit
from .fixations import detect_fixations
from .features import (
    EYE_FEATURE_NAMES,
    N_EYE_FEATURES,
    assign_visits,
    compute_eye_features,
    extract_collage_features,
)
from .logio import parse_gaze_log, write_gaze_log

__all__ = [
    "Cell",
    "CollageLayout",
    "EYE_FEATURE_NAMES",
    "EyeFeatureVector",
    "Fixation",
    "GazeSample",
    "N_EYE_FEATURES",
    "Visit",
    "assign_visits",
    "compute_eye_features",
    "detect_fixations",
    "extract_collage_features",
    "parse_gaze_log",
    "write_gaze_log",
]
