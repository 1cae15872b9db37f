"""Image corpus handling: visual feature extraction, storage, import."""
from .features import (
    BRIGHTNESS_BINS,
    BRIGHTNESS_RANGE,
    DegenerateInputError,
    EDGE_MAG_THRESHOLD,
    FEATURE_DIMS,
    MIN_SIZE,
    N_ZONES,
    extract_features,
    zone_map,
)
from .store import (
    ALL_SPECS,
    COMPUTED_SPECS,
    Corpus,
    FeatureSpec,
    ImageRecord,
    IMPORT_SPECS,
    ImportFormatError,
    IngestReport,
    import_features,
    ingest_directory,
)

__all__ = [
    "ALL_SPECS",
    "BRIGHTNESS_BINS",
    "BRIGHTNESS_RANGE",
    "COMPUTED_SPECS",
    "Corpus",
    "DegenerateInputError",
    "EDGE_MAG_THRESHOLD",
    "FEATURE_DIMS",
    "FeatureSpec",
    "ImageRecord",
    "IMPORT_SPECS",
    "ImportFormatError",
    "IngestReport",
    "MIN_SIZE",
    "N_ZONES",
    "extract_features",
    "import_features",
    "ingest_directory",
    "zone_map",
]
