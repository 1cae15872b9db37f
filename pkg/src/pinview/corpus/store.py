"""Corpus storage: image records, feature tables, persistence, import.

A corpus is persisted as a directory holding ``corpus.json`` (manifest)
plus ``features.bin`` (all feature rows as little-endian float64, row-major,
concatenated per feature block in manifest order).  Re-saving an unchanged
corpus is byte-identical.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FEATURE_DIMS, DegenerateInputError, extract_features

MANIFEST_NAME = "corpus.json"
BLOB_NAME = "features.bin"
_IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class FeatureSpec:
    """A named feature space: dimensionality plus whether we can compute it."""

    name: str
    dim: int
    computed: bool


COMPUTED_SPECS = tuple(
    FeatureSpec(name, dim, True) for name, dim in FEATURE_DIMS.items()
)
IMPORT_SPECS = (
    FeatureSpec("dct_grid", 12, False),
    FeatureSpec("dominant_colors", 6, False),
    FeatureSpec("local_edge_hist", 80, False),
    FeatureSpec("haar_hsv", 256, False),
    FeatureSpec("sift_hist", 256, False),
)
ALL_SPECS = {spec.name: spec for spec in COMPUTED_SPECS + IMPORT_SPECS}


@dataclass(frozen=True)
class ImageRecord:
    """One corpus image: stable id, optional source path, optional labels."""

    id: str
    source: str | None = None
    labels: tuple[str, ...] = ()


@dataclass
class IngestReport:
    """What happened during a directory ingest."""

    ingested: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (path, reason)


class ImportFormatError(ValueError):
    """Raised when an external feature table row cannot be attached."""


class Corpus:
    """Immutable-ish collection of images with per-space feature matrices."""

    def __init__(self, records, feature_data, feature_present=None, name="corpus"):
        records = sorted(records, key=lambda r: r.id)
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate image ids in corpus")
        self.name = name
        self.records = records
        self._index = {r.id: i for i, r in enumerate(records)}
        self._data: dict[str, np.ndarray] = {}
        self._present: dict[str, np.ndarray] = {}
        n = len(records)
        for fname, mat in feature_data.items():
            spec = ALL_SPECS.get(fname)
            if spec is None:
                raise ValueError(f"unknown feature space {fname!r}")
            mat = np.ascontiguousarray(mat, dtype=np.float64)
            if mat.shape != (n, spec.dim):
                raise ValueError(
                    f"feature {fname!r}: expected shape {(n, spec.dim)}, "
                    f"got {mat.shape}")
            self._data[fname] = mat
            if feature_present and fname in feature_present:
                pres = np.asarray(feature_present[fname], dtype=bool)
                if pres.shape != (n,):
                    raise ValueError(
                        f"feature {fname!r}: present mask must have length {n}")
            else:
                pres = np.ones(n, dtype=bool)
            self._present[fname] = pres

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._index

    def record(self, image_id: str) -> ImageRecord:
        return self.records[self._index[image_id]]

    def feature_names(self) -> list[str]:
        return sorted(self._data)

    def has_feature(self, image_id: str, name: str) -> bool:
        if name not in self._data or image_id not in self._index:
            return False
        return bool(self._present[name][self._index[image_id]])

    def feature_vector(self, image_id: str, name: str) -> np.ndarray | None:
        if not self.has_feature(image_id, name):
            return None
        return self._data[name][self._index[image_id]]

    def feature_matrix(self, name: str, ids=None) -> np.ndarray:
        """Rows for ``ids`` (default: all) in the given feature space.

        Missing rows come back as zero vectors.
        """
        mat = self._data[name]
        if ids is None:
            rows = mat
            pres = self._present[name]
        else:
            idx = np.array([self._index[i] for i in ids], dtype=np.intp)
            rows = mat[idx] if idx.size else mat[:0]
            pres = self._present[name][idx] if idx.size else np.ones(0, bool)
        out = rows.copy()
        out[~pres] = 0.0
        return out

    def labels_of(self, image_id: str) -> tuple[str, ...]:
        return self.record(image_id).labels

    def categories(self) -> list[str]:
        cats = set()
        for rec in self.records:
            cats.update(rec.labels)
        return sorted(cats)

    def images_with_label(self, label: str) -> list[str]:
        return [r.id for r in self.records if label in r.labels]

    # ------------------------------------------------------------- persistence
    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        feature_names = sorted(self._data)
        manifest = {
            "format": 1,
            "name": self.name,
            "blob": BLOB_NAME,
            "blob_dtype": "<f8",
            "images": [
                {"id": r.id, "source": r.source, "labels": list(r.labels)}
                for r in self.records
            ],
            "features": [
                {
                    "name": fname,
                    "dim": ALL_SPECS[fname].dim,
                    "computed": ALL_SPECS[fname].computed,
                    "present": [int(v) for v in self._present[fname]],
                }
                for fname in feature_names
            ],
        }
        blob = b"".join(
            np.ascontiguousarray(self._data[fname], dtype="<f8").tobytes()
            for fname in feature_names
        )
        (directory / MANIFEST_NAME).write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        (directory / BLOB_NAME).write_bytes(blob)

    @classmethod
    def load(cls, directory) -> "Corpus":
        directory = Path(directory)
        manifest = json.loads((directory / MANIFEST_NAME).read_text())
        if manifest.get("format") != 1:
            raise ValueError("unsupported corpus format")
        records = [
            ImageRecord(img["id"], img.get("source"), tuple(img.get("labels", ())))
            for img in manifest["images"]
        ]
        raw = np.frombuffer((directory / manifest["blob"]).read_bytes(), dtype="<f8")
        n = len(records)
        data, present = {}, {}
        offset = 0
        for feat in manifest["features"]:
            dim = feat["dim"]
            block = raw[offset: offset + n * dim].reshape(n, dim)
            offset += n * dim
            data[feat["name"]] = block
            present[feat["name"]] = np.array(feat["present"], dtype=bool)
        if offset != raw.size:
            raise ValueError("feature blob size does not match manifest")
        return cls(records, data, present, name=manifest.get("name", "corpus"))


def ingest_directory(directory, name=None, labels_file="labels.json"):
    """Build a corpus from the images in a directory.

    Image ids are file stems.  Labels are read from an optional JSON file
    mapping id to a list of labels.  Unreadable or degenerate images are
    skipped and reported, not fatal.  Returns (corpus, report).
    """
    import cv2

    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    label_map = {}
    labels_path = directory / labels_file
    if labels_path.is_file():
        label_map = {
            k: tuple(sorted(v)) for k, v in json.loads(labels_path.read_text()).items()
        }
    paths = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in _IMAGE_EXTS)
    report = IngestReport()
    records, rows = [], {fname: [] for fname in FEATURE_DIMS}
    seen_ids = set()
    for path in paths:
        image_id = path.stem
        if image_id in seen_ids:
            report.skipped.append((str(path), "duplicate id"))
            continue
        bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
        if bgr is None:
            report.skipped.append((str(path), "unreadable"))
            continue
        rgb = cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)
        try:
            feats = extract_features(rgb)
        except DegenerateInputError as exc:
            report.skipped.append((str(path), str(exc)))
            continue
        seen_ids.add(image_id)
        records.append(ImageRecord(image_id, str(path), label_map.get(image_id, ())))
        for fname, vec in feats.items():
            rows[fname].append(vec)
        report.ingested.append(image_id)
    order = np.argsort([r.id for r in records])
    data = {
        fname: (np.stack(vecs)[order] if vecs
                else np.zeros((0, FEATURE_DIMS[fname])))
        for fname, vecs in rows.items()
    }
    corpus = Corpus([records[i] for i in order], data,
                    name=name or directory.name)
    if report.skipped:
        warnings.warn(f"skipped {len(report.skipped)} file(s) during ingest",
                      stacklevel=2)
    return corpus, report


def import_features(corpus: Corpus, table_path) -> int:
    """Attach externally computed feature rows to a corpus.

    The table is tab-separated: ``id<TAB>feature-name<TAB>v1,v2,...``.
    Unknown image ids, unknown feature names and dimension mismatches raise
    ImportFormatError naming the offending row.  Duplicate rows for the same
    (id, feature) pair: the last one wins.  Returns the number of rows
    attached.
    """
    table_path = Path(table_path)
    staged: dict[str, dict[str, np.ndarray]] = {}
    with table_path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ImportFormatError(
                    f"line {lineno}: expected 3 tab-separated fields, "
                    f"got {len(parts)}")
            image_id, fname, payload = parts
            if image_id not in corpus:
                raise ImportFormatError(
                    f"line {lineno}: unknown image id {image_id!r}")
            spec = ALL_SPECS.get(fname)
            if spec is None:
                raise ImportFormatError(
                    f"line {lineno}: unknown feature name {fname!r}")
            try:
                vec = np.array([float(v) for v in payload.split(",")],
                               dtype=np.float64)
            except ValueError as exc:
                raise ImportFormatError(
                    f"line {lineno}: malformed value ({exc})") from None
            if vec.shape[0] != spec.dim:
                raise ImportFormatError(
                    f"line {lineno}: feature {fname!r} expects dim {spec.dim}, "
                    f"row has {vec.shape[0]}")
            if not np.all(np.isfinite(vec)):
                raise ImportFormatError(f"line {lineno}: non-finite value")
            staged.setdefault(fname, {})[image_id] = vec
    count = 0
    n = len(corpus)
    for fname, by_id in staged.items():
        if fname not in corpus._data:
            corpus._data[fname] = np.zeros((n, ALL_SPECS[fname].dim))
            corpus._present[fname] = np.zeros(n, dtype=bool)
        for image_id, vec in by_id.items():
            row = corpus._index[image_id]
            corpus._data[fname][row] = vec
            corpus._present[fname][row] = True
            count += 1
    return count
