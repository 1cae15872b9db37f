"""Data types for gaze streams and collage geometry."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GazeSample:
    """One tracker sample: time in ms, screen position, pupil size, validity."""

    t: float
    x: float
    y: float
    pupil: float = 0.0
    valid: bool = True


@dataclass(frozen=True)
class Fixation:
    """A detected fixation: time span plus centroid of its samples."""

    start: float
    end: float
    x: float
    y: float
    n_samples: int

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Cell:
    """Axis-aligned screen rectangle showing one image."""

    image_id: str
    x: float
    y: float
    w: float
    h: float

    def contains(self, px: float, py: float) -> bool:
        return (self.x <= px < self.x + self.w) and (self.y <= py < self.y + self.h)


@dataclass(frozen=True)
class Visit:
    """A maximal run of consecutive samples inside one image's cell."""

    image_id: str
    entry_t: float
    exit_t: float
    samples: tuple[GazeSample, ...]


@dataclass
class CollageLayout:
    """Non-overlapping cells tiling (part of) the screen."""

    cells: list[Cell] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [c.image_id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate image id in layout")
        for i, a in enumerate(self.cells):
            for b in self.cells[i + 1:]:
                if (a.x < b.x + b.w and b.x < a.x + a.w
                        and a.y < b.y + b.h and b.y < a.y + a.h):
                    raise ValueError(
                        f"cells {a.image_id!r} and {b.image_id!r} overlap")

    @property
    def image_ids(self) -> list[str]:
        return [c.image_id for c in self.cells]

    def cell_of(self, image_id: str) -> Cell:
        for cell in self.cells:
            if cell.image_id == image_id:
                return cell
        raise KeyError(image_id)

    def cell_at(self, px: float, py: float) -> Cell | None:
        for cell in self.cells:
            if cell.contains(px, py):
                return cell
        return None

    @classmethod
    def grid(cls, image_ids, cols: int = 5, rows: int = 3,
             cell_w: float = 256.0, cell_h: float = 256.0,
             origin: tuple[float, float] = (0.0, 0.0)) -> "CollageLayout":
        """Row-major grid layout; image_ids must fill at most cols*rows cells."""
        if len(image_ids) > cols * rows:
            raise ValueError("too many images for grid")
        ox, oy = origin
        cells = [
            Cell(image_id,
                 ox + (k % cols) * cell_w,
                 oy + (k // cols) * cell_h,
                 cell_w, cell_h)
            for k, image_id in enumerate(image_ids)
        ]
        return cls(cells)


@dataclass(frozen=True)
class EyeFeatureVector:
    """Per-image eye-movement feature vector for one collage round."""

    image_id: str
    values: np.ndarray
    viewed: bool
