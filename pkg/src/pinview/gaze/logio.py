"""Gaze log serialization.

One sample per line, tab-separated: ``t_ms<TAB>x<TAB>y<TAB>pupil<TAB>valid``
with valid encoded as 0 or 1.  Blank lines and lines starting with ``#``
are ignored.
"""
from __future__ import annotations

from pathlib import Path

from .types import GazeSample


def parse_gaze_log(source) -> list[GazeSample]:
    """Parse a gaze log from a path or a string of log text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and Path(source).is_file()):
        text = Path(source).read_text()
    else:
        text = source
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(
                f"line {lineno}: expected 5 tab-separated fields, got {len(parts)}")
        try:
            t, x, y, pupil = (float(v) for v in parts[:4])
            valid_raw = parts[4].strip()
            if valid_raw not in ("0", "1"):
                raise ValueError(f"valid flag must be 0 or 1, got {valid_raw!r}")
            samples.append(GazeSample(t, x, y, pupil, valid_raw == "1"))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return samples


def write_gaze_log(samples, path) -> None:
    lines = [
        f"{s.t:g}\t{s.x:g}\t{s.y:g}\t{s.pupil:g}\t{1 if s.valid else 0}"
        for s in samples
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
