"""Paired significance testing for modality comparisons."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _stats


@dataclass(frozen=True)
class TTestResult:
    """Two-sided paired t-test outcome."""

    statistic: float
    pvalue: float
    dof: int
    degenerate: bool = False


def paired_ttest(a, b) -> TTestResult:
    """Two-sided paired t-test on matched score lists.

    Zero-variance conventions: if every difference is exactly zero the
    result is (t=0, p=1) flagged degenerate; a non-zero constant
    difference gives p=0 with an infinite statistic, also flagged.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and equally long")
    n = a.size
    if n < 2:
        raise ValueError("need at least two pairs")
    diffs = a - b
    dof = n - 1
    if np.all(diffs == 0.0):
        return TTestResult(0.0, 1.0, dof, degenerate=True)
    sd = diffs.std(ddof=1)
    if sd == 0.0:
        sign = 1.0 if diffs.mean() > 0 else -1.0
        return TTestResult(sign * np.inf, 0.0, dof, degenerate=True)
    t = diffs.mean() / (sd / np.sqrt(n))
    p = 2.0 * float(_stats.t.sf(abs(t), dof))
    return TTestResult(float(t), p, dof)
