"""Ranking metrics for offline evaluation.

>>> average_precision([True, False, True])
0.8333333333333333
>>> average_precision([False, False])
0.0
"""
from __future__ import annotations

import numpy as np


def average_precision(relevant_flags) -> float:
    """Average precision over a ranked binary relevance sequence.

    The mean, over the relevant items actually present in the sequence,
    of the precision at each relevant item's rank.  Returns 0.0 when
    nothing relevant was retrieved.
    """
    flags = np.asarray(list(relevant_flags), dtype=bool)
    if flags.size == 0 or not flags.any():
        return 0.0
    ranks = np.flatnonzero(flags) + 1
    hits = np.arange(1, ranks.size + 1)
    return float(np.mean(hits / ranks))


def auc_score(scores_pos, scores_neg) -> float:
    """Mann-Whitney AUC of positive over negative scores (ties count half)."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both classes need at least one score")
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (pos.size * neg.size))
