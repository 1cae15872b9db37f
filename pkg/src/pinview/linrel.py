"""Collage selection by a kernelised explore/exploit bandit rule.

For each candidate image I a coefficient row
``a(I) = k(I, seen) (K_seen + mu I)^-1`` expresses its predicted relevance
``a(I) . r`` as a linear combination of observed feedback; the L2 norm of
the row bounds the estimate's uncertainty.  Candidates are ranked by the
upper confidence bound ``a . r + c ||a||`` and the collage mixes the top
UCB picks (exploration) with the best remaining plain estimates
(exploitation).  Ties break lexicographically on image id; images are
never repeated within a session; the first collage of a session is a
seeded random sample.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_EXPLORATION = 1.0
DEFAULT_COLLAGE_SIZE = 15
JITTER = 1e-8


class LinRelState:
    """Factorised selection state over the currently seen images."""

    def __init__(self, k_seen: np.ndarray, r, mu: float = 0.1,
                 c: float = DEFAULT_EXPLORATION):
        k_seen = np.asarray(k_seen, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        t = k_seen.shape[0]
        if k_seen.shape != (t, t):
            raise ValueError("seen-kernel matrix must be square")
        if not np.allclose(k_seen, k_seen.T, atol=1e-10):
            raise ValueError("seen-kernel matrix must be symmetric")
        if r.shape != (t,):
            raise ValueError("relevance vector must match the seen set")
        self.mu = mu if mu > 0 else JITTER
        self.c = c
        self.r = r
        ridge = k_seen + self.mu * np.eye(t)
        try:
            self._factor = scipy.linalg.cho_factor(ridge)
        except scipy.linalg.LinAlgError:
            self._factor = scipy.linalg.cho_factor(ridge + JITTER * np.eye(t))

    def a_rows(self, k_rows: np.ndarray) -> np.ndarray:
        """Coefficient rows a(I) for candidate kernel rows k(I, seen)."""
        k_rows = np.atleast_2d(np.asarray(k_rows, dtype=np.float64))
        return scipy.linalg.cho_solve(self._factor, k_rows.T).T

    def scores(self, k_rows: np.ndarray):
        """(ucb, estimate, width) arrays for candidate kernel rows."""
        a = self.a_rows(k_rows)
        estimate = a @ self.r
        width = np.linalg.norm(a, axis=1)
        return estimate + self.c * width, estimate, width


@dataclass
class SelectionResult:
    """Ordered next collage plus its scoring diagnostics."""

    ids: list
    estimate: dict
    width: dict
    ucb: dict
    explore_ids: list
    short_pool: bool = False


def select_collage(state: LinRelState, k_rows, candidate_ids,
                   n: int = DEFAULT_COLLAGE_SIZE,
                   explore_count: int | None = None) -> SelectionResult:
    """Pick the next collage from the candidate pool, greedy without
    replacement: ``explore_count`` images by UCB (default: all of them),
    the rest by plain estimate.  A pool smaller than ``n`` is returned
    whole, flagged short.
    """
    candidate_ids = list(candidate_ids)
    if len(set(candidate_ids)) != len(candidate_ids):
        raise ValueError("candidate ids contain duplicates")
    if not candidate_ids:
        return SelectionResult([], {}, {}, {}, [], short_pool=True)
    m = n if explore_count is None else min(explore_count, n)
    ucb, estimate, width = state.scores(k_rows)
    est = {i: float(v) for i, v in zip(candidate_ids, estimate)}
    wid = {i: float(v) for i, v in zip(candidate_ids, width)}
    ub = {i: float(v) for i, v in zip(candidate_ids, ucb)}

    by_ucb = sorted(candidate_ids, key=lambda i: (-ub[i], i))
    if len(candidate_ids) <= n:
        return SelectionResult(by_ucb, est, wid, ub, by_ucb, short_pool=True)
    chosen = by_ucb[:m]
    rest = set(candidate_ids) - set(chosen)
    by_est = sorted(rest, key=lambda i: (-est[i], i))
    chosen = chosen + by_est[: n - m]
    return SelectionResult(chosen, est, wid, ub, by_ucb[:m])


def cold_start(pool_ids, n: int, rng: np.random.Generator) -> list:
    """Seeded uniform sample (without replacement) for the first collage."""
    pool = sorted(pool_ids)
    if len(pool) <= n:
        return pool
    idx = rng.choice(len(pool), size=n, replace=False)
    return [pool[int(k)] for k in idx]
