"""Offline experiment driver: simulated sessions, MAP, grid searches.

A simulated user runs a full retrieval session per (category, index)
pair.  Feedback per modality:

- ``random``      no usable feedback; the engine keeps sampling.
- ``gaze``        an eye-feature vector per collage image, drawn from a
                  pool bank matching (true relevance, collage bin).
- ``click``       one click per round: on a random truly relevant image
                  when one is shown, otherwise on a uniform random one.
- ``gaze+click``  both of the above.
- ``full``        explicit binary ground-truth scores.

Retrieval quality is average precision over the concatenated shown
sequence; MAP averages over sessions and then macro-averages over
categories.  Session seeds derive from (master seed, category, index)
so results do not depend on processing order.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from pinview.mkl import CorpusKernels
from pinview.relevance import RelevancePredictor, train_predictor
from pinview.session import FeedbackEvent, Session, SessionConfig

from .metrics import average_precision
from .pool import SimPool, bin_index, draw_training_set
from .stats import TTestResult, paired_ttest

DEFAULT_ALPHA_GRID = (0.01, 0.1, 1.0, 5.0, 10.0, 100.0)
DEFAULT_MU_GRID = (0.0, 0.01, 0.1, 5.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class HarnessConfig:
    """Experiment-level knobs shared by every simulated session."""

    modality: str = "gaze+click"
    sessions: int = 40
    rounds: int = 10
    collage_size: int = 15
    seed: int = 0
    lam: float = 0.5
    mu_shared: float = 0.1
    explore_c: float = 1.0
    alpha: float = 1.0
    default_unviewed: float = 0.05
    tensor_enabled: bool = False
    categories: tuple | None = None


def session_seed(master_seed: int, category: str, index: int,
                 stream: str = "session") -> int:
    """Stable 63-bit seed from (master seed, category, session index).

    Uses a digest of the category name, so the seed does not depend on
    the order categories are processed in.
    """
    digest = hashlib.blake2s(
        f"{master_seed}:{category}:{index}:{stream}".encode(),
        digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def simulate_feedback(round_no: int, collage, relevant_set, modality: str,
                      rng: np.random.Generator,
                      pool: SimPool | None = None) -> FeedbackEvent:
    """One round of simulated user feedback for the given collage."""
    collage = list(collage)
    on_collage_relevant = sorted(i for i in collage if i in relevant_set)
    needs_pool = modality in ("gaze", "gaze+click")
    if needs_pool and pool is None:
        raise ValueError(f"modality {modality!r} needs an eye-feature pool")

    clicks: tuple = ()
    if modality in ("click", "gaze+click"):
        if on_collage_relevant:
            pick = on_collage_relevant[int(rng.integers(len(on_collage_relevant)))]
        else:
            pick = sorted(collage)[int(rng.integers(len(collage)))]
        clicks = (pick,)

    eye_features = None
    if needs_pool:
        b = bin_index(len(on_collage_relevant), len(collage))
        eye_features = {
            image_id: pool.draw(image_id in relevant_set, b, rng)
            for image_id in sorted(collage)
        }

    scores = None
    if modality == "full":
        scores = {image_id: (1.0 if image_id in relevant_set else 0.0)
                  for image_id in collage}
    return FeedbackEvent(round=round_no, clicks=clicks,
                         eye_features=eye_features, scores=scores)


def train_pool_predictor(pool: SimPool, per_cell: int = 60,
                         seed: int = 0) -> RelevancePredictor:
    """Fit the relevance predictor on labelled draws from a pool."""
    rng = np.random.default_rng(session_seed(seed, "_train", 0, "draws"))
    X, y = draw_training_set(pool, per_cell, rng)
    return train_predictor(X, y, seed=seed)


@dataclass
class SessionRecord:
    category: str
    index: int
    ap: float
    relevant_shown: int
    shown: list


@dataclass
class ExperimentResult:
    """MAP per category plus per-session diagnostics."""

    config: HarnessConfig
    map_score: float
    per_category: dict
    sessions: list = field(default_factory=list)

    def session_aps(self) -> list:
        """APs ordered by (category, index): a stable pairing key."""
        return [rec.ap for rec in sorted(self.sessions,
                                         key=lambda r: (r.category, r.index))]

    def to_json(self) -> dict:
        return {
            "modality": self.config.modality,
            "sessions_per_category": self.config.sessions,
            "rounds": self.config.rounds,
            "seed": self.config.seed,
            "alpha": self.config.alpha,
            "mu_shared": self.config.mu_shared,
            "map": self.map_score,
            "per_category": {k: v for k, v in sorted(self.per_category.items())},
        }


def run_session(corpus, hconfig: HarnessConfig, category: str, index: int,
                predictor=None, pool=None, kernels=None) -> SessionRecord:
    """Simulate one complete session searching for ``category``."""
    seed = session_seed(hconfig.seed, category, index)
    config = SessionConfig(
        corpus=corpus.name, modality=hconfig.modality, rounds=hconfig.rounds,
        collage_size=hconfig.collage_size, lam=hconfig.lam,
        mu_shared=hconfig.mu_shared, explore_c=hconfig.explore_c,
        alpha=hconfig.alpha, default_unviewed=hconfig.default_unviewed,
        tensor_enabled=hconfig.tensor_enabled, seed=seed,
        target_category=category,
    )
    session = Session(corpus, config, predictor=predictor, kernels=kernels)
    relevant = set(corpus.images_with_label(category))
    rng = np.random.default_rng(
        session_seed(hconfig.seed, category, index, "feedback"))
    for round_no in range(hconfig.rounds):
        event = simulate_feedback(round_no, session.current_collage,
                                  relevant, hconfig.modality, rng, pool)
        session.submit_feedback(event)
    shown = session.shown_ids()
    flags = [image_id in relevant for image_id in shown]
    return SessionRecord(category=category, index=index,
                         ap=average_precision(flags),
                         relevant_shown=int(sum(flags)), shown=shown)


def run_experiment(corpus, hconfig: HarnessConfig, predictor=None,
                   pool=None, kernels=None) -> ExperimentResult:
    """All sessions for all categories under one configuration."""
    categories = list(hconfig.categories or corpus.categories())
    if not categories:
        raise ValueError("corpus has no labelled categories")
    if kernels is None and hconfig.modality != "random":
        kernels = CorpusKernels(corpus)
    records = []
    per_category = {}
    for category in categories:
        aps = []
        for index in range(hconfig.sessions):
            rec = run_session(corpus, hconfig, category, index,
                              predictor=predictor, pool=pool, kernels=kernels)
            records.append(rec)
            aps.append(rec.ap)
        per_category[category] = float(np.mean(aps))
    map_score = float(np.mean(list(per_category.values())))
    return ExperimentResult(config=hconfig, map_score=map_score,
                            per_category=per_category, sessions=records)


@dataclass
class GridSearchResult:
    """Sequential grid search: alpha first, then mu_shared at the best alpha."""

    rows: list
    best_alpha: float
    best_mu: float
    best_map: float

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "best_alpha": self.best_alpha,
            "best_mu": self.best_mu,
            "best_map": self.best_map,
        }


def grid_search(corpus, hconfig: HarnessConfig, predictor=None, pool=None,
                kernels=None, alpha_grid=DEFAULT_ALPHA_GRID,
                mu_grid=DEFAULT_MU_GRID) -> GridSearchResult:
    """Tune alpha, then mu_shared, by MAP; one row per evaluated point.

    Ties prefer the earlier grid entry.
    """
    if kernels is None and hconfig.modality != "random":
        kernels = CorpusKernels(corpus)
    rows = []

    def evaluate(cfg, stage, value):
        res = run_experiment(corpus, cfg, predictor=predictor, pool=pool,
                             kernels=kernels)
        rows.append({"stage": stage, "value": float(value),
                     "alpha": cfg.alpha, "mu_shared": cfg.mu_shared,
                     "map": res.map_score})
        return res.map_score

    best_alpha, best_alpha_map = None, -1.0
    for alpha in alpha_grid:
        score = evaluate(replace(hconfig, alpha=float(alpha)), "alpha", alpha)
        if score > best_alpha_map:
            best_alpha, best_alpha_map = float(alpha), score

    best_mu, best_map = None, -1.0
    for mu in mu_grid:
        score = evaluate(replace(hconfig, alpha=best_alpha,
                                 mu_shared=float(mu)), "mu_shared", mu)
        if score > best_map:
            best_mu, best_map = float(mu), score
    return GridSearchResult(rows=rows, best_alpha=best_alpha,
                            best_mu=best_mu, best_map=best_map)


def compare_modalities(corpus, hconfig: HarnessConfig, modalities,
                       predictor=None, pool=None, kernels=None):
    """Run each modality under identical seeds and pair-test the APs.

    Returns ({modality: ExperimentResult}, {(a, b): TTestResult}) where
    the t-tests pair sessions by (category, index).
    """
    if kernels is None:
        kernels = CorpusKernels(corpus)
    results = {}
    for modality in modalities:
        results[modality] = run_experiment(
            corpus, replace(hconfig, modality=modality),
            predictor=predictor, pool=pool, kernels=kernels)
    tests: dict[tuple, TTestResult] = {}
    for i, a in enumerate(modalities):
        for b in modalities[i + 1:]:
            tests[(a, b)] = paired_ttest(results[a].session_aps(),
                                         results[b].session_aps())
    return results, tests
