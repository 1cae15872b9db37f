"""Offline evaluation: simulated feedback, synthetic corpora, experiments."""
from .pool import (
    ATTENTION_BIN_PROFILE,
    BIN_LABELS,
    N_BINS,
    SimPool,
    bin_index,
    draw_training_set,
    generate_synthetic_pool,
)
from .metrics import auc_score, average_precision
from .stats import TTestResult, paired_ttest
from .synthetic import make_synthetic_corpus
from .harness import (
    ExperimentResult,
    GridSearchResult,
    HarnessConfig,
    compare_modalities,
    grid_search,
    run_experiment,
    run_session,
    session_seed,
    simulate_feedback,
    train_pool_predictor,
)

__all__ = [
    "ATTENTION_BIN_PROFILE",
    "BIN_LABELS",
    "ExperimentResult",
    "GridSearchResult",
    "HarnessConfig",
    "N_BINS",
    "SimPool",
    "TTestResult",
    "auc_score",
    "average_precision",
    "bin_index",
    "compare_modalities",
    "draw_training_set",
    "generate_synthetic_pool",
    "grid_search",
    "make_synthetic_corpus",
    "paired_ttest",
    "run_experiment",
    "run_session",
    "session_seed",
    "simulate_feedback",
    "train_pool_predictor",
]
