"""Shared fixtures: small corpora, feature pools, deterministic RNGs."""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pinview.mkl import CorpusKernels
from pinview.simulate import generate_synthetic_pool, make_synthetic_corpus
from pinview.simulate.harness import train_pool_predictor


@pytest.fixture(scope="session")
def small_corpus():
    """80 images, 10 categories - big enough for multi-round sessions."""
    return make_synthetic_corpus(n_images=80, seed=42, name="small")


@pytest.fixture(scope="session")
def small_kernels(small_corpus):
    return CorpusKernels(small_corpus)


@pytest.fixture(scope="session")
def sep3_pool():
    return generate_synthetic_pool(separation=3.0, seed=7)


@pytest.fixture(scope="session")
def pool_predictor(sep3_pool):
    return train_pool_predictor(sep3_pool, per_cell=40, seed=7)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
