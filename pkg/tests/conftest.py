import numpy as np
import pytest

from tvdiff.dataset import split_dataset
from tvdiff.synthetic import latent_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_dataset():
    records = latent_corpus(60, 90, per_user=10, rank=3, seed=7)
    return split_dataset(records, ratio=0.8, seed=0)
