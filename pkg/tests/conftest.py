import numpy as np
import pytest
import hypothesis.strategies as st
from hypothesis import settings

from cggm.graphs import gen_band, precision_from_adjacency
from cggm.model import Partition, build_model, make_rng

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def band_model(K=4, m=3, c=0.3, bandwidth=1, gamma=None, seed=0):
    p = Partition.from_sizes([m] * K)
    theta = precision_from_adjacency(gen_band(K, bandwidth), c)
    if gamma is None:
        gamma = make_rng(seed).uniform(0.25, 0.5, K * m)
    return build_model(p, theta, gamma)


@pytest.fixture
def small_model():
    return band_model(K=4, m=3)


def random_spd(rng, K, ridge=0.1):
    B = rng.normal(size=(K, K))
    return B @ B.T / K + ridge * np.eye(K)


@st.composite
def partitions(draw, min_K=1, max_K=5, min_size=1, max_size=4):
    K = draw(st.integers(min_K, max_K))
    sizes = draw(st.lists(st.integers(min_size, max_size), min_size=K, max_size=K))
    labels = np.repeat(np.arange(K), sizes)
    perm = draw(st.permutations(range(labels.size)))
    return Partition(labels[list(perm)])
