import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def balanced_labels(n: int, num_classes: int) -> np.ndarray:
    return (np.arange(n) % num_classes).astype(np.int64)


def tiny_dataset(n=24, num_classes=3, dims=(4,), seed=0):
    """Random but valid dataset; labels balanced so every class has >= 2."""
    from acsp.tensio import LabeledDataset

    gen = np.random.default_rng(seed)
    samples = gen.normal(size=(n, *dims)).astype(np.float32)
    return LabeledDataset(samples, balanced_labels(n, num_classes))
