import numpy as np
import pytest

from vowelbench.dataset import Dataset, separated_spec, standin_datasets, synthesize


@pytest.fixture(scope="session")
def standin():
    return standin_datasets()


@pytest.fixture(scope="session")
def separated():
    """Ten classes 100 std devs apart; (train, test)."""
    train = synthesize(separated_spec(count=20, rng_seed=3), "training")
    test = synthesize(separated_spec(count=20, rng_seed=4), "testing")
    return train, test


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dataset(rng, n_per_class=5, scale=100.0):
    X = rng.normal(size=(10 * n_per_class, 2)) * scale
    y = np.repeat(np.arange(10), n_per_class)
    return Dataset.from_arrays(X, y)
