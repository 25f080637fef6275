import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pairsgd.data import Dataset

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_dataset(n, d, seed, both_classes=True):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    X /= np.maximum(1.0, np.linalg.norm(X, axis=1))[:, None]
    y = rng.choice([-1, 1], size=n)
    if both_classes:
        y[0], y[-1] = 1, -1
    return Dataset(X, y)


@pytest.fixture
def small_ds():
    return random_dataset(12, 3, 0)
