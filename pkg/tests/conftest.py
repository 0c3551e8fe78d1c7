import numpy as np
import pytest

from csxml.dataio import Dataset, FeatureColumn


def make_dataset(X, y, label_kind="binary", kinds=None, provenance="synthetic"):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    kinds = kinds or ["continuous"] * X.shape[1]
    schema = [FeatureColumn(f"f{i}", k) for i, k in enumerate(kinds)]
    return Dataset(schema, X, y, label_kind, provenance)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
