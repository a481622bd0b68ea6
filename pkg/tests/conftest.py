import numpy as np
import pytest

from grpcoll import datasets


def mnist_available() -> bool:
    return all(p.exists() for p in datasets.mnist_paths().values())


def spambase_available() -> bool:
    return datasets.spambase_path().exists()


requires_mnist = pytest.mark.skipif(
    not mnist_available(),
    reason="MNIST IDX files not found (set GRPC0LL_DATA_DIR to a directory "
    "containing the four official files)",
)

requires_spambase = pytest.mark.skipif(
    not spambase_available(),
    reason="spambase.data not found (set GRPC0LL_DATA_DIR)",
)


@pytest.fixture(scope="session")
def mnist():
    return datasets.load_mnist()


@pytest.fixture(scope="session")
def spambase():
    return datasets.load_spambase()


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(0))
