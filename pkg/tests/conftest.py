import pytest

from bridgemtl.manifest import load_manifest
from bridgemtl.synthetic import make_synthetic_dataset


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """4 train + 2 test synthetic samples at 64x64."""
    root = tmp_path_factory.mktemp("dataset")
    make_synthetic_dataset(root, n_train=4, n_test=2, size=64, seed=0)
    return load_manifest(root / "manifest.json")
