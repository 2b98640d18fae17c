import pytest

from orthomap.benchmark import generate_cipher_benchmark


@pytest.fixture(scope="session")
def tiny_benchmark(tmp_path_factory):
    """Small noiseless cipher benchmark shared by pipeline-level tests."""
    out = tmp_path_factory.mktemp("tiny-bench")
    return generate_cipher_benchmark(100, 10, seed=11, noise=0.0, out_dir=out)
