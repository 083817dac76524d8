import pytest

from synth import write_reference_dataset


@pytest.fixture(scope="session")
def reference_dataset(tmp_path_factory):
    """The 10-bit synthetic dataset: (dataset dir, truth CSV path)."""
    root = tmp_path_factory.mktemp("refdata")
    return write_reference_dataset(root)
