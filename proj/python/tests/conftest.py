import os
import pathlib

import pytest

ROOT = pathlib.Path(os.environ.get("SFK_ROOT", pathlib.Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="session")
def root():
    return ROOT


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("SFK_CLI", str(ROOT / "build" / "sfk"))
    if not pathlib.Path(path).exists():
        pytest.skip("sfk binary not built")
    return path
