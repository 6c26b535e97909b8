try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def brackets():
    with open(DATA / "brackets.toml", "rb") as stream:
        return tomllib.load(stream)
