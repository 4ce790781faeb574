import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from ctxlearn.geo import load_pois

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def county_store():
    store, rejected = load_pois(DATA / "pois_county.tsv")
    assert not rejected
    return store


@pytest.fixture(scope="session")
def monastery_store():
    store, rejected = load_pois(DATA / "monasteries.tsv")
    assert not rejected
    return store
