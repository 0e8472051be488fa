import os

import pytest

from linguaudit import load_corpus

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
METRICS_FIXTURE = os.path.join(DATA_DIR, "metrics_fixture.jsonl")


@pytest.fixture(scope="session")
def metrics_corpus():
    return load_corpus(METRICS_FIXTURE)
