from __future__ import annotations

from pathlib import Path

import pytest

from hclabel.corpus import ingest_corpus
from hclabel.synthetic import SyntheticParams, generate_synthetic_baseline

DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def sample_record():
    return ingest_corpus(DATA / "sample_record.jsonl")[0]


@pytest.fixture(scope="session")
def planted_baseline():
    """Seed-fixed planted corpus: 50 classes, depth 3, 100 publications per class."""
    return generate_synthetic_baseline(42, SyntheticParams(n_classes=50, depth=3, pubs_per_class=100))
