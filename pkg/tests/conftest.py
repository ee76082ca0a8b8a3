from pathlib import Path

import numpy as np
import pytest

from subjdb.config import Config
from subjdb.database import CorpusInputs, SubjectiveDatabase
from subjdb.synth import SyntheticCorpusSpec, generate_corpus
from subjdb.text import EmbeddingTable, IdfTable, SentimentLexicon, TextModel

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "hotels10"


@pytest.fixture
def tiny_text():
    """Four-dimensional hand-built embeddings, IDF and lexicon."""
    emb = EmbeddingTable({
        "clean": np.array([1.0, 0.0, 0.0, 0.0]),
        "spotless": np.array([0.9, 0.1, 0.0, 0.0]),
        "dirty": np.array([-1.0, 0.0, 0.0, 0.0]),
        "room": np.array([0.0, 1.0, 0.0, 0.0]),
        "bedroom": np.array([0.0, 0.95, 0.05, 0.0]),
        "staff": np.array([0.0, 0.0, 1.0, 0.0]),
        "friendly": np.array([0.0, 0.0, 0.8, 0.6]),
        "rude": np.array([0.0, 0.0, 0.8, -0.6]),
        "very": np.array([0.05, 0.0, 0.0, 0.05]),
        "not": np.array([-0.5, 0.0, 0.0, 0.0]),
    })
    idf = IdfTable(10, {}, {})
    lex = SentimentLexicon({"clean": 0.5, "spotless": 0.9, "dirty": -0.8, "friendly": 0.6,
                            "rude": -0.7})
    return TextModel(emb, idf, lex)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(SyntheticCorpusSpec(n_entities=12, reviews_per_entity=10,
                                               n_labels=200, seed=3))


@pytest.fixture(scope="session")
def small_db(small_corpus):
    c = small_corpus
    inputs = CorpusInputs(c.entities, c.reviews, c.extractions, c.schema, c.embeddings,
                          c.lexicon, c.labels)
    return SubjectiveDatabase.build(inputs, Config(seed=3, epochs=200))


@pytest.fixture(scope="session")
def desk_corpus():
    """The full desk-scale corpus: 100 entities x 20 reviews, 5 attributes, 1,000 labels."""
    return generate_corpus(SyntheticCorpusSpec(seed=0))


@pytest.fixture(scope="session")
def desk_db(desk_corpus):
    c = desk_corpus
    inputs = CorpusInputs(c.entities, c.reviews, c.extractions, c.schema, c.embeddings,
                          c.lexicon, None)
    return SubjectiveDatabase.build(inputs, Config(seed=0))


# one (criterion, passed, detail) entry per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
