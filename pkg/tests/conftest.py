import numpy as np
import pytest
from hypothesis import settings

from semshift.corpus import Vocabulary
from semshift.vectors import EmbeddingMatrix

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_vocab(counts: dict, total=None, min_count=1):
    from collections import Counter

    return Vocabulary.from_counter(Counter(counts), min_count, total)


def make_emb(rows: dict, vocab=None):
    words = tuple(rows)
    return EmbeddingMatrix(words, np.array([rows[w] for w in words], dtype=float), vocab=vocab)
