"""Corpus ingestion: tokenization, vocabularies and frequency statistics.

Corpora are UTF-8 text, one sentence per line, tokens separated by
whitespace. Files ending in ``.gz`` are decompressed transparently.
"""
from __future__ import annotations

import gzip
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class EmptyVocabularyError(ValueError):
    pass


class UnknownWordError(KeyError):
    pass


def tokenize(line: str) -> list[str]:
    """Split on runs of whitespace. No case folding, no punctuation handling."""
    return line.split()


def open_text(path, mode: str = "rt"):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode, encoding="utf-8")
    return open(path, mode, encoding="utf-8")


class CorpusStream:
    """Re-iterable sentence stream over a text file.

    Each iteration opens the file afresh, so independent passes (vocabulary
    building, several training epochs) are fine; a single iterator is
    single-consumer.
    """

    def __init__(self, source):
        self.source = Path(source)

    def __iter__(self) -> Iterator[list[str]]:
        with open_text(self.source) as fh:
            for line in fh:
                yield tokenize(line)

    def __repr__(self):
        return f"CorpusStream({str(self.source)!r})"


class SentenceList:
    """In-memory stand-in for :class:`CorpusStream` (synthetic corpora, tests)."""

    def __init__(self, sentences: Iterable[Sequence[str]]):
        self.sentences = [list(s) for s in sentences]

    def __iter__(self) -> Iterator[list[str]]:
        return iter(self.sentences)

    def __len__(self):
        return len(self.sentences)

    @classmethod
    def from_text(cls, text: str) -> "SentenceList":
        return cls(tokenize(line) for line in io.StringIO(text))


@dataclass(frozen=True)
class Vocabulary:
    """Words surviving the min-count filter, most frequent first.

    ``total_tokens`` counts every token seen, filtered words included, so
    relative frequencies stay comparable between corpora.
    """

    words: tuple[str, ...]
    counts: tuple[int, ...]
    total_tokens: int
    min_count: int
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts differ in length")
        index = {w: i for i, w in enumerate(self.words)}
        if len(index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        if any(c < self.min_count for c in self.counts):
            raise ValueError(f"vocabulary holds words below min_count={self.min_count}")
        if sum(self.counts) > self.total_tokens:
            raise ValueError("total_tokens smaller than the stored counts")
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __iter__(self):
        return iter(self.words)

    def id(self, word: str) -> int:
        try:
            return self.index[word]
        except KeyError:
            raise UnknownWordError(word) from None

    def count(self, word: str) -> int:
        return self.counts[self.id(word)]

    def counts_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    @classmethod
    def from_counter(cls, counter: Counter, min_count: int, total_tokens: int | None = None) -> "Vocabulary":
        if min_count < 1:
            raise ValueError("min_count must be >= 1")
        if total_tokens is None:
            total_tokens = sum(counter.values())
        kept = [(w, c) for w, c in counter.items() if c >= min_count]
        # frequency descending, then byte order, so ids do not depend on hash seeds
        kept.sort(key=lambda wc: (-wc[1], wc[0]))
        if not kept:
            raise EmptyVocabularyError(
                f"empty vocabulary: no word occurs at least {min_count} times"
            )
        return cls(
            words=tuple(w for w, _ in kept),
            counts=tuple(c for _, c in kept),
            total_tokens=int(total_tokens),
            min_count=min_count,
        )

    def save(self, path) -> None:
        with open_text(path, "wt") as fh:
            fh.write(f"#total_tokens={self.total_tokens}\n")
            for w, c in zip(self.words, self.counts):
                fh.write(f"{w}\t{c}\n")

    @classmethod
    def load(cls, path, min_count: int | None = None) -> "Vocabulary":
        counter: Counter = Counter()
        total = None
        with open_text(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#total_tokens="):
                    total = int(line.split("=", 1)[1])
                    continue
                try:
                    word, count = line.split("\t")
                    counter[word] = int(count)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: expected 'word<TAB>count'") from None
        if total is None:
            raise ValueError(f"{path}: missing '#total_tokens=' header")
        if min_count is None:
            min_count = min(counter.values()) if counter else 1
        return cls.from_counter(counter, min_count, total)


def count_tokens(stream: Iterable[Sequence[str]]) -> Counter:
    counter: Counter = Counter()
    for sentence in stream:
        counter.update(sentence)
    return counter


def build_vocabulary(stream: Iterable[Sequence[str]], min_count: int) -> Vocabulary:
    """Count tokens in ``stream`` and keep words occurring ``min_count`` times or more."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counter = count_tokens(stream)
    vocab = Vocabulary.from_counter(counter, min_count)
    logger.info(
        "vocabulary: %d of %d types kept (min_count=%d), %d tokens",
        len(vocab), len(counter), min_count, vocab.total_tokens,
    )
    return vocab


def relative_frequency(vocab: Vocabulary, word: str) -> float:
    return vocab.count(word) / vocab.total_tokens


def write_corpus(sentences: Iterable[Sequence[str]], path) -> None:
    with open_text(path, "wt") as fh:
        for sentence in sentences:
            fh.write(" ".join(sentence))
            fh.write("\n")
