import gzip
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from semshift.corpus import (
    CorpusStream,
    EmptyVocabularyError,
    SentenceList,
    UnknownWordError,
    Vocabulary,
    build_vocabulary,
    relative_frequency,
    tokenize,
)


@pytest.mark.parametrize("line,expected", [
    ("walk dog", ["walk", "dog"]),
    ("  a  b ", ["a", "b"]),
    ("", []),
    ("a\tb\n", ["a", "b"]),
    ("Dog, dog", ["Dog,", "dog"]),
])
def test_tokenize(line, expected):
    assert tokenize(line) == expected


def test_min_count_filters_but_keeps_total():
    vocab = build_vocabulary(SentenceList.from_text("a a a b"), min_count=2)
    assert vocab.words == ("a",)
    assert vocab.counts == (3,)
    assert vocab.total_tokens == 4


def test_no_filtering():
    vocab = build_vocabulary(SentenceList.from_text("a a a b"), min_count=1)
    assert dict(zip(vocab.words, vocab.counts)) == {"a": 3, "b": 1}
    assert vocab.total_tokens == 4


def test_min_count_ten():
    text = " ".join(["x"] * 10 + ["y"] * 9 + ["z"] * 25)
    vocab = build_vocabulary(SentenceList.from_text(text), min_count=10)
    assert set(vocab.words) == {"x", "z"}
    assert vocab.words[0] == "z"


def test_empty_vocabulary_error():
    with pytest.raises(EmptyVocabularyError):
        build_vocabulary(SentenceList.from_text("a b c"), min_count=2)
    with pytest.raises(ValueError):
        build_vocabulary(SentenceList.from_text("a"), min_count=0)


def test_relative_frequency():
    vocab = build_vocabulary(SentenceList.from_text("a a a b"), min_count=2)
    assert relative_frequency(vocab, "a") == 0.75
    single = build_vocabulary(SentenceList.from_text("w w w"), min_count=1)
    assert relative_frequency(single, "w") == 1.0
    with pytest.raises(UnknownWordError):
        relative_frequency(vocab, "b")


def test_unreadable_file(tmp_path):
    with pytest.raises(OSError):
        build_vocabulary(CorpusStream(tmp_path / "missing.txt"), 1)


def test_stream_gzip_and_determinism(tmp_path):
    text = "b a c\nc c a\n\nd\n"
    plain = tmp_path / "c.txt"
    plain.write_text(text, encoding="utf-8")
    gz = tmp_path / "c.txt.gz"
    with gzip.open(gz, "wt", encoding="utf-8") as fh:
        fh.write(text)
    s1, s2 = CorpusStream(plain), CorpusStream(gz)
    assert list(s1) == list(s2) == list(s1)
    v1, v2 = build_vocabulary(s1, 1), build_vocabulary(s1, 1)
    assert v1 == v2
    assert v1.words == ("c", "a", "b", "d")


def test_byte_exact_words():
    vocab = build_vocabulary(SentenceList([["café", "café", "Cafe"]]), 1)
    assert len(vocab) == 3


def test_vocab_save_load(tmp_path):
    vocab = build_vocabulary(SentenceList.from_text("a a a b b c"), min_count=2)
    path = tmp_path / "vocab.tsv"
    vocab.save(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "#total_tokens=6"
    assert lines[1:] == ["a\t3", "b\t2"]
    assert Vocabulary.load(path, 2) == vocab


def test_invariants_enforced():
    with pytest.raises(ValueError):
        Vocabulary(("a",), (1,), 5, min_count=2)
    with pytest.raises(ValueError):
        Vocabulary(("a", "b"), (3, 3), 5, min_count=1)


sentences = st.lists(st.lists(st.sampled_from("abcdefg"), max_size=12), min_size=1, max_size=30)


@given(sentences, st.integers(1, 5))
def test_frequency_mass(sents, min_count):
    counter = Counter(w for s in sents for w in s)
    total = sum(counter.values())
    try:
        vocab = build_vocabulary(SentenceList(sents), min_count)
    except EmptyVocabularyError:
        assert all(c < min_count for c in counter.values())
        return
    assert vocab.total_tokens == total
    assert all(c >= min_count for c in vocab.counts)
    stored = sum(relative_frequency(vocab, w) for w in vocab)
    filtered = sum(c for w, c in counter.items() if w not in vocab) / total
    assert abs(stored + filtered - 1.0) < 1e-12
    assert sorted(vocab.index.values()) == list(range(len(vocab)))


@given(sentences, st.integers(1, 4))
def test_filter_monotonicity(sents, min_count):
    try:
        higher = build_vocabulary(SentenceList(sents), min_count + 1)
    except EmptyVocabularyError:
        return
    lower = build_vocabulary(SentenceList(sents), min_count)
    assert set(higher.words) <= set(lower.words)
