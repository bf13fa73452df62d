"""Embedding matrices: word2vec text persistence and exact cosine k-NN."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import UnknownWordError, open_text

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Row ``i`` of ``matrix`` is the vector of ``words[i]``.

    ``vocab`` is kept when the matrix was trained from a known
    :class:`~semshift.corpus.Vocabulary`; loaded files carry only words.
    """

    words: tuple[str, ...]
    matrix: np.ndarray
    vocab: object = None
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        words = tuple(self.words)
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(words):
            raise ValueError(f"matrix shape {matrix.shape} does not match {len(words)} words")
        if not np.isfinite(matrix).all():
            raise ValueError("embedding matrix holds non-finite entries")
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            raise ValueError("duplicate words in embedding matrix")
        matrix.setflags(write=False)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "index", index)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def id(self, word: str) -> int:
        try:
            return self.index[word]
        except KeyError:
            raise UnknownWordError(word) from None

    def __getitem__(self, word: str) -> np.ndarray:
        return self.matrix[self.id(word)]

    def with_matrix(self, matrix: np.ndarray) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.words, matrix, vocab=self.vocab)

    def subset(self, words: Sequence[str]) -> "EmbeddingMatrix":
        rows = [self.id(w) for w in words]
        return EmbeddingMatrix(tuple(words), self.matrix[rows])

    def normalized(self) -> np.ndarray:
        return unit_rows(self.matrix)


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Scale rows to unit length; zero rows stay zero (cosine with them is 0)."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    zero = norms[:, 0] == 0
    if zero.any():
        logger.warning("%d zero-norm vectors; their cosine similarities are set to 0", int(zero.sum()))
    norms[zero] = 1.0
    return matrix / norms


def save(emb: EmbeddingMatrix, path) -> None:
    """Write word2vec text format: ``<n> <dim>`` header then ``word v1 ... vdim``."""
    with open_text(path, "wt") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n")
        for word, row in zip(emb.words, emb.matrix):
            fh.write(word)
            fh.write(" ")
            fh.write(" ".join(f"{x:.6g}" for x in row))
            fh.write("\n")


def load(path) -> EmbeddingMatrix:
    with open_text(path) as fh:
        header = fh.readline().split()
        try:
            n, dim = int(header[0]), int(header[1])
            if len(header) != 2:
                raise ValueError
        except (ValueError, IndexError):
            raise EmbeddingFormatError(f"{path}:1: expected '<count> <dim>' header") from None
        words: list[str] = []
        matrix = np.empty((n, dim))
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if parts == [""]:
                continue
            if len(words) == n:
                raise EmbeddingFormatError(f"{path}:{lineno}: more rows than the header's {n}")
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected word and {dim} values, got {len(parts) - 1} values"
                )
            try:
                matrix[len(words)] = [float(x) for x in parts[1:]]
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric value") from None
            words.append(parts[0])
    if len(words) != n:
        raise EmbeddingFormatError(f"{path}: header announces {n} rows, found {len(words)}")
    try:
        return EmbeddingMatrix(tuple(words), matrix)
    except ValueError as exc:
        raise EmbeddingFormatError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class NeighborList:
    query: int
    ids: np.ndarray
    similarities: np.ndarray

    def __len__(self):
        return len(self.ids)

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.ids.tolist(), self.similarities.tolist()))


def _top_k_rows(sims: np.ndarray, k: int, candidate_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per row of ``sims``: top-k columns by similarity desc, ties by ascending candidate id.

    Excluded entries must already be set to -inf.
    """
    n_rows, n_cols = sims.shape
    out_ids = np.empty((n_rows, k), dtype=np.int64)
    out_sims = np.empty((n_rows, k))
    for r in range(n_rows):
        row = sims[r]
        if k < n_cols:
            kth = np.partition(row, n_cols - k)[n_cols - k]
            cand = np.flatnonzero(row >= kth)
        else:
            cand = np.arange(n_cols)
        order = np.lexsort((candidate_ids[cand], -row[cand]))[:k]
        out_ids[r] = candidate_ids[cand[order]]
        out_sims[r] = row[cand[order]]
    return out_ids, out_sims


def batch_nearest_neighbors(
    emb: EmbeddingMatrix,
    word_ids: Sequence[int],
    k: int,
    restrict_to: Iterable[int] | None = None,
    block: int = 512,
    unit: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact cosine top-k for many queries; the query itself is never its own neighbor.

    Returns ``(ids, sims)`` arrays of shape ``(len(word_ids), k)``. ``unit``
    may pass precomputed unit-length rows of ``emb`` for repeated calls.
    """
    word_ids = np.asarray(word_ids, dtype=np.int64)
    if restrict_to is None:
        candidates = np.arange(len(emb), dtype=np.int64)
    else:
        candidates = np.unique(np.fromiter(restrict_to, dtype=np.int64))
    # every query excludes itself, so bound k by the smallest usable pool
    pool = len(candidates) - (1 if np.isin(word_ids, candidates).any() else 0)
    if not 1 <= k <= pool:
        raise ValueError(f"k={k} out of range: need 1 <= k <= {pool}")
    if unit is None:
        unit = emb.normalized()
    cand_unit = unit[candidates]
    pos_in_cand = np.full(len(emb), -1, dtype=np.int64)
    pos_in_cand[candidates] = np.arange(len(candidates))
    all_ids = np.empty((len(word_ids), k), dtype=np.int64)
    all_sims = np.empty((len(word_ids), k))
    for start in range(0, len(word_ids), block):
        q = word_ids[start:start + block]
        sims = unit[q] @ cand_unit.T
        own = pos_in_cand[q]
        hit = own >= 0
        sims[np.flatnonzero(hit), own[hit]] = -np.inf
        ids, vals = _top_k_rows(sims, k, candidates)
        all_ids[start:start + len(q)] = ids
        all_sims[start:start + len(q)] = vals
    return all_ids, all_sims


def nearest_neighbors(
    emb: EmbeddingMatrix, word_id: int, k: int, restrict_to: Iterable[int] | None = None
) -> NeighborList:
    ids, sims = batch_nearest_neighbors(emb, [word_id], k, restrict_to)
    return NeighborList(int(word_id), ids[0], sims[0])
