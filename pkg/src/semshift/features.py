"""Per-word change signals: cosine distance, mapped neighborhood distance, frequency differential."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Vocabulary
from .vectors import EmbeddingMatrix, batch_nearest_neighbors, nearest_neighbors, unit_rows

logger = logging.getLogger(__name__)

FEATURES = ("cos", "map", "freq")
DEFAULT_MAP_K = 100


def cos_distance(v1, v2) -> float:
    """1 - cosine similarity; a zero vector has similarity 0, hence distance 1."""
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    if v1.shape != v2.shape:
        raise ValueError(f"dimension mismatch: {v1.shape} vs {v2.shape}")
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 == 0 or n2 == 0:
        return 1.0
    return float(1.0 - np.dot(v1 / n1, v2 / n2))


def _rowwise_cos_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 1.0 - np.einsum("ij,ij->i", unit_rows(a), unit_rows(b))


def freq_differential(f1: float, f2: float, sign: str = "prose") -> float:
    """Normalized frequency change in [-1, 1].

    ``sign="prose"`` gives (f2 - f1) / (f1 + f2), positive when the word became
    more frequent in the later corpus; ``sign="paper"`` gives the negation.
    """
    if f1 < 0 or f2 < 0:
        raise ValueError("relative frequencies must be non-negative")
    if f1 + f2 == 0:
        raise ValueError("word absent from both corpora")
    d = (f2 - f1) / (f1 + f2)
    if sign == "prose":
        return d
    if sign == "paper":
        return -d
    raise ValueError(f"freq sign must be 'prose' or 'paper', got {sign!r}")


def _map_from_neighbors(v1_unit: np.ndarray, src_sims: np.ndarray, tgt_unit_nbrs: np.ndarray) -> np.ndarray:
    """MAP for a batch: rows of first-order sims to neighbors in each space."""
    s1 = 1.0 - src_sims
    s2 = 1.0 - np.einsum("bd,bkd->bk", v1_unit, tgt_unit_nbrs)
    return _rowwise_cos_distance(s1, s2)


def _shared_ids(emb: EmbeddingMatrix, words: Sequence[str]) -> np.ndarray:
    return np.array([emb.id(w) for w in words], dtype=np.int64)


def map_distance(
    word: str,
    aligned_source: EmbeddingMatrix,
    target: EmbeddingMatrix,
    k: int = DEFAULT_MAP_K,
    shared: Sequence[str] | None = None,
) -> float:
    """Mapped neighborhood distance of ``word``.

    The ``k`` nearest neighbors of ``word`` are taken in the aligned source
    space among shared words. The word's aligned source vector is compared
    by cosine distance against each neighbor's source vector and target
    vector; MAP is the cosine distance between those two distance profiles.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if shared is None:
        shared = [w for w in aligned_source.words if w in target]
    pool = _shared_ids(aligned_source, shared)
    wid = aligned_source.id(word)
    available = len(pool) - (1 if wid in set(pool.tolist()) else 0)
    if available == 0:
        raise ValueError(f"no neighbors available for {word!r}")
    if available < k:
        logger.warning("only %d neighbors available for %r, wanted k=%d", available, word, k)
        k = available
    nbrs = nearest_neighbors(aligned_source, wid, k, restrict_to=pool)
    v1 = aligned_source.matrix[wid]
    s1 = np.array([cos_distance(v1, aligned_source.matrix[n]) for n in nbrs.ids])
    s2 = np.array([cos_distance(v1, target[aligned_source.words[n]]) for n in nbrs.ids])
    return cos_distance(s1, s2)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    words: tuple[str, ...]
    values: dict[str, np.ndarray]
    map_k: int | None = None
    landmarks: str = "all"
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})
        for name, col in self.values.items():
            if name not in FEATURES:
                raise ValueError(f"unknown feature {name!r}")
            if len(col) != len(self.words):
                raise ValueError(f"feature {name} has {len(col)} values for {len(self.words)} words")
        self.check()

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(f for f in FEATURES if f in self.values)

    def __len__(self):
        return len(self.words)

    def check(self, slack: float = 1e-9) -> None:
        bounds = {"cos": (0.0, 2.0), "map": (0.0, 2.0), "freq": (-1.0, 1.0)}
        for name, col in self.values.items():
            if not np.isfinite(col).all():
                raise ValueError(f"non-finite {name} values")
            lo, hi = bounds[name]
            if col.min() < lo - slack or col.max() > hi + slack:
                raise ValueError(f"{name} values outside [{lo}, {hi}]")

    def row(self, word: str) -> dict[str, float]:
        i = self.index[word]
        return {f: float(self.values[f][i]) for f in self.features}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["word", *self.features])
            for i, w in enumerate(self.words):
                writer.writerow([w, *(f"{self.values[f][i]:.6g}" for f in self.features)])

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        names = header[1:]
        values = {n: np.array([float(r[j + 1]) for r in body]) for j, n in enumerate(names)}
        return cls(tuple(r[0] for r in body), values)


def parse_features(spec: str | Sequence[str]) -> tuple[str, ...]:
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    names = [n.strip().lower() for n in names if n.strip()]
    bad = [n for n in names if n not in FEATURES]
    if bad or not names:
        raise ValueError(f"features must be a non-empty subset of {FEATURES}, got {spec!r}")
    return tuple(f for f in FEATURES if f in names)


def build_feature_table(
    aligned_source: EmbeddingMatrix,
    target: EmbeddingMatrix,
    vocab1: Vocabulary,
    vocab2: Vocabulary,
    features: Sequence[str] = FEATURES,
    k: int = DEFAULT_MAP_K,
    freq_sign: str = "prose",
    landmarks: str = "all",
    block: int = 256,
) -> FeatureTable:
    """Compute the enabled features for every word in both vocabularies."""
    features = parse_features(features)
    words = [w for w in vocab1 if w in vocab2 and w in aligned_source and w in target]
    if not words:
        raise ValueError("empty vocabulary intersection")
    values: dict[str, np.ndarray] = {}
    src_rows = _shared_ids(aligned_source, words)
    tgt_rows = _shared_ids(target, words)
    if "cos" in features:
        values["cos"] = _rowwise_cos_distance(aligned_source.matrix[src_rows], target.matrix[tgt_rows])
    map_k = None
    if "map" in features:
        map_k = min(k, len(words) - 1)
        if map_k < 1:
            raise ValueError("MAP needs at least two shared words")
        if map_k < k:
            logger.warning("MAP k reduced from %d to %d (shared vocabulary size)", k, map_k)
        # neighbor ids index the aligned source; map them to target rows
        src_to_tgt = np.full(len(aligned_source), -1, dtype=np.int64)
        src_to_tgt[src_rows] = tgt_rows
        src_unit = aligned_source.normalized()
        tgt_unit = target.normalized()
        nbr_ids, nbr_sims = batch_nearest_neighbors(aligned_source, src_rows, map_k, restrict_to=src_rows, unit=src_unit)
        out = np.empty(len(words))
        for start in range(0, len(words), block):
            q = slice(start, start + block)
            out[q] = _map_from_neighbors(src_unit[src_rows[q]], nbr_sims[q], tgt_unit[src_to_tgt[nbr_ids[q]]])
        values["map"] = out
    if "freq" in features:
        values["freq"] = np.array([
            freq_differential(vocab1.count(w) / vocab1.total_tokens, vocab2.count(w) / vocab2.total_tokens, freq_sign)
            for w in words
        ])
    return FeatureTable(tuple(words), values, map_k=map_k, landmarks=landmarks)
