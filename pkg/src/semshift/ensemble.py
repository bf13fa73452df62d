"""ECDF soft-voting ensemble: feature values -> change probabilities -> labels and ranking."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .features import FeatureTable

logger = logging.getLogger(__name__)

MISSING_POLICIES = ("change", "unchanged", "error")


class MissingWordError(KeyError):
    pass


class Ecdf:
    """Empirical CDF with inclusive ties: ``evaluate(x) = #{samples <= x} / n``."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.size == 0:
            raise ValueError("cannot fit an ECDF to no samples")
        if np.isnan(values).any():
            raise ValueError("ECDF samples contain NaN")
        self.samples = np.sort(values)
        self.samples.setflags(write=False)

    @property
    def n(self) -> int:
        return self.samples.size

    def evaluate(self, x):
        r = np.searchsorted(self.samples, x, side="right") / self.n
        return float(r) if np.ndim(r) == 0 else r

    __call__ = evaluate


def fit_ecdf(values) -> Ecdf:
    return Ecdf(values)


def soft_vote(probabilities) -> float:
    p = np.asarray(probabilities, dtype=np.float64)
    if p.size == 0:
        raise ValueError("soft vote over no probabilities")
    if (p < 0).any() or (p > 1).any():
        raise ValueError("probabilities must lie in [0, 1]")
    return float(p.mean())


def classify(scores, t: float) -> np.ndarray:
    """Label 1 where score > t (strict)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return (np.asarray(scores, dtype=np.float64) > t).astype(np.int64)


def rank(words: Sequence[str], scores) -> list[str]:
    """Words by descending score; equal scores fall back to word order."""
    scores = np.asarray(scores, dtype=np.float64)
    order = sorted(range(len(words)), key=lambda i: (-scores[i], words[i]))
    return [words[i] for i in order]


@dataclass(frozen=True, eq=False)
class ScoreTable:
    words: tuple[str, ...]
    probabilities: dict[str, np.ndarray]
    score: np.ndarray
    label: np.ndarray
    rank: np.ndarray
    threshold: float
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})

    @property
    def features(self):
        return tuple(self.probabilities)

    def __len__(self):
        return len(self.words)

    def ranking(self) -> list[str]:
        return [self.words[i] for i in np.argsort(self.rank, kind="stable")]

    def lookup(self, word: str) -> tuple[float, int]:
        i = self.index[word]
        return float(self.score[i]), int(self.label[i])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["word", *(f"p_{f}" for f in self.features), "score", "label", "rank"])
            for i, w in enumerate(self.words):
                writer.writerow([
                    w,
                    *(f"{self.probabilities[f][i]:.6g}" for f in self.features),
                    f"{self.score[i]:.6g}",
                    int(self.label[i]),
                    int(self.rank[i]),
                ])


def score_pipeline(table: FeatureTable, t: float = 0.75) -> ScoreTable:
    """Fit one ECDF per feature over all words in ``table`` and soft-vote them."""
    if len(table) == 0:
        raise ValueError("empty feature table")
    probs = {f: fit_ecdf(table.values[f]).evaluate(table.values[f]) for f in table.features}
    score = np.mean(np.stack([probs[f] for f in table.features]), axis=0)
    label = classify(score, t)
    ranks = np.empty(len(table), dtype=np.int64)
    ranks[[table.index[w] for w in rank(list(table.words), score)]] = np.arange(1, len(table) + 1)
    return ScoreTable(table.words, probs, score, label, ranks, t)


@dataclass(frozen=True)
class TargetPrediction:
    word: str
    score: float
    label: int
    present: bool


def predict_targets(scores: ScoreTable, targets: Sequence[str], missing: str = "change") -> list[TargetPrediction]:
    """Look up target words; words outside the scored vocabulary follow ``missing``.

    ``change`` gives score 1.0 / label 1, ``unchanged`` gives score 0.0 /
    label 0, ``error`` raises :class:`MissingWordError`.
    """
    if missing not in MISSING_POLICIES:
        raise ValueError(f"missing-word policy must be one of {MISSING_POLICIES}")
    out = []
    for w in targets:
        if w in scores.index:
            s, lab = scores.lookup(w)
            out.append(TargetPrediction(w, s, lab, True))
            continue
        if missing == "error":
            raise MissingWordError(f"target word {w!r} is not in both vocabularies")
        logger.warning("target %r missing from the shared vocabulary; policy=%s", w, missing)
        if missing == "change":
            out.append(TargetPrediction(w, 1.0, 1, False))
        else:
            out.append(TargetPrediction(w, 0.0, 0, False))
    return out


def write_answers(predictions: Sequence[TargetPrediction], out_dir, name: str = "answer") -> tuple[Path, Path]:
    """SemEval answer files ``task1/<name>.txt`` (word, label) and ``task2/<name>.txt`` (word, score)."""
    out_dir = Path(out_dir)
    task1 = out_dir / "task1"
    task2 = out_dir / "task2"
    task1.mkdir(parents=True, exist_ok=True)
    task2.mkdir(parents=True, exist_ok=True)
    p1, p2 = task1 / f"{name}.txt", task2 / f"{name}.txt"
    with open(p1, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(f"{p.word}\t{p.label}\n")
    with open(p2, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(f"{p.word}\t{p.score:.6g}\n")
    return p1, p2


def read_targets(path) -> list[str]:
    """One target per line; extra tab-separated columns are ignored."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                words.append(line.split("\t")[0])
    return words


def scores_by_word(scores: ScoreTable) -> Mapping[str, float]:
    return dict(zip(scores.words, scores.score.tolist()))
