"""Evaluation metrics, ablation and landmark-sweep experiments, synthetic change corpora."""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .align import LandmarkSelection
from .ensemble import predict_targets, score_pipeline
from .features import FEATURES, FeatureTable
from .pipeline import CorpusPair, run

logger = logging.getLogger(__name__)


class WordSetMismatch(ValueError):
    pass


def read_gold(path) -> dict[str, float]:
    """SemEval gold file: ``word<TAB>value`` per line."""
    gold = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                word, value = line.split("\t")
                gold[word] = float(value)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'word<TAB>value'") from None
    return gold


def write_gold(gold: Mapping[str, float], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for w, v in gold.items():
            fh.write(f"{w}\t{v:g}\n")


@dataclass
class GoldLabels:
    binary: dict[str, int] | None = None
    graded: dict[str, float] | None = None

    def __post_init__(self):
        if self.binary is not None:
            self.binary = {w: int(v) for w, v in self.binary.items()}
            if any(v not in (0, 1) for v in self.binary.values()):
                raise ValueError("binary gold labels must be 0 or 1")
        if self.graded is not None and not all(np.isfinite(list(self.graded.values()))):
            raise ValueError("graded gold scores must be finite")

    @property
    def words(self) -> list[str]:
        src = self.binary if self.binary is not None else self.graded or {}
        return list(src)

    @classmethod
    def read(cls, binary=None, graded=None) -> "GoldLabels":
        return cls(
            read_gold(binary) if binary else None,
            read_gold(graded) if graded else None,
        )


def _paired(pred: Mapping, gold: Mapping) -> tuple[list, list]:
    missing_pred = sorted(set(gold) - set(pred))
    missing_gold = sorted(set(pred) - set(gold))
    if missing_pred or missing_gold:
        raise WordSetMismatch(
            f"word sets differ; missing predictions: {missing_pred}, not in gold: {missing_gold}"
        )
    words = list(gold)
    return [pred[w] for w in words], [gold[w] for w in words]


def accuracy(predicted: Mapping[str, int], gold: Mapping[str, int]) -> float:
    p, g = _paired(predicted, gold)
    if not g:
        raise ValueError("accuracy over an empty word set")
    return float(np.mean(np.asarray(p) == np.asarray(g)))


def majority_class_baseline(gold: Mapping[str, int]) -> tuple[int, dict[str, int], float]:
    """Predict the most common gold class everywhere (ties go to class 0)."""
    if not gold:
        raise ValueError("empty gold labels")
    counts = Counter(int(v) for v in gold.values())
    label = 1 if counts[1] > counts[0] else 0
    predicted = {w: label for w in gold}
    return label, predicted, accuracy(predicted, gold)


def midranks(x) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(pred, gold) -> float:
    """Spearman's rho: Pearson correlation of mid-ranks.

    Accepts two word->score mappings (word sets must match) or two
    equal-length sequences.
    """
    if isinstance(pred, Mapping) or isinstance(gold, Mapping):
        pred, gold = _paired(pred, gold)
    a = midranks(pred)
    b = midranks(gold)
    if len(a) != len(b):
        raise ValueError("score vectors differ in length")
    if len(a) < 2:
        raise ValueError("spearman needs at least two items")
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a * a).sum() * (b * b).sum())
    if den == 0:
        raise ValueError("spearman undefined for a constant score vector")
    return float(np.clip((a * b).sum() / den, -1.0, 1.0))


def decay(scores: Mapping[str, float], best: Mapping[str, float], relative: bool = True) -> float:
    """Mean shortfall of a method against the per-language best.

    ``relative=True`` divides each shortfall by that language's best value,
    which reproduces the published decay columns; ``relative=False`` gives
    the plain mean difference.
    """
    if set(scores) != set(best):
        raise ValueError("scores and best cover different languages")
    gaps = []
    for lang in scores:
        gap = best[lang] - scores[lang]
        gaps.append(gap / best[lang] if relative else gap)
    return float(np.mean(gaps))


@dataclass
class EvalRow:
    features: tuple[str, ...]
    threshold: float
    accuracy: float | None
    spearman: float | None
    n: int | None = None


def evaluate_targets(scores, gold: GoldLabels, missing: str = "change") -> tuple[float | None, float | None]:
    preds = predict_targets(scores, gold.words, missing)
    acc = rho = None
    if gold.binary is not None:
        acc = accuracy({p.word: p.label for p in preds}, gold.binary)
    if gold.graded is not None:
        rho = spearman({p.word: p.score for p in preds}, gold.graded)
    return acc, rho


FEATURE_SETS = (("cos",), ("map",), ("cos", "freq"), ("cos", "map", "freq"))


def feature_ablation(
    pair: CorpusPair,
    gold: GoldLabels,
    feature_sets: Sequence[Sequence[str]] = FEATURE_SETS,
    threshold: float = 0.75,
    landmarks: LandmarkSelection = LandmarkSelection(),
    map_k: int = 100,
    freq_sign: str = "prose",
    missing: str = "change",
) -> list[EvalRow]:
    """Score each feature combination once on a shared alignment."""
    full = run(pair, landmarks, FEATURES, map_k, freq_sign, threshold)
    rows = []
    for fs in feature_sets:
        sub = FeatureTable(full.features.words, {f: full.features.values[f] for f in fs},
                           map_k=full.features.map_k, landmarks=str(landmarks))
        acc, rho = evaluate_targets(score_pipeline(sub, threshold), gold, missing)
        rows.append(EvalRow(tuple(fs), threshold, acc, rho))
    return rows


def default_grid(N: int, lo: int = 300, points: int = 20) -> list[int]:
    """Log-spaced landmark counts from ``lo`` to ``N`` inclusive."""
    lo = max(2, min(lo, N))
    grid = np.unique(np.round(np.geomspace(lo, N, points)).astype(int))
    grid = [int(g) for g in grid]
    if grid[-1] != N:
        grid.append(N)
    return grid


@dataclass
class SweepResult:
    rows: list[EvalRow] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "t", "features", "accuracy", "spearman"])
            for r in self.rows:
                writer.writerow([
                    r.n, r.threshold, "+".join(r.features),
                    "" if r.accuracy is None else f"{r.accuracy:.6g}",
                    "" if r.spearman is None else f"{r.spearman:.6g}",
                ])

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def landmark_sweep(
    pair: CorpusPair,
    gold: GoldLabels,
    grid: Sequence[int] | None = None,
    threshold: float = 0.75,
    features: Sequence[str] = FEATURES,
    map_k: int = 100,
    freq_sign: str = "prose",
    missing: str = "change",
) -> SweepResult:
    """Re-align on the top-n landmarks for each n in ``grid``; embeddings stay fixed."""
    N = pair.shared_size
    grid = list(grid) if grid is not None else default_grid(N)
    if any(n < 2 for n in grid):
        raise ValueError("landmark counts must be >= 2")
    result = SweepResult()
    for n in grid:
        sel = LandmarkSelection("top", n=n)
        out = run(pair, sel, features, map_k, freq_sign, threshold)
        acc, rho = evaluate_targets(out.scores, gold, missing)
        logger.info("sweep n=%d: accuracy=%s spearman=%s", n, acc, rho)
        result.rows.append(EvalRow(tuple(features), threshold, acc, rho, n=min(n, N)))
    return result


# -- synthetic change corpora ------------------------------------------------

def _zipf_weights(n: int, s: float = 1.0) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def generate_base_corpus(
    n_tokens: int = 1_000_000,
    n_topics: int = 20,
    words_per_topic: int = 60,
    n_function_words: int = 30,
    function_rate: float = 0.25,
    sentence_length: tuple[int, int] = (8, 20),
    seed: int = 0,
) -> list[list[str]]:
    """Topic-structured random text: each sentence draws from one topic.

    Words of a topic share contexts, so embeddings trained on the output
    have a meaningful neighborhood structure. Within-topic and function-word
    frequencies are Zipfian.
    """
    rng = np.random.default_rng(seed)
    topic_words = [[f"t{z:02d}w{j:03d}" for j in range(words_per_topic)] for z in range(n_topics)]
    function_words = [f"fn{j:02d}" for j in range(n_function_words)]
    topic_p = _zipf_weights(words_per_topic)
    fn_p = _zipf_weights(n_function_words)
    sentences = []
    produced = 0
    while produced < n_tokens:
        length = int(rng.integers(sentence_length[0], sentence_length[1] + 1))
        z = int(rng.integers(n_topics))
        is_fn = rng.random(length) < function_rate
        tw = rng.choice(words_per_topic, size=length, p=topic_p)
        fw = rng.choice(n_function_words, size=length, p=fn_p)
        sentences.append([function_words[f] if m else topic_words[z][t] for m, t, f in zip(is_fn, tw, fw)])
        produced += length
    return sentences


@dataclass
class SyntheticShift:
    corpus1: list[list[str]]
    corpus2: list[list[str]]
    gold: dict[str, int]
    donors: dict[str, str]

    def write(self, out_dir) -> dict[str, Path]:
        from .corpus import write_corpus

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus1": out_dir / "corpus1.txt",
            "corpus2": out_dir / "corpus2.txt",
            "targets": out_dir / "targets.txt",
            "gold": out_dir / "gold.txt",
            "donors": out_dir / "donors.txt",
        }
        write_corpus(self.corpus1, paths["corpus1"])
        write_corpus(self.corpus2, paths["corpus2"])
        paths["targets"].write_text("".join(f"{w}\n" for w in self.gold), encoding="utf-8")
        write_gold(self.gold, paths["gold"])
        paths["donors"].write_text("".join(f"{t}\t{d}\n" for t, d in self.donors.items()), encoding="utf-8")
        return paths


def _cooccurrence_lift(corpus: Sequence[Sequence[str]], words: Sequence[str]) -> dict[str, dict[str, float]]:
    """P(w in sentence | word in sentence) / P(w in sentence) for each of ``words``."""
    doc_freq: Counter = Counter()
    with_word = {w: Counter() for w in words}
    n_with = Counter()
    for s in corpus:
        types = set(s)
        doc_freq.update(types)
        for w in types.intersection(with_word):
            with_word[w].update(types)
            n_with[w] += 1
    n = len(corpus)
    return {
        w: {v: (c / n_with[w]) / (doc_freq[v] / n) for v, c in co.items()}
        for w, co in with_word.items()
    }


def generate_synthetic_shift(
    base_corpus: Sequence[Sequence[str]],
    target_words: Sequence[str],
    shift_rate: float,
    seed: int,
    n_controls: int = 45,
    donors: Mapping[str, str] | None = None,
    donor_ratio: float = 4.0,
    max_lift: float = 2.0,
) -> SyntheticShift:
    """Inject a new sense into each target word in the second corpus.

    Every occurrence of the target's donor word is replaced by the target with
    probability ``shift_rate``, so the target picks up the donor's contexts.
    Donors default to words at least ``donor_ratio`` times as frequent as the
    target whose sentence co-occurrence lift with the target is at most
    ``max_lift``; a donor that already shares the target's contexts would
    inject no new sense. Gold marks targets 1 and ``n_controls`` sampled
    untouched words 0.
    """
    if not 0 < shift_rate <= 1:
        raise ValueError("shift_rate must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    counts = Counter(w for s in base_corpus for w in s)
    absent = [w for w in target_words if w not in counts]
    if absent:
        raise ValueError(f"target words absent from the base corpus: {absent}")
    targets = list(dict.fromkeys(target_words))
    if donors is None:
        donors = {}
        taken = set(targets)
        by_freq = sorted(counts, key=lambda w: (-counts[w], w))
        lift = _cooccurrence_lift(base_corpus, targets)
        for t in targets:
            pool = [w for w in by_freq if w not in taken and counts[w] >= donor_ratio * counts[t]
                    and lift[t].get(w, 0.0) <= max_lift]
            if not pool:
                raise ValueError(f"no donor at least {donor_ratio}x as frequent as {t!r} with lift <= {max_lift}")
            d = pool[int(rng.integers(len(pool)))]
            donors[t] = d
            taken.add(d)
    else:
        donors = dict(donors)
    replace = {d: t for t, d in donors.items()}
    corpus2 = []
    for s in base_corpus:
        if any(w in replace for w in s):
            s = [replace[w] if w in replace and rng.random() < shift_rate else w for w in s]
        corpus2.append(list(s))
    excluded = set(targets) | set(donors.values())
    candidates = sorted(w for w in counts if w not in excluded)
    n_controls = min(n_controls, len(candidates))
    controls = [candidates[i] for i in sorted(rng.choice(len(candidates), n_controls, replace=False))]
    gold = {t: 1 for t in targets}
    gold.update({c: 0 for c in controls})
    return SyntheticShift([list(s) for s in base_corpus], corpus2, gold, donors)


def pick_targets(base_corpus: Sequence[Sequence[str]], n: int, seed: int,
                 min_freq: float = 2e-4, max_freq: float = 6e-4) -> list[str]:
    """Sample ``n`` words with mid-range relative frequency to serve as shift targets."""
    counts = Counter(w for s in base_corpus for w in s)
    total = sum(counts.values())
    pool = sorted(w for w, c in counts.items() if min_freq <= c / total <= max_freq)
    if len(pool) < n:
        raise ValueError(f"only {len(pool)} words with relative frequency in [{min_freq}, {max_freq}]")
    rng = np.random.default_rng(seed)
    return [pool[i] for i in sorted(rng.choice(len(pool), n, replace=False))]
