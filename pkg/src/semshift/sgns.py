"""Skip-gram with negative sampling, trained from the objective directly.

For a (target, context) pair with sampled negatives the per-pair objective
maximised is

    log sigmoid(u_c . v_t) + sum_n log sigmoid(-u_n . v_t)

where ``v`` rows live in the input matrix and ``u`` rows in the output
matrix. Only the input matrix is returned as the embedding.

The inner loops run under numba. With ``threads=1`` training is bitwise
reproducible for a fixed seed; with more threads rows are updated without
locks (hogwild) and results vary run to run.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

import numba
import numpy as np

from .corpus import EmptyVocabularyError, Vocabulary
from .vectors import EmbeddingMatrix

logger = logging.getLogger(__name__)

MIN_LR_FRACTION = 1e-4


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 300
    window: int = 10
    negatives: int = 5
    min_count: int = 10
    epochs: int = 5
    initial_lr: float = 0.025
    subsample_threshold: float = 1e-3
    seed: int = 1
    unigram_power: float = 0.75
    threads: int = 1

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs", "min_count", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be positive")
        if self.subsample_threshold < 0:
            raise ValueError("subsample_threshold must be >= 0 (0 disables)")

    def as_dict(self):
        return asdict(self)


@dataclass
class TrainingState:
    """Mutable trainer state: input (target) and output (context) matrices."""

    syn0: np.ndarray
    syn1: np.ndarray
    words_done: int = 0
    lr: float = 0.025

    def __post_init__(self):
        if self.syn0.shape != self.syn1.shape:
            raise ValueError("input and output matrices must share a shape")

    @classmethod
    def initial(cls, n_words: int, dim: int, seed: int, lr: float = 0.025, dtype=np.float32):
        rng = np.random.default_rng(seed)
        syn0 = ((rng.random((n_words, dim)) - 0.5) / dim).astype(dtype)
        syn1 = np.zeros((n_words, dim), dtype=dtype)
        return cls(syn0, syn1, 0, lr)


def negative_sampling_distribution(vocab: Vocabulary | Sequence[int], power: float = 0.75) -> np.ndarray:
    """Noise distribution P(w) proportional to count(w) ** power."""
    counts = vocab.counts_array() if isinstance(vocab, Vocabulary) else np.asarray(vocab, dtype=np.int64)
    if counts.size == 0:
        raise EmptyVocabularyError("empty vocabulary")
    weights = counts.astype(np.float64) ** power
    return weights / weights.sum()


def keep_probabilities(counts: np.ndarray, total: int, threshold: float) -> np.ndarray:
    """word2vec-style subsampling: keep prob (sqrt(f/s) + 1) * s/f with f the word's frequency."""
    if threshold <= 0:
        return np.ones(len(counts))
    freq = counts / total
    keep = (np.sqrt(freq / threshold) + 1.0) * threshold / freq
    return np.minimum(keep, 1.0)


@numba.njit(cache=True)
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@numba.njit(cache=True)
def _pair_update(syn0, syn1, target, context, negatives, lr, coeffs, grad):
    """One ascent step on the pair objective. Returns the objective before the step.

    All dot products use pre-step values, so the step is exactly ``lr`` times
    the analytic gradient even when a row repeats among the negatives.
    """
    dim = syn0.shape[1]
    n_out = negatives.shape[0] + 1
    obj = 0.0
    for j in range(n_out):
        row = context if j == 0 else negatives[j - 1]
        f = 0.0
        for d in range(dim):
            f += syn1[row, d] * syn0[target, d]
        if j == 0:
            coeffs[0] = 1.0 - _sigmoid(f)
            obj += _log_sigmoid(f)
        else:
            coeffs[j] = -_sigmoid(f)
            obj += _log_sigmoid(-f)
    for d in range(dim):
        grad[d] = 0.0
    for j in range(n_out):
        row = context if j == 0 else negatives[j - 1]
        for d in range(dim):
            grad[d] += coeffs[j] * syn1[row, d]
    for j in range(n_out):
        row = context if j == 0 else negatives[j - 1]
        g = lr * coeffs[j]
        for d in range(dim):
            syn1[row, d] += g * syn0[target, d]
    for d in range(dim):
        syn0[target, d] += lr * grad[d]
    return obj


@numba.njit(cache=True)
def _pair_objective(syn0, syn1, target, context, negatives):
    dim = syn0.shape[1]
    f = 0.0
    for d in range(dim):
        f += syn1[context, d] * syn0[target, d]
    obj = _log_sigmoid(f)
    for j in range(negatives.shape[0]):
        f = 0.0
        for d in range(dim):
            f += syn1[negatives[j], d] * syn0[target, d]
        obj += _log_sigmoid(-f)
    return obj


@numba.njit(cache=True)
def _train_span(syn0, syn1, ids, offsets, first, last, keep_prob, cum_table,
                window, n_neg, initial_lr, min_lr, words_before, total_words,
                progress_scale, seed):
    """Train on sentences ``first..last-1``. Returns (objective sum, pairs, words seen, diverged)."""
    np.random.seed(seed)
    dim = syn0.shape[1]
    n_vocab = syn0.shape[0]
    coeffs = np.empty(n_neg + 1, dtype=np.float64)
    grad = np.empty(dim, dtype=syn0.dtype)
    negs = np.empty(n_neg, dtype=np.int64)
    buf = np.empty(0, dtype=np.int64)
    total_cum = cum_table[-1]
    obj_sum = 0.0
    pairs = 0
    words_seen = 0
    for s in range(first, last):
        start = offsets[s]
        stop = offsets[s + 1]
        if stop - start > buf.shape[0]:
            buf = np.empty(stop - start, dtype=np.int64)
        n = 0
        for i in range(start, stop):
            w = ids[i]
            if keep_prob[w] >= 1.0 or np.random.random() < keep_prob[w]:
                buf[n] = w
                n += 1
        progress = (words_before + words_seen * progress_scale) / total_words
        lr = initial_lr * (1.0 - progress)
        if lr < min_lr:
            lr = min_lr
        words_seen += stop - start
        for pos in range(n):
            eff = window - np.random.randint(0, window)
            lo = pos - eff
            if lo < 0:
                lo = 0
            hi = pos + eff + 1
            if hi > n:
                hi = n
            target = buf[pos]
            for c in range(lo, hi):
                if c == pos:
                    continue
                context = buf[c]
                for j in range(n_neg):
                    r = context
                    for _ in range(10):
                        r = np.searchsorted(cum_table, np.random.random() * total_cum, side="right")
                        if r >= n_vocab:
                            r = n_vocab - 1
                        if r != context:
                            break
                    negs[j] = r
                obj = _pair_update(syn0, syn1, target, context, negs, lr, coeffs, grad)
                if not math.isfinite(obj):
                    return obj_sum, pairs, words_seen, True
                obj_sum += obj
                pairs += 1
    return obj_sum, pairs, words_seen, False


@numba.njit(cache=True, parallel=True)
def _train_parallel(syn0, syn1, ids, offsets, bounds, keep_prob, cum_table, window,
                    n_neg, initial_lr, min_lr, words_before, total_words, seeds):
    n_chunks = bounds.shape[0] - 1
    objs = np.zeros(n_chunks)
    pairs = np.zeros(n_chunks, dtype=np.int64)
    seen = np.zeros(n_chunks, dtype=np.int64)
    bad = np.zeros(n_chunks, dtype=np.bool_)
    for k in numba.prange(n_chunks):
        o, p, w, d = _train_span(syn0, syn1, ids, offsets, bounds[k], bounds[k + 1],
                                 keep_prob, cum_table, window, n_neg, initial_lr, min_lr,
                                 words_before, total_words, float(n_chunks), seeds[k])
        objs[k] = o
        pairs[k] = p
        seen[k] = w
        bad[k] = d
    return objs.sum(), pairs.sum(), seen.sum(), bad.any()


def sgd_step(target_id: int, context_id: int, negative_ids, state: TrainingState) -> TrainingState:
    """Apply one gradient-ascent step at ``state.lr``; touches only the involved rows."""
    negs = np.asarray(negative_ids, dtype=np.int64).reshape(-1)
    coeffs = np.empty(len(negs) + 1)
    grad = np.empty(state.syn0.shape[1], dtype=state.syn0.dtype)
    _pair_update(state.syn0, state.syn1, int(target_id), int(context_id), negs,
                 state.lr, coeffs, grad)
    return state


def pair_objective(target_id: int, context_id: int, negative_ids, state: TrainingState) -> float:
    negs = np.asarray(negative_ids, dtype=np.int64).reshape(-1)
    return float(_pair_objective(state.syn0, state.syn1, int(target_id), int(context_id), negs))


def encode(stream: Iterable[Sequence[str]], vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Map sentences to vocabulary ids, dropping out-of-vocabulary tokens.

    Returns a flat id array and sentence offsets (``len = sentences + 1``).
    """
    index = vocab.index
    ids: list[int] = []
    offsets = [0]
    for sentence in stream:
        ids.extend(index[w] for w in sentence if w in index)
        if len(ids) != offsets[-1]:
            offsets.append(len(ids))
    return np.asarray(ids, dtype=np.int64), np.asarray(offsets, dtype=np.int64)


def train(stream: Iterable[Sequence[str]], vocab: Vocabulary, config: SgnsConfig) -> EmbeddingMatrix:
    """Train SGNS embeddings for ``vocab`` on ``stream``; returns the input vectors."""
    if len(vocab) == 0:
        raise EmptyVocabularyError("cannot train on an empty vocabulary")
    if vocab.min_count != config.min_count:
        logger.warning("vocabulary min_count=%d differs from config min_count=%d",
                       vocab.min_count, config.min_count)
    ids, offsets = encode(stream, vocab)
    if ids.size == 0:
        raise EmptyVocabularyError("corpus holds no in-vocabulary tokens")
    counts = vocab.counts_array()
    keep = keep_probabilities(counts, int(counts.sum()), config.subsample_threshold)
    noise = negative_sampling_distribution(counts, config.unigram_power)
    cum_table = np.cumsum(noise)
    state = TrainingState.initial(len(vocab), config.dim, config.seed, config.initial_lr)
    n_sent = len(offsets) - 1
    total_words = float(ids.size * config.epochs)
    min_lr = config.initial_lr * MIN_LR_FRACTION
    seeds = np.random.SeedSequence(config.seed).generate_state(config.epochs * config.threads, dtype=np.uint32)
    for epoch in range(config.epochs):
        if config.threads == 1:
            obj, pairs, seen, diverged = _train_span(
                state.syn0, state.syn1, ids, offsets, 0, n_sent, keep, cum_table,
                config.window, config.negatives, config.initial_lr, min_lr,
                float(state.words_done), total_words, 1.0, int(seeds[epoch]))
        else:
            numba.set_num_threads(min(config.threads, numba.config.NUMBA_NUM_THREADS))
            bounds = np.linspace(0, n_sent, config.threads + 1).astype(np.int64)
            chunk_seeds = seeds[epoch * config.threads:(epoch + 1) * config.threads].astype(np.int64)
            obj, pairs, seen, diverged = _train_parallel(
                state.syn0, state.syn1, ids, offsets, bounds, keep, cum_table,
                config.window, config.negatives, config.initial_lr, min_lr,
                float(state.words_done), total_words, chunk_seeds)
        if diverged or not np.isfinite(state.syn0).all():
            raise DivergenceError(
                f"non-finite objective in epoch {epoch + 1}: initial_lr={config.initial_lr} is too high"
            )
        state.words_done += int(seen)
        state.lr = max(min_lr, config.initial_lr * (1.0 - state.words_done / total_words))
        logger.info("epoch %d/%d: %d pairs, mean objective %.4f, lr %.5f",
                    epoch + 1, config.epochs, pairs, obj / max(pairs, 1), state.lr)
    return EmbeddingMatrix(vocab.words, state.syn0.astype(np.float64), vocab=vocab)
