import math

import numpy as np
import pytest

from semshift.corpus import SentenceList, build_vocabulary
from semshift.features import cos_distance
from semshift.sgns import (
    DivergenceError,
    SgnsConfig,
    TrainingState,
    keep_probabilities,
    negative_sampling_distribution,
    pair_objective,
    sgd_step,
    train,
)

from conftest import make_vocab


def random_state(rng, n=6, dim=3):
    syn0 = rng.normal(scale=0.5, size=(n, dim))
    syn1 = rng.normal(scale=0.5, size=(n, dim))
    return TrainingState(syn0, syn1, lr=0.1)


def finite_difference_gradient(state, t, c, negs, h=1e-5):
    """Central differences of the pair objective w.r.t. every entry of both matrices."""
    grads = []
    for mat in (state.syn0, state.syn1):
        g = np.zeros_like(mat)
        for idx in np.ndindex(mat.shape):
            old = mat[idx]
            mat[idx] = old + h
            up = pair_objective(t, c, negs, state)
            mat[idx] = old - h
            down = pair_objective(t, c, negs, state)
            mat[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def applied_gradient(state, t, c, negs, lr=1e-3):
    before0, before1 = state.syn0.copy(), state.syn1.copy()
    state.lr = lr
    sgd_step(t, c, negs, state)
    g0 = (state.syn0 - before0) / lr
    g1 = (state.syn1 - before1) / lr
    state.syn0[:], state.syn1[:] = before0, before1
    return g0, g1


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def test_negative_distribution_examples():
    np.testing.assert_allclose(negative_sampling_distribution([1, 1], 0.75), [0.5, 0.5])
    np.testing.assert_allclose(negative_sampling_distribution([16, 1], 0.75), [8 / 9, 1 / 9], atol=1e-12)
    np.testing.assert_allclose(negative_sampling_distribution([7, 2, 1], 0.0), [1 / 3] * 3)
    p = negative_sampling_distribution(make_vocab({"a": 5, "b": 3, "c": 11}), 0.75)
    assert abs(p.sum() - 1) < 1e-9


def test_zero_learning_rate_is_noop(rng):
    state = random_state(rng)
    state.lr = 0.0
    s0, s1 = state.syn0.copy(), state.syn1.copy()
    sgd_step(0, 1, [2, 3], state)
    assert np.array_equal(state.syn0, s0) and np.array_equal(state.syn1, s1)


def test_step_increases_positive_term():
    state = TrainingState(np.array([[0.3, -0.2], [0.1, 0.4]]), np.array([[0.2, 0.1], [-0.3, 0.5]]), lr=0.05)
    positive = lambda: math.log(1 / (1 + math.exp(-state.syn1[1] @ state.syn0[0])))
    before = positive()
    sgd_step(0, 1, [0], state)
    assert positive() > before


def test_gradient_matches_finite_differences_3d(rng):
    state = random_state(rng, n=5, dim=3)
    negs = np.array([2, 3, 4])
    fd = finite_difference_gradient(state, 0, 1, negs)
    an = applied_gradient(state, 0, 1, negs)
    for a, f in zip(an, fd):
        assert rel_err(a, f) < 1e-5


def test_locality(rng):
    state = random_state(rng, n=8, dim=4)
    s0, s1 = state.syn0.copy(), state.syn1.copy()
    sgd_step(2, 5, [1, 1, 6], state)
    changed0 = np.flatnonzero((state.syn0 != s0).any(axis=1))
    changed1 = np.flatnonzero((state.syn1 != s1).any(axis=1))
    assert set(changed0) <= {2}
    assert set(changed1) <= {5, 1, 6}


def test_keep_probabilities():
    keep = keep_probabilities(np.array([100_000, 10]), 100_010, 1e-3)
    assert keep[1] == 1.0 and 0 < keep[0] < 1
    assert (keep_probabilities(np.array([5, 5]), 10, 0) == 1).all()


def test_config_validation():
    with pytest.raises(ValueError):
        SgnsConfig(dim=0)
    with pytest.raises(ValueError):
        SgnsConfig(initial_lr=0)
    cfg = SgnsConfig()
    assert (cfg.dim, cfg.window, cfg.negatives, cfg.min_count) == (300, 10, 5, 10)


def shared_context_corpus(seed=0, n=3000):
    rng = np.random.default_rng(seed)
    ctx_a = ["sun", "light", "bright", "warm", "sky"]
    ctx_b = ["bark", "fur", "tail", "paw", "leash"]
    sents = []
    for _ in range(n):
        if rng.random() < 0.5:
            center = rng.choice(["day", "night"])
            ctx = ctx_a
        else:
            center = rng.choice(["cat", "dog", "fox"])
            ctx = ctx_b
        words = list(rng.choice(ctx, 4))
        words.insert(2, str(center))
        sents.append(words)
    return SentenceList(sents)


@pytest.fixture(scope="module")
def tiny_model():
    corpus = shared_context_corpus()
    vocab = build_vocabulary(corpus, 1)
    cfg = SgnsConfig(dim=10, window=2, epochs=50, min_count=1, subsample_threshold=0, seed=3)
    return corpus, vocab, cfg, train(corpus, vocab, cfg)


def test_distributional_similarity(tiny_model):
    _, _, _, emb = tiny_model
    sim = lambda a, b: 1 - cos_distance(emb[a], emb[b])
    assert sim("day", "night") > sim("day", "cat")
    assert sim("day", "night") > sim("day", "dog")
    assert np.isfinite(emb.matrix).all()
    assert emb.matrix.shape == (len(emb.words), 10)


def test_training_is_deterministic(tiny_model):
    corpus, vocab, cfg, emb = tiny_model
    again = train(corpus, vocab, cfg)
    assert np.array_equal(emb.matrix, again.matrix)
    other = train(corpus, vocab, SgnsConfig(**{**cfg.as_dict(), "seed": 4}))
    assert not np.array_equal(emb.matrix, other.matrix)


def test_parallel_mode_runs():
    corpus = shared_context_corpus(n=400)
    vocab = build_vocabulary(corpus, 1)
    emb = train(corpus, vocab, SgnsConfig(dim=8, window=2, epochs=2, min_count=1, threads=2))
    assert np.isfinite(emb.matrix).all()


def test_divergence_detected():
    corpus = shared_context_corpus(n=300)
    vocab = build_vocabulary(corpus, 1)
    with pytest.raises(DivergenceError, match="initial_lr"):
        train(corpus, vocab, SgnsConfig(dim=8, window=2, epochs=3, min_count=1, initial_lr=1e300,
                                        subsample_threshold=0))
