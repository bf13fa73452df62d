"""End-to-end composition: vocabularies, embeddings, alignment, features, scores."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .align import AlignmentResult, LandmarkSelection, align
from .corpus import Vocabulary, build_vocabulary
from .ensemble import ScoreTable, score_pipeline
from .features import DEFAULT_MAP_K, FEATURES, FeatureTable, build_feature_table
from .sgns import SgnsConfig, train
from .vectors import EmbeddingMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CorpusPair:
    """Both corpora's vocabularies and embeddings; the source side is the earlier corpus."""

    vocab1: Vocabulary
    vocab2: Vocabulary
    emb1: EmbeddingMatrix
    emb2: EmbeddingMatrix

    @property
    def shared_size(self) -> int:
        return sum(1 for w in self.vocab1 if w in self.vocab2)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    alignment: AlignmentResult
    features: FeatureTable
    scores: ScoreTable


def train_pair(corpus1: Iterable, corpus2: Iterable, config: SgnsConfig) -> CorpusPair:
    vocab1 = build_vocabulary(corpus1, config.min_count)
    vocab2 = build_vocabulary(corpus2, config.min_count)
    emb1 = train(corpus1, vocab1, config)
    emb2 = train(corpus2, vocab2, config)
    return CorpusPair(vocab1, vocab2, emb1, emb2)


def run(
    pair: CorpusPair,
    landmarks: LandmarkSelection = LandmarkSelection(),
    features: Sequence[str] = FEATURES,
    map_k: int = DEFAULT_MAP_K,
    freq_sign: str = "prose",
    threshold: float = 0.75,
) -> PipelineResult:
    result = align(pair.emb1, pair.emb2, landmarks, pair.vocab1, pair.vocab2)
    table = build_feature_table(
        result.aligned, pair.emb2, pair.vocab1, pair.vocab2,
        features=features, k=map_k, freq_sign=freq_sign, landmarks=str(landmarks),
    )
    return PipelineResult(result, table, score_pipeline(table, threshold))
