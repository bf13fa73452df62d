"""Unsupervised lexical semantic change detection between two corpora."""
from .align import AlignmentResult, LandmarkSelection, align, procrustes, resolve_landmarks
from .corpus import CorpusStream, Vocabulary, build_vocabulary, relative_frequency, tokenize
from .ensemble import Ecdf, ScoreTable, classify, fit_ecdf, rank, score_pipeline, soft_vote
from .features import FeatureTable, build_feature_table, cos_distance, freq_differential, map_distance
from .pipeline import CorpusPair, run, train_pair
from .sgns import SgnsConfig, train
from .vectors import EmbeddingMatrix, nearest_neighbors

__version__ = "0.1.0"
