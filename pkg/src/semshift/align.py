"""Orthogonal Procrustes alignment of two embedding spaces over landmark words."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Vocabulary
from .vectors import EmbeddingMatrix

logger = logging.getLogger(__name__)


class LandmarkError(ValueError):
    pass


@dataclass(frozen=True)
class LandmarkSelection:
    """How to pick the words the alignment is fitted on.

    ``strategy`` is ``"all"`` (whole shared vocabulary), ``"top"`` (the ``n``
    shared words with the highest summed relative frequency) or ``"explicit"``
    (``words``, filtered to the shared vocabulary).
    """

    strategy: str = "all"
    n: int | None = None
    words: tuple[str, ...] = ()

    def __post_init__(self):
        if self.strategy not in ("all", "top", "explicit"):
            raise ValueError(f"unknown landmark strategy {self.strategy!r}")
        if self.strategy == "top" and (self.n is None or self.n < 1):
            raise ValueError("top-n landmark selection needs n >= 1")

    @classmethod
    def parse(cls, spec: str) -> "LandmarkSelection":
        """Parse ``all``, ``top:<n>`` or ``file:<path>`` (one word per line)."""
        if spec == "all":
            return cls("all")
        kind, _, arg = spec.partition(":")
        if kind == "top":
            return cls("top", n=int(arg))
        if kind == "file":
            text = Path(arg).read_text(encoding="utf-8")
            return cls("explicit", words=tuple(text.split()))
        raise ValueError(f"landmark spec must be all, top:<n> or file:<path>, got {spec!r}")

    def __str__(self):
        if self.strategy == "top":
            return f"top:{self.n}"
        if self.strategy == "explicit":
            return f"explicit:{len(self.words)}"
        return "all"


def shared_words(v1, v2) -> list[str]:
    """Words in both vocabularies, in the order of ``v1``."""
    return [w for w in v1 if w in v2]


def combined_frequency(v1: Vocabulary, v2: Vocabulary, word: str) -> float:
    return v1.count(word) / v1.total_tokens + v2.count(word) / v2.total_tokens


def resolve_landmarks(v1: Vocabulary, v2: Vocabulary, sel: LandmarkSelection) -> list[str]:
    """Landmark words for ``sel``, always returned in ``v1`` order.

    The fixed order makes top-N (N = shared vocabulary size) and ``all``
    produce bitwise-identical alignments.
    """
    shared = shared_words(v1, v2)
    if not shared:
        raise LandmarkError("vocabularies share no words")
    if sel.strategy == "all":
        chosen = shared
    elif sel.strategy == "top":
        if sel.n >= len(shared):
            chosen = shared
        else:
            ranked = sorted(shared, key=lambda w: (-combined_frequency(v1, v2, w), w))
            keep = set(ranked[:sel.n])
            chosen = [w for w in shared if w in keep]
    else:
        wanted = set(sel.words)
        chosen = [w for w in shared if w in wanted]
        if not chosen:
            raise LandmarkError("none of the explicit landmark words is in both vocabularies")
        dropped = len(wanted) - len(chosen)
        if dropped:
            logger.warning("%d explicit landmark words are not in both vocabularies", dropped)
    if len(chosen) < 2:
        raise LandmarkError(f"need at least 2 landmarks, got {len(chosen)}")
    return chosen


def procrustes(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Orthogonal Q minimising ||AQ - B||_F: Q = U V^T from the SVD U S V^T of A^T B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape or A.ndim != 2:
        raise ValueError(f"shape mismatch: A {A.shape} vs B {B.shape}")
    M = A.T @ B
    if not np.isfinite(M).all():
        raise ValueError("non-finite entries in A^T B")
    try:
        U, _, Vt = np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"SVD failed: {exc}") from exc
    return U @ Vt


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    Q: np.ndarray
    landmarks: list[str]
    residual: float
    aligned: EmbeddingMatrix
    target: EmbeddingMatrix = field(repr=False)

    def landmark_distances(self) -> list[tuple[str, float]]:
        """Cosine distance of every landmark after alignment."""
        from .features import cos_distance

        return [(w, cos_distance(self.aligned[w], self.target[w])) for w in self.landmarks]

    def write_diagnostics(self, path) -> None:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# landmarks={len(self.landmarks)} residual={self.residual:.6g}\n")
            writer = csv.writer(fh)
            writer.writerow(["word", "distance"])
            for w, d in self.landmark_distances():
                writer.writerow([w, f"{d:.6g}"])


def align(
    source: EmbeddingMatrix,
    target: EmbeddingMatrix,
    sel: LandmarkSelection = LandmarkSelection(),
    v1: Vocabulary | None = None,
    v2: Vocabulary | None = None,
) -> AlignmentResult:
    """Rotate every row of ``source`` onto ``target``'s space.

    Vocabularies default to the ones the matrices were trained with; they are
    only needed for frequency-ranked landmarks.
    """
    if source.dim != target.dim:
        raise ValueError(f"dimension mismatch: {source.dim} vs {target.dim}")
    v1 = v1 if v1 is not None else (source.vocab or source.words)
    v2 = v2 if v2 is not None else (target.vocab or target.words)
    if sel.strategy == "top" and not isinstance(v1, Vocabulary):
        raise LandmarkError("top-n landmarks need vocabularies with counts")
    if isinstance(v1, Vocabulary):
        landmarks = resolve_landmarks(v1, v2, sel)
    else:
        landmarks = _resolve_without_counts(v1, v2, sel)
    missing = [w for w in landmarks if w not in source or w not in target]
    if missing:
        raise LandmarkError(f"landmarks without vectors: {missing[:5]}")
    A = source.matrix[[source.id(w) for w in landmarks]]
    B = target.matrix[[target.id(w) for w in landmarks]]
    Q = procrustes(A, B)
    residual = float(np.linalg.norm(A @ Q - B))
    logger.info("aligned on %d landmarks (%s), residual %.4g", len(landmarks), sel, residual)
    return AlignmentResult(Q, landmarks, residual, source.with_matrix(source.matrix @ Q), target)


def _resolve_without_counts(w1: Sequence[str], w2: Sequence[str], sel: LandmarkSelection) -> list[str]:
    other = set(w2)
    shared = [w for w in w1 if w in other]
    if sel.strategy == "explicit":
        wanted = set(sel.words)
        shared = [w for w in shared if w in wanted]
        if not shared:
            raise LandmarkError("none of the explicit landmark words is in both vocabularies")
    if len(shared) < 2:
        raise LandmarkError(f"need at least 2 landmarks, got {len(shared)}")
    return shared
