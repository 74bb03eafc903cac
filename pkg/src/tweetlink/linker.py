"""Pairwise cosine scoring, thresholding, and F1-maximizing calibration."""

from __future__ import annotations

import numpy as np

from . import evalx
from .errors import (
    DimMismatchError,
    EmptyInputError,
    MissingEmbeddingError,
    NoLabeledCellsError,
    NoPositivesError,
)
from .matrices import ClassificationMatrix, GroundTruthMatrix, SimilarityMatrix

# Offset for the outermost threshold candidates, below/above every score.
_EDGE_EPS = 1e-6


def cosine(u, v) -> float:
    """Cosine similarity; defined as 0 when either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimMismatchError(f"cannot compare vectors of shapes {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def score_matrix(
    tweet_vecs,
    article_vecs,
    tweet_ids=None,
    article_ids=None,
) -> SimilarityMatrix:
    """All-pairs cosine similarities, rows = tweets, columns = articles.

    Axis order follows the given id lists (defaulting to mapping order);
    ids without a vector raise MissingEmbeddingError.
    """
    tweet_ids = tuple(tweet_ids if tweet_ids is not None else tweet_vecs.keys())
    article_ids = tuple(article_ids if article_ids is not None else article_vecs.keys())
    if not tweet_ids or not article_ids:
        raise EmptyInputError("score_matrix needs at least one tweet and one article")

    def fetch(vecs, doc_id):
        try:
            return np.asarray(vecs[doc_id], dtype=np.float64)
        except KeyError:
            raise MissingEmbeddingError(doc_id) from None

    t_mat = [fetch(tweet_vecs, tid) for tid in tweet_ids]
    a_mat = [fetch(article_vecs, aid) for aid in article_ids]
    dims = {v.shape for v in t_mat} | {v.shape for v in a_mat}
    if len(dims) != 1:
        raise DimMismatchError(f"mixed vector shapes in the joint space: {sorted(dims)}")

    values = np.empty((len(tweet_ids), len(article_ids)), dtype=np.float64)
    for i, tv in enumerate(t_mat):
        for j, av in enumerate(a_mat):
            values[i, j] = cosine(tv, av)
    return SimilarityMatrix(tweet_ids, article_ids, values)


def classify(sim: SimilarityMatrix, threshold: float) -> ClassificationMatrix:
    """Binary decisions: +1 where similarity >= threshold (inclusive), else -1."""
    values = np.where(sim.values >= threshold, 1, -1).astype(np.int8)
    return ClassificationMatrix(sim.tweet_ids, sim.article_ids, values)


def calibrate_threshold(sim: SimilarityMatrix, gt: GroundTruthMatrix) -> tuple[float, float]:
    """Threshold maximizing masked F1, scanned over all decision boundaries.

    Candidates are the midpoints between consecutive distinct masked scores
    plus one value below and one above all scores, so every achievable
    confusion matrix is visited exactly once. Ties go to the smallest
    threshold.
    """
    scores, labels = evalx.masked_pairs(sim.values, gt)
    if scores.size == 0:
        raise NoLabeledCellsError("calibration needs at least one labeled cell")
    if not (labels == 1).any():
        raise NoPositivesError("calibration needs at least one positive cell")

    distinct = np.unique(scores)
    candidates = [distinct[0] - _EDGE_EPS]
    candidates.extend((distinct[:-1] + distinct[1:]) / 2.0)
    candidates.append(distinct[-1] + _EDGE_EPS)

    best_threshold = None
    best_f1 = -1.0
    for theta in candidates:
        preds = np.where(scores >= theta, 1, -1).astype(np.int8)
        f1 = evalx.binary_metrics(preds, labels).f1
        if f1 > best_f1:
            best_f1 = f1
            best_threshold = float(theta)
    return best_threshold, best_f1
