"""Axis-labeled tweets-by-articles matrices.

Three matrix flavors share one layout: rows are tweets, columns are
articles, both in a caller-fixed order. Values distinguish them:
similarities in [-1, 1], binary decisions in {+1, -1}, and ground-truth
labels in {1, -1, 0} where 0 means unknown (masked out of evaluation).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError

RANGE_TOL = 1e-9


def _frozen(values: np.ndarray, dtype) -> np.ndarray:
    out = np.asarray(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    tweet_ids: tuple[str, ...]
    article_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = _frozen(self.values, np.float64)
        _check_shape(vals, self.tweet_ids, self.article_ids)
        if vals.size and (vals.min() < -1 - RANGE_TOL or vals.max() > 1 + RANGE_TOL):
            raise ValueError("similarity values must lie within [-1, 1]")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class ClassificationMatrix:
    tweet_ids: tuple[str, ...]
    article_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = _frozen(self.values, np.int8)
        _check_shape(vals, self.tweet_ids, self.article_ids)
        if not np.isin(vals, (-1, 1)).all():
            raise ValueError("classification values must be +1 or -1")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class GroundTruthMatrix:
    tweet_ids: tuple[str, ...]
    article_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = _frozen(self.values, np.int8)
        _check_shape(vals, self.tweet_ids, self.article_ids)
        if not np.isin(vals, (-1, 0, 1)).all():
            raise ValueError("ground-truth values must be 1, -1 or 0")
        object.__setattr__(self, "values", vals)

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.values))


def _check_shape(values: np.ndarray, tweet_ids, article_ids) -> None:
    if values.ndim != 2 or values.shape != (len(tweet_ids), len(article_ids)):
        raise ShapeMismatchError(
            f"matrix shape {values.shape} does not match "
            f"{len(tweet_ids)} tweets x {len(article_ids)} articles"
        )


def write_matrix_csv(matrix, path) -> None:
    """Export with article ids as the header row and tweet ids as the first column.

    Floats are fixed at 6 decimals so identical runs emit identical bytes.
    """
    is_float = matrix.values.dtype.kind == "f"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tweet_id", *matrix.article_ids])
        for tid, row in zip(matrix.tweet_ids, matrix.values):
            if is_float:
                writer.writerow([tid, *(f"{v:.6f}" for v in row)])
            else:
                writer.writerow([tid, *(int(v) for v in row)])


def read_similarity_csv(path) -> SimilarityMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        article_ids = tuple(header[1:])
        tweet_ids = []
        rows = []
        for row in reader:
            tweet_ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return SimilarityMatrix(tuple(tweet_ids), article_ids, np.array(rows, dtype=np.float64))
