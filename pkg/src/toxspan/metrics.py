"""Character-overlap scoring and kernel density estimation.

The task metric is a per-document F1 computed on character offset sets of
predicted vs gold spans, averaged unweighted over documents. Conventions for
degenerate documents: both sets empty scores 1.0 (correct abstention), one
side empty scores 0.0.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np


class ScoreTriple(NamedTuple):
    f1: float
    precision: float
    recall: float


def score_document(pred: set[int], gold: set[int]) -> ScoreTriple:
    """Overlap F1/precision/recall between predicted and gold offset sets."""
    if not pred and not gold:
        return ScoreTriple(1.0, 1.0, 1.0)
    if not pred or not gold:
        return ScoreTriple(0.0, 0.0, 0.0)
    overlap = len(pred & gold)
    f1 = 2.0 * overlap / (len(pred) + len(gold))
    return ScoreTriple(f1, overlap / len(pred), overlap / len(gold))


def score_corpus(docs: Iterable[tuple[set[int], set[int]]]) -> ScoreTriple:
    """Unweighted mean of per-document scores over (pred, gold) pairs."""
    triples = [score_document(pred, gold) for pred, gold in docs]
    if not triples:
        raise ValueError("cannot score an empty corpus")
    n = len(triples)
    return ScoreTriple(
        sum(t.f1 for t in triples) / n,
        sum(t.precision for t in triples) / n,
        sum(t.recall for t in triples) / n,
    )


def gaussian_kde(
    values: Sequence[float], bandwidth: float, grid: Sequence[float]
) -> np.ndarray:
    """Gaussian-kernel density estimate evaluated on ``grid``.

    density(x) = (1 / (n * h)) * sum_i phi((x - v_i) / h), with phi the
    standard normal pdf and h the (fixed, user-supplied) bandwidth.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("values must be non-empty")
    xs = np.asarray(grid, dtype=np.float64)
    z = (xs[:, None] - vals[None, :]) / bandwidth
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return phi.sum(axis=1) / (vals.size * bandwidth)
