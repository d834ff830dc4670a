"""Selection-quality reports: percentile curves over tightening selection,
ground-truth precision on labeled corpora, and ranking AUC.

A percentile curve evaluates a statistic over the retained top-(1 - q/100)
set as the filtering percentage q sweeps a grid; curves are emitted as CSV
``filtering_pct,value,label`` and plotted externally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus
from .errors import DataError
from .model1 import Model1, score_corpus
from .ngram import DomainScorer, domain_scores

DEFAULT_PERCENTILES = tuple(range(0, 100, 10))


@dataclass(frozen=True)
class PercentileCurve:
    label: str
    rows: tuple[tuple[float, float], ...]  # (filtering_pct, statistic)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.rows], dtype=np.float64)


def _check_percentiles(percentiles: Sequence[float]) -> tuple[float, ...]:
    pts = tuple(float(q) for q in percentiles)
    if not pts:
        raise DataError("need at least one filtering percentage")
    if any(not 0.0 <= q < 100.0 for q in pts):
        raise DataError("filtering percentages must lie in [0, 100)")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise DataError("filtering percentages must be strictly increasing")
    return pts


def _retained(ordering_scores: np.ndarray, q: float) -> np.ndarray:
    n = len(ordering_scores)
    if n == 0:
        raise DataError("cannot build a curve over an empty corpus")
    keep = max(1, math.ceil((1.0 - q / 100.0) * n - 1e-9))
    ids = np.arange(n, dtype=np.int64)
    order = np.lexsort((ids, -ordering_scores))
    return ids[order[:keep]]


def _statistic_curve(label, per_example: np.ndarray, ordering_scores: np.ndarray, percentiles, reducer) -> PercentileCurve:
    pts = _check_percentiles(percentiles)
    ordering_scores = np.asarray(ordering_scores, dtype=np.float64)
    if len(ordering_scores) != len(per_example):
        raise DataError("ordering scores must cover the whole corpus")
    rows = []
    for q in pts:
        kept = _retained(ordering_scores, q)
        rows.append((q, float(reducer(per_example[kept]))))
    return PercentileCurve(label, tuple(rows))


def perword_loss(model: Model1, corpus: Corpus) -> np.ndarray:
    """Per-pair negative log-likelihood per target token."""
    lengths = np.array([len(p.target) for p in corpus], dtype=np.float64)
    if np.any(lengths == 0):
        raise DataError("per-word loss needs non-empty target sides")
    return -score_corpus(model, corpus) / lengths


def perword_loss_curve(
    model: Model1,
    corpus: Corpus,
    ordering_scores,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    label: str = "perword_loss",
) -> PercentileCurve:
    return _statistic_curve(label, perword_loss(model, corpus), ordering_scores, percentiles, np.mean)


def loss_stddev_curve(
    model: Model1,
    corpus: Corpus,
    ordering_scores,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    label: str = "loss_stddev",
) -> PercentileCurve:
    # population standard deviation: a single retained example gives 0.0
    return _statistic_curve(label, perword_loss(model, corpus), ordering_scores, percentiles, np.std)


def domain_relevance_curve(
    scorer: DomainScorer,
    corpus: Corpus,
    ordering_scores,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    label: str = "domain_relevance",
) -> PercentileCurve:
    return _statistic_curve(label, domain_scores(scorer, corpus), ordering_scores, percentiles, np.mean)


def selection_quality(selected_ids: Sequence[int], corpus: Corpus) -> dict[str, float]:
    """Fractions of the selection that are clean, in-domain, and both."""
    if not corpus.labeled:
        raise DataError("selection_quality needs a labeled corpus")
    ids = list(selected_ids)
    if not ids:
        raise DataError("selection_quality needs a non-empty selection")
    clean = sum(1 for i in ids if corpus[int(i)].labels.clean)
    indomain = sum(1 for i in ids if corpus[int(i)].labels.in_domain)
    joint = sum(1 for i in ids if corpus[int(i)].labels.clean and corpus[int(i)].labels.in_domain)
    n = len(ids)
    return {
        "clean_precision": clean / n,
        "indomain_precision": indomain / n,
        "joint_precision": joint / n,
    }


def score_auc(scores, labels) -> float:
    """P(score of a positive > score of a negative), ties counted 0.5."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise DataError("scores and labels must align")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes present")
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    avg_rank = (starts + ends) / 2.0
    ranks = avg_rank[inverse]
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def write_curves_csv(curves: Sequence[PercentileCurve], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("filtering_pct,value,label\n")
        for curve in curves:
            for q, v in curve.rows:
                fh.write(f"{q:g},{v!r},{curve.label}\n")
