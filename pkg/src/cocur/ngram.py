"""Interpolated n-gram language models and the domain-relevance score.

The domain score of a source sentence is the per-token log-probability gap
between an in-domain LM and a general-domain LM (cross-entropy difference):

    (ln P(x; indomain) - ln P(x; general)) / |x|

Models interpolate maximum-likelihood estimates of orders 1..order with
fixed weights (listed highest order first).  The unigram level is add-alpha
smoothed over the full vocabulary including UNK.  There is no BOS/EOS
padding: at position j only orders k <= j+1 apply, and weights are
renormalized over the orders whose context was observed in training, which
keeps every conditional distribution summing to exactly 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import Corpus, SentencePair, Vocab, build_vocab
from .errors import DataError

_MAGIC = b"COCUR-NGRAM v1\n"

Context = tuple[int, ...]


def _check_weights(order: int, weights: Sequence[float]) -> tuple[float, ...]:
    w = tuple(float(v) for v in weights)
    if order < 1:
        raise DataError(f"order must be >= 1, got {order}")
    if len(w) != order:
        raise DataError(f"need {order} interpolation weights (highest order first), got {len(w)}")
    if any(v < 0 for v in w):
        raise DataError("interpolation weights must be non-negative")
    if abs(sum(w) - 1.0) > 1e-9:
        raise DataError(f"interpolation weights must sum to 1, got {sum(w)}")
    if w[-1] <= 0:
        raise DataError("the unigram interpolation weight must be positive")
    return w


class NgramLm:
    """Trained n-gram model; immutable once built, safe for concurrent reads."""

    def __init__(
        self,
        order: int,
        interpolation_weights: Sequence[float],
        unigram_alpha: float,
        vocab: Vocab,
        unigram_counts: np.ndarray,
        unigram_probs: np.ndarray,
        counts: dict[int, dict[Context, dict[int, int]]],
        totals: dict[int, dict[Context, int]],
    ):
        self.order = order
        self.interpolation_weights = _check_weights(order, interpolation_weights)
        self.unigram_alpha = unigram_alpha
        self.vocab = vocab
        self.unigram_counts = unigram_counts
        self.unigram_probs = unigram_probs
        self.counts = counts
        self.totals = totals
        # weight_of[k] for order k; interpolation_weights[0] belongs to the full order
        self._weight_of = {order - i: w for i, w in enumerate(self.interpolation_weights)}

    def prob(self, token_id: int, context_ids: Sequence[int]) -> float:
        """P(token | context), renormalized over the available orders."""
        num = self._weight_of[1] * float(self.unigram_probs[token_id])
        wsum = self._weight_of[1]
        for k in range(2, self.order + 1):
            if len(context_ids) < k - 1:
                break
            ctx = tuple(context_ids[len(context_ids) - (k - 1):])
            total = self.totals[k].get(ctx)
            if not total:
                continue
            w = self._weight_of[k]
            num += w * self.counts[k][ctx].get(token_id, 0) / total
            wsum += w
        return num / wsum


def train_ngram(
    corpus: Corpus,
    order: int = 3,
    interpolation_weights: Sequence[float] = (0.5, 0.3, 0.2),
    unigram_alpha: float = 0.1,
    vocab: Optional[Vocab] = None,
    side: str = "source",
) -> NgramLm:
    """Count-based training on one side of a corpus."""
    weights = _check_weights(order, interpolation_weights)
    if unigram_alpha < 0:
        raise DataError(f"unigram_alpha must be >= 0, got {unigram_alpha}")
    if vocab is None:
        vocab = build_vocab(corpus, side=side)
    v = len(vocab)
    unigram_counts = np.zeros(v, dtype=np.int64)
    counts: dict[int, dict[Context, dict[int, int]]] = {k: {} for k in range(2, order + 1)}
    totals: dict[int, dict[Context, int]] = {k: {} for k in range(2, order + 1)}
    for p in corpus:
        tokens = p.source if side == "source" else p.target
        ids = [vocab.id(t) for t in tokens]
        for j, tok in enumerate(ids):
            unigram_counts[tok] += 1
            for k in range(2, order + 1):
                if j < k - 1:
                    break
                ctx = tuple(ids[j - k + 1 : j])
                table = counts[k].setdefault(ctx, {})
                table[tok] = table.get(tok, 0) + 1
                totals[k][ctx] = totals[k].get(ctx, 0) + 1
    total = int(unigram_counts.sum())
    if total == 0 and unigram_alpha == 0:
        raise DataError("zero-token corpus with unigram_alpha=0: unigram distribution undefined")
    unigram_probs = (unigram_counts + unigram_alpha) / (total + unigram_alpha * v)
    return NgramLm(order, weights, unigram_alpha, vocab, unigram_counts, unigram_probs, counts, totals)


def blend_unigram(lm: NgramLm, other: NgramLm, mu: float) -> NgramLm:
    """New model whose unigram distribution is mu*lm + (1-mu)*other.

    This stands in for fine-tune initialization: a small in-domain model
    keeps coverage from the general model instead of starving rare tokens.
    """
    if not 0.0 <= mu <= 1.0:
        raise DataError(f"mu must be in [0, 1], got {mu}")
    if lm.vocab.tokens != other.vocab.tokens:
        raise DataError("can only blend models sharing one vocabulary")
    probs = mu * lm.unigram_probs + (1.0 - mu) * other.unigram_probs
    return NgramLm(
        lm.order,
        lm.interpolation_weights,
        lm.unigram_alpha,
        lm.vocab,
        lm.unigram_counts,
        probs,
        lm.counts,
        lm.totals,
    )


def lm_logprob(lm: NgramLm, tokens: Sequence[str]) -> float:
    """Natural-log probability of a token sequence; empty input scores 0.0."""
    ids = [lm.vocab.id(t) for t in tokens]
    ll = 0.0
    lo = 0
    for j, tok in enumerate(ids):
        lo = max(0, j - (lm.order - 1))
        p = lm.prob(tok, ids[lo:j])
        ll += math.log(p) if p > 0 else float("-inf")
    return ll


@dataclass(frozen=True)
class DomainScorer:
    general: NgramLm
    indomain: NgramLm

    def __post_init__(self):
        if self.general.vocab.tokens != self.indomain.vocab.tokens:
            raise DataError("domain scorer components must share one vocabulary")


def train_domain_scorer(
    general_corpus: Corpus,
    indomain_corpus: Corpus,
    order: int = 3,
    interpolation_weights: Sequence[float] = (0.5, 0.3, 0.2),
    unigram_alpha: float = 0.1,
    mu: float = 0.9,
    vocab: Optional[Vocab] = None,
    min_count: int = 1,
) -> DomainScorer:
    """General LM from the background source side, in-domain LM from the
    monolingual corpus, with the in-domain unigram blended toward the
    general one at weight mu."""
    if vocab is None:
        merged = [
            SentencePair(i, p.source, ())
            for i, p in enumerate(list(general_corpus) + list(indomain_corpus))
        ]
        vocab = build_vocab(Corpus(merged), min_count=min_count, side="source")
    general = train_ngram(general_corpus, order, interpolation_weights, unigram_alpha, vocab)
    indomain = train_ngram(indomain_corpus, order, interpolation_weights, unigram_alpha, vocab)
    return DomainScorer(general, blend_unigram(indomain, general, mu))


def domain_score(scorer: DomainScorer, source: Sequence[str]) -> float:
    """Per-source-token cross-entropy difference; higher = more in-domain."""
    if len(source) == 0:
        raise DataError("domain_score requires a non-empty source sentence")
    return (lm_logprob(scorer.indomain, source) - lm_logprob(scorer.general, source)) / len(source)


def domain_scores(scorer: DomainScorer, corpus: Corpus) -> np.ndarray:
    return np.array([domain_score(scorer, p.source) for p in corpus], dtype=np.float64)


def save_ngram(lm: NgramLm, path) -> None:
    rows: dict[str, list[list[int]]] = {}
    for k in range(2, lm.order + 1):
        flat = []
        for ctx in sorted(lm.counts[k]):
            for tok in sorted(lm.counts[k][ctx]):
                flat.append(list(ctx) + [tok, lm.counts[k][ctx][tok]])
        rows[str(k)] = flat
    header = {
        "n_rows": {k: len(v) for k, v in rows.items()},
        "order": lm.order,
        "unigram_alpha": lm.unigram_alpha,
        "vocab_min_count": lm.vocab.min_count,
        "vocab_tokens": lm.vocab.tokens[1:],
        "weights": list(lm.interpolation_weights),
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(lm.unigram_counts, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(lm.unigram_probs, dtype="<f8").tobytes())
        for k in range(2, lm.order + 1):
            block = np.array(rows[str(k)], dtype="<i8").reshape(len(rows[str(k)]), k + 1)
            fh.write(block.tobytes())


def load_ngram(path) -> NgramLm:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise DataError(f"{path}: not a cocur n-gram model file")
        header = json.loads(fh.readline().decode("utf-8"))
        vocab = Vocab(header["vocab_tokens"], header["vocab_min_count"])
        v = len(vocab)
        order = int(header["order"])
        unigram_counts = np.frombuffer(fh.read(8 * v), dtype="<i8").copy()
        unigram_probs = np.frombuffer(fh.read(8 * v), dtype="<f8").copy()
        counts: dict[int, dict[Context, dict[int, int]]] = {k: {} for k in range(2, order + 1)}
        totals: dict[int, dict[Context, int]] = {k: {} for k in range(2, order + 1)}
        for k in range(2, order + 1):
            n = int(header["n_rows"][str(k)])
            block = np.frombuffer(fh.read(8 * n * (k + 1)), dtype="<i8").reshape(n, k + 1)
            for row in block:
                ctx = tuple(int(x) for x in row[: k - 1])
                tok, cnt = int(row[k - 1]), int(row[k])
                counts[k].setdefault(ctx, {})[tok] = cnt
                totals[k][ctx] = totals[k].get(ctx, 0) + cnt
    return NgramLm(
        order,
        header["weights"],
        float(header["unigram_alpha"]),
        vocab,
        unigram_counts,
        unigram_probs,
        counts,
        totals,
    )
