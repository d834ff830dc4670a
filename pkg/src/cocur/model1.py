"""IBM Model 1 lexical translation models and the denoising score.

The denoising score of a pair is the per-target-token gap between a clean
model (fine-tuned on trusted data) and the noisy baseline:

    (ln P(y|x; clean) - ln P(y|x; noisy)) / |y|

Model 1 likelihood uses a NULL source slot:
    ln P(y|x) = sum_j ln( (1/(|x|+1)) * (t(y_j|NULL) + sum_i t(y_j|x_i)) )

Tables are dense float64 arrays with row 0 = NULL and source id e at row
e + 1.  Training is plain EM from a uniform table; probabilities are floored
(and renormalized) once after the final M-step so that unseen events keep
finite log-probabilities.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._backend import chunk_bounds, kernels, worker_count
from .corpus import Corpus, SentencePair, Vocab, build_vocab, encode_flat
from .errors import DataError

_MAGIC = b"COCUR-M1 v1\n"


@dataclass(frozen=True)
class Model1:
    ttable: np.ndarray  # (|V_src|+1, |V_tgt|), row 0 = NULL
    source_vocab: Vocab
    target_vocab: Vocab
    em_iterations_run: int
    epsilon_floor: float
    loglik_history: tuple[float, ...] = ()

    def null_row(self) -> np.ndarray:
        return self.ttable[0]

    def prob(self, source_token: str, target_token: str) -> float:
        """t(f|e); source_token None selects the NULL row."""
        row = 0 if source_token is None else self.source_vocab.id(source_token) + 1
        return float(self.ttable[row, self.target_vocab.id(target_token)])


def _encode_pairs(corpus: Corpus, source_vocab: Vocab, target_vocab: Vocab):
    src_tok, src_off = encode_flat(corpus, source_vocab, "source")
    tgt_tok, tgt_off = encode_flat(corpus, target_vocab, "target")
    return src_tok, src_off, tgt_tok, tgt_off


def _em_step(ttable: np.ndarray, enc, weights: np.ndarray) -> tuple[np.ndarray, float]:
    """One E-step accumulation; returns (counts, loglik of current table)."""
    src_tok, src_off, tgt_tok, tgt_off = enc
    n = len(weights)
    workers = worker_count()
    if workers <= 1:
        counts = np.zeros_like(ttable)
        ll = kernels.em_accumulate(ttable, src_tok, src_off, tgt_tok, tgt_off, weights, counts, 0, n)
        return counts, ll
    bounds = chunk_bounds(n, workers)
    buffers = [np.zeros_like(ttable) for _ in bounds]
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        futures = [
            pool.submit(kernels.em_accumulate, ttable, src_tok, src_off, tgt_tok, tgt_off, weights, buf, lo, hi)
            for buf, (lo, hi) in zip(buffers, bounds)
        ]
        lls = [f.result() for f in futures]
    # fixed chunk order keeps the reduction deterministic for a given worker count
    counts = buffers[0]
    for buf in buffers[1:]:
        counts += buf
    return counts, math.fsum(lls)


def _normalize_rows(counts: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    """Row-normalize counts; rows with no mass keep the fallback distribution."""
    totals = counts.sum(axis=1, keepdims=True)
    out = fallback.copy()
    np.divide(counts, totals, out=out, where=totals > 0)
    return out


def _floor_rows(ttable: np.ndarray, eps: float) -> np.ndarray:
    floored = np.maximum(ttable, eps)
    floored /= floored.sum(axis=1, keepdims=True)
    return floored


def _as_weights(corpus: Corpus, weights: Optional[Sequence[float]]) -> np.ndarray:
    if weights is None:
        return np.ones(len(corpus), dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(corpus),):
        raise DataError(f"weights length {w.shape} does not match corpus size {len(corpus)}")
    if np.any(w < 0):
        raise DataError("pair weights must be non-negative")
    return w


def train_model1(
    corpus: Corpus,
    em_iterations: int = 5,
    epsilon_floor: float = 1e-9,
    source_vocab: Optional[Vocab] = None,
    target_vocab: Optional[Vocab] = None,
    weights: Optional[Sequence[float]] = None,
) -> Model1:
    """EM training from the uniform table t(f|e) = 1/|V_target|.

    ``weights`` scales each pair's fractional counts (a weighted multiset).
    ``loglik_history[i]`` is the corpus log-likelihood of the table entering
    iteration i, so the sequence is non-decreasing by EM's guarantee.
    """
    if len(corpus) == 0:
        raise DataError("cannot train a translation model on an empty corpus")
    if em_iterations < 0:
        raise DataError(f"em_iterations must be >= 0, got {em_iterations}")
    source_vocab = source_vocab or build_vocab(corpus, side="source")
    target_vocab = target_vocab or build_vocab(corpus, side="target")
    enc = _encode_pairs(corpus, source_vocab, target_vocab)
    w = _as_weights(corpus, weights)

    ttable = np.full((len(source_vocab) + 1, len(target_vocab)), 1.0 / len(target_vocab))
    history = []
    for _ in range(em_iterations):
        counts, ll = _em_step(ttable, enc, w)
        history.append(ll)
        ttable = _normalize_rows(counts, ttable)
    ttable = _floor_rows(ttable, epsilon_floor)
    return Model1(ttable, source_vocab, target_vocab, em_iterations, epsilon_floor, tuple(history))


def finetune_model1(
    base: Model1,
    trusted: Corpus,
    em_iterations: int = 3,
    blend: float = 0.5,
    weights: Optional[Sequence[float]] = None,
) -> Model1:
    """EM on a trusted corpus warm-started from ``base``.

    After each M-step the estimate is mixed back toward the base table,
    new = blend * estimate + (1 - blend) * base, and renormalized; source
    rows unseen in the trusted corpus therefore keep the base distribution.
    The NULL row always keeps the base distribution: a small trusted corpus
    would otherwise reshape null-alignment mass toward its own target
    vocabulary, biasing scores against every target token it lacks.
    """
    if len(trusted) == 0:
        raise DataError("cannot fine-tune on an empty corpus")
    if not 0.0 < blend <= 1.0:
        raise DataError(f"blend must be in (0, 1], got {blend}")
    if em_iterations < 0:
        raise DataError(f"em_iterations must be >= 0, got {em_iterations}")
    enc = _encode_pairs(trusted, base.source_vocab, base.target_vocab)
    w = _as_weights(trusted, weights)

    ttable = base.ttable.copy()
    history = []
    for _ in range(em_iterations):
        counts, ll = _em_step(ttable, enc, w)
        history.append(ll)
        estimate = _normalize_rows(counts, np.zeros_like(ttable))
        mixed = blend * estimate + (1.0 - blend) * base.ttable
        # blend == 1 leaves unseen rows empty; they keep the base distribution
        ttable = _normalize_rows(mixed, base.ttable)
        ttable[0] = base.ttable[0]
    if em_iterations > 0:
        ttable = _floor_rows(ttable, base.epsilon_floor)
    return Model1(
        ttable,
        base.source_vocab,
        base.target_vocab,
        em_iterations,
        base.epsilon_floor,
        tuple(history),
    )


def tm_logprob(model: Model1, source: Sequence[str], target: Sequence[str]) -> float:
    """ln P(target | source) under Model 1; empty target scores 0.0."""
    if len(source) == 0:
        raise DataError("tm_logprob requires a non-empty source side")
    if len(target) == 0:
        return 0.0
    x = model.source_vocab.encode(source).astype(np.int64) + 1
    y = model.target_vocab.encode(target).astype(np.int64)
    block = model.ttable[np.concatenate(([0], x))[:, None], y[None, :]]
    return float(np.log(block.sum(axis=0)).sum()) - len(target) * math.log(len(source) + 1)


def score_corpus(model: Model1, corpus: Corpus) -> np.ndarray:
    """Per-pair ln P(y|x) for a whole corpus (thread-parallel, exact)."""
    enc = _encode_pairs(corpus, model.source_vocab, model.target_vocab)
    src_tok, src_off, tgt_tok, tgt_off = enc
    out = np.zeros(len(corpus), dtype=np.float64)
    workers = worker_count()
    if workers <= 1 or len(corpus) < 2:
        kernels.score_pairs(model.ttable, src_tok, src_off, tgt_tok, tgt_off, out, 0, len(corpus))
        return out
    bounds = chunk_bounds(len(corpus), workers)
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        futures = [
            pool.submit(kernels.score_pairs, model.ttable, src_tok, src_off, tgt_tok, tgt_off, out, lo, hi)
            for lo, hi in bounds
        ]
        for f in futures:
            f.result()
    return out


def perword_loglik(model: Model1, corpus: Corpus) -> float:
    """Corpus log-likelihood per target token (used for held-out tracking)."""
    if len(corpus) == 0:
        raise DataError("empty corpus")
    total_tokens = sum(len(p.target) for p in corpus)
    if total_tokens == 0:
        raise DataError("corpus has no target tokens")
    return float(score_corpus(model, corpus).sum()) / total_tokens


@dataclass(frozen=True)
class DenoiseScorer:
    noisy: Model1
    clean: Model1

    def __post_init__(self):
        if self.noisy.source_vocab is not self.clean.source_vocab and self.noisy.source_vocab.tokens != self.clean.source_vocab.tokens:
            raise DataError("denoise scorer components must share the source vocabulary")
        if self.noisy.target_vocab is not self.clean.target_vocab and self.noisy.target_vocab.tokens != self.clean.target_vocab.tokens:
            raise DataError("denoise scorer components must share the target vocabulary")


def denoise_score(scorer: DenoiseScorer, pair: SentencePair) -> float:
    """Per-target-token log-likelihood gap; higher = cleaner."""
    if len(pair.source) == 0 or len(pair.target) == 0:
        raise DataError("denoise_score requires non-empty source and target")
    gap = tm_logprob(scorer.clean, pair.source, pair.target) - tm_logprob(scorer.noisy, pair.source, pair.target)
    return gap / len(pair.target)


def denoise_scores(scorer: DenoiseScorer, corpus: Corpus) -> np.ndarray:
    lengths = np.array([len(p.target) for p in corpus], dtype=np.float64)
    if np.any(lengths == 0):
        raise DataError("denoise scoring requires non-empty target sides")
    return (score_corpus(scorer.clean, corpus) - score_corpus(scorer.noisy, corpus)) / lengths


def save_model1(model: Model1, path) -> None:
    header = {
        "dtype": "<f8",
        "em_iterations_run": model.em_iterations_run,
        "epsilon_floor": model.epsilon_floor,
        "loglik_history": list(model.loglik_history),
        "shape": list(model.ttable.shape),
        "source_min_count": model.source_vocab.min_count,
        "source_tokens": model.source_vocab.tokens[1:],
        "target_min_count": model.target_vocab.min_count,
        "target_tokens": model.target_vocab.tokens[1:],
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(model.ttable, dtype="<f8").tobytes())


def load_model1(path) -> Model1:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise DataError(f"{path}: not a cocur translation model file")
        header = json.loads(fh.readline().decode("utf-8"))
        shape = tuple(header["shape"])
        raw = fh.read(8 * shape[0] * shape[1])
    ttable = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    src_vocab = Vocab(header["source_tokens"], header["source_min_count"])
    tgt_vocab = Vocab(header["target_tokens"], header["target_min_count"])
    return Model1(
        ttable,
        src_vocab,
        tgt_vocab,
        int(header["em_iterations_run"]),
        float(header["epsilon_floor"]),
        tuple(header["loglik_history"]),
    )
