"""Labeled synthetic corpora with controlled domain mixture and noise.

Two "languages" are built from a shared deterministic word-for-word lexicon
(source token "i017" translates to "ti017").  The in-domain and out-of-domain
source distributions are Zipf over partially overlapping vocabularies whose
high-frequency heads are exclusive to each domain, so domain relevance is
separable by construction.  Clean targets are lexicon images of their
sources; a configurable fraction of background pairs is corrupted and
labeled clean=false.  Source sides are never modified by corruption.

All counts are realized exactly (floor(fraction * n)), with the member sets
drawn deterministically from the seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus, PairLabels, SentencePair
from .errors import ConfigError, DataError

NOISE_KINDS = ("misalign", "shuffle", "truncate")


@dataclass(frozen=True)
class SynthConfig:
    n_pairs: int = 20000
    indomain_fraction: float = 0.5
    noise_fraction: float = 0.3
    vocab_size: int = 400
    overlap_fraction: float = 0.9
    head_size: int = 50
    len_min: int = 4
    len_max: int = 12
    # weights over (misalign, shuffle, truncate); misalign-only by default
    # because a bag-of-words translation scorer cannot see permutation or
    # per-token-preserving truncation
    noise_mix: tuple[float, float, float] = (1.0, 0.0, 0.0)
    zipf_exponent: float = 1.0
    mono_pairs: int = 3000
    trusted_pairs: int = 1000
    heldout_pairs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_pairs < 1 or self.vocab_size < 2:
            raise ConfigError("degenerate synthetic config: need n_pairs >= 1 and vocab_size >= 2")
        for name in ("indomain_fraction", "noise_fraction", "overlap_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if not 1 <= self.len_min <= self.len_max:
            raise ConfigError("need 1 <= len_min <= len_max")
        if len(self.noise_mix) != 3 or any(w < 0 for w in self.noise_mix) or sum(self.noise_mix) <= 0:
            raise ConfigError("noise_mix needs three non-negative weights with positive sum")
        n_shared = round(self.overlap_fraction * self.vocab_size)
        head_cap = n_shared // 2 if n_shared > 0 else self.vocab_size
        if self.head_size < 1 or self.head_size > head_cap:
            raise ConfigError(
                f"head_size must be in [1, {head_cap}] so the domain heads stay disjoint"
            )


def translate(token: str) -> str:
    """The global bilingual lexicon: deterministic word-for-word image."""
    return "t" + token


def domain_vocabularies(config: SynthConfig) -> tuple[list[str], list[str], np.ndarray]:
    """(in-domain vocab by rank, out-domain vocab by rank, Zipf probabilities).

    The shared block occupies the top ranks of both domains but rotated by
    half its size, so the high-frequency heads are disjoint token sets while
    every shared token still occurs in both domains (that cross-domain
    coverage is what lets a trusted-data scorer transfer across domains).
    Exclusive tokens fill the low-frequency tail of each domain.
    """
    v = config.vocab_size
    n_shared = round(config.overlap_fraction * v)
    n_excl = v - n_shared
    shared = [f"c{k:04d}" for k in range(n_shared)]
    id_excl = [f"i{k:04d}" for k in range(n_excl)]
    od_excl = [f"o{k:04d}" for k in range(n_excl)]
    half = n_shared // 2
    id_vocab = shared + id_excl
    od_vocab = shared[half:] + shared[:half] + od_excl
    ranks = np.arange(1, v + 1, dtype=np.float64)
    probs = ranks ** (-config.zipf_exponent)
    probs /= probs.sum()
    return id_vocab, od_vocab, probs


def _draw_sentences(rng, vocab: list[str], probs: np.ndarray, n: int, len_min: int, len_max: int):
    lengths = rng.integers(len_min, len_max + 1, size=n)
    flat = rng.choice(len(vocab), size=int(lengths.sum()), p=probs)
    out = []
    pos = 0
    for ln in lengths:
        out.append(tuple(vocab[i] for i in flat[pos : pos + ln]))
        pos += ln
    return out


def corrupt_pair(pair: SentencePair, kind: str, rng, donor_targets: Sequence[tuple[str, ...]]) -> SentencePair:
    """Corrupt the target side; the source is untouched and clean goes false.

    misalign swaps in another pair's (original) target; shuffle permutes the
    target tokens; truncate keeps the first ceil(|y|/2) tokens, falling back
    to misalign when |y| = 1.
    """
    if kind not in NOISE_KINDS:
        raise DataError(f"unknown corruption kind {kind!r}")
    if kind == "truncate" and len(pair.target) == 1:
        kind = "misalign"
    if kind == "misalign":
        if len(donor_targets) < 2:
            raise DataError("misalign needs at least two pairs")
        j = int(rng.integers(len(donor_targets) - 1))
        if j >= pair.id:
            j += 1
        new_target = tuple(donor_targets[j])
    elif kind == "shuffle":
        perm = rng.permutation(len(pair.target))
        new_target = tuple(pair.target[i] for i in perm)
    else:
        keep = math.ceil(len(pair.target) / 2)
        new_target = pair.target[:keep]
    in_domain = pair.labels.in_domain if pair.labels is not None else False
    return SentencePair(pair.id, pair.source, new_target, PairLabels(in_domain, False))


def gen_synthetic(config: SynthConfig) -> tuple[Corpus, Corpus, Corpus, Corpus]:
    """(labeled background, in-domain mono, trusted parallel, held-out parallel).

    The trusted corpus is clean out-of-domain pairs (the only parallel data
    the method may train on).  The held-out corpus is clean in-domain pairs,
    used purely as an assessment oracle: it measures whether the refined
    clean scorer actually improves on the target domain.  The mono corpus is
    drawn from the in-domain source distribution.
    """
    rng = np.random.default_rng(config.seed)
    id_vocab, od_vocab, probs = domain_vocabularies(config)
    n = config.n_pairs

    n_id = int(math.floor(config.indomain_fraction * n))
    in_domain = np.zeros(n, dtype=bool)
    in_domain[rng.permutation(n)[:n_id]] = True

    id_sents = _draw_sentences(rng, id_vocab, probs, n_id, config.len_min, config.len_max)
    od_sents = _draw_sentences(rng, od_vocab, probs, n - n_id, config.len_min, config.len_max)
    sources: list[tuple[str, ...]] = []
    it_id, it_od = iter(id_sents), iter(od_sents)
    for flag in in_domain:
        sources.append(next(it_id) if flag else next(it_od))
    clean_targets = [tuple(translate(t) for t in src) for src in sources]

    pairs = [
        SentencePair(i, sources[i], clean_targets[i], PairLabels(bool(in_domain[i]), True))
        for i in range(n)
    ]

    n_noise = int(math.floor(config.noise_fraction * n))
    noisy_ids = sorted(int(i) for i in rng.permutation(n)[:n_noise])
    mix = np.asarray(config.noise_mix, dtype=np.float64)
    mix /= mix.sum()
    for i in noisy_ids:
        kind = NOISE_KINDS[int(rng.choice(3, p=mix))]
        pairs[i] = corrupt_pair(pairs[i], kind, rng, clean_targets)
    background = Corpus(pairs, "synthetic://background")

    mono_sents = _draw_sentences(rng, id_vocab, probs, config.mono_pairs, config.len_min, config.len_max)
    mono = Corpus(
        [SentencePair(i, s, ()) for i, s in enumerate(mono_sents)],
        "synthetic://indomain-mono",
    )

    def _clean_parallel(vocab: list[str], count: int, name: str) -> Corpus:
        sents = _draw_sentences(rng, vocab, probs, count, config.len_min, config.len_max)
        return Corpus(
            [SentencePair(i, s, tuple(translate(t) for t in s)) for i, s in enumerate(sents)],
            f"synthetic://{name}",
        )

    trusted = _clean_parallel(od_vocab, config.trusted_pairs, "trusted")
    heldout = _clean_parallel(id_vocab, config.heldout_pairs, "heldout")
    return background, mono, trusted, heldout
