"""Dynamic data-selection schedules: pace functions, top-ratio selection,
mixed and cascaded co-curricula, uniform re-weighting, and batch sampling.

A pace function maps a training step to a retention ratio that halves every
``half_life`` steps until it hits a floor.  A curriculum applies one pace
(random/domain/denoise/mix) or nests two (cascade: denoise stage first, then
domain among the survivors).  Surviving examples are re-weighted uniformly
and batches are drawn from that distribution with replacement.

Selection runs either on a streaming buffer refilled from epoch-reshuffled
permutations of the dataset, or on the full dataset (exact mode, used by
invariant tests and the ``select`` command).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DataError

CURRICULUM_KINDS = ("random", "domain", "denoise", "mix", "cascade")

# pace hyper-parameters at the reference run length they were tuned for;
# half-lives scale linearly when a run uses a different max_steps
REFERENCE_MAX_STEPS = 3_000_000
DOMAIN_HALF_LIFE = 400_000
DENOISE_HALF_LIFE = 400_000
CASCADE_DOMAIN_HALF_LIFE = 900_000
SINGLE_FLOOR = 0.1
DENOISE_FLOOR = 0.2
CASCADE_DOMAIN_FLOOR = 0.5


@dataclass(frozen=True)
class PaceFunction:
    half_life: float
    floor: float

    def __post_init__(self):
        if self.half_life <= 0:
            raise ConfigError(f"pace half_life must be positive, got {self.half_life}")
        if not 0.0 < self.floor <= 1.0:
            raise ConfigError(f"pace floor must be in (0, 1], got {self.floor}")

    def value(self, t: float) -> float:
        if t < 0:
            raise DataError(f"pace step must be >= 0, got {t}")
        return max(0.5 ** (t / self.half_life), self.floor)

    def at_floor(self, t: float) -> bool:
        return 0.5 ** (t / self.half_life) <= self.floor


def pace(p: PaceFunction, t: float) -> float:
    return p.value(t)


def scaled_pace(half_life_at_reference: float, floor: float, max_steps: int) -> PaceFunction:
    """Pace with the half-life rescaled from the reference run length."""
    return PaceFunction(half_life_at_reference * max_steps / REFERENCE_MAX_STEPS, floor)


def survivor_count(ratio: float, n: int) -> int:
    """ceil(ratio * n), guarded against decimal ratios that are not exact
    doubles (0.1 * 10000 must keep 1000, not 1001)."""
    if n <= 0:
        raise DataError("selection over an empty dataset")
    k = math.ceil(ratio * n - 1e-9)
    return min(n, max(1, k))


def _scores_for(ids: np.ndarray, scores) -> np.ndarray:
    if isinstance(scores, np.ndarray):
        return scores[ids].astype(np.float64)
    return np.array([scores[int(i)] for i in ids], dtype=np.float64)


def _top_ids(ids: np.ndarray, values: np.ndarray, k: int) -> np.ndarray:
    """Top-k ids by value, score ties broken toward the lower id."""
    order = np.lexsort((ids, -values))
    return ids[order[:k]]


def select_top(t: float, ids: Sequence[int], scores, p: PaceFunction) -> frozenset[int]:
    """The ceil(pace(t) * N) highest-scoring ids."""
    arr = np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64)
    k = survivor_count(p.value(t), len(arr))
    return frozenset(int(i) for i in _top_ids(arr, _scores_for(arr, scores), k))


def cascade_select(
    t: float,
    ids: Sequence[int],
    denoise_scores,
    beta: PaceFunction,
    domain_scores,
    gamma: PaceFunction,
    swap: bool = False,
) -> frozenset[int]:
    """Nested selection: denoise stage at pace beta, then domain stage at
    pace gamma among the survivors.  ``swap`` nests in the other order
    (exposed for comparison; the two orders are not equivalent in general).
    """
    first, first_pace, second, second_pace = denoise_scores, beta, domain_scores, gamma
    if swap:
        first, first_pace, second, second_pace = domain_scores, gamma, denoise_scores, beta
    arr = np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64)
    k1 = survivor_count(first_pace.value(t), len(arr))
    stage1 = _top_ids(arr, _scores_for(arr, first), k1)
    k2 = survivor_count(second_pace.value(t), len(stage1))
    return frozenset(int(i) for i in _top_ids(stage1, _scores_for(stage1, second), k2))


def mix_score(domain_score_value: float, denoise_score_value: float) -> float:
    """Additive composition of the two scores."""
    return domain_score_value + denoise_score_value


def zscore(values: np.ndarray) -> np.ndarray:
    """Standardize over the current buffer; a constant vector maps to zeros."""
    std = float(values.std())
    if std == 0.0:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def select_fraction(scores: np.ndarray, ratio: float) -> np.ndarray:
    """Full-dataset top-ratio selection; ids ordered best-first."""
    scores = np.asarray(scores, dtype=np.float64)
    ids = np.arange(len(scores), dtype=np.int64)
    return _top_ids(ids, scores, survivor_count(ratio, len(ids)))


def cascade_fraction(
    denoise_scores: np.ndarray,
    domain_scores: np.ndarray,
    denoise_ratio: float,
    domain_ratio: float,
) -> np.ndarray:
    """Full-dataset nested selection at fixed ratios (late-curriculum set)."""
    stage1 = select_fraction(denoise_scores, denoise_ratio)
    domain_scores = np.asarray(domain_scores, dtype=np.float64)
    k2 = survivor_count(domain_ratio, len(stage1))
    return _top_ids(stage1, domain_scores[stage1], k2)


class WeightVector:
    """Uniform weights on a support set, zero elsewhere (sparse)."""

    def __init__(self, selected: Sequence[int], size: int):
        arr = np.unique(np.asarray(list(selected) if not isinstance(selected, np.ndarray) else selected, dtype=np.int64))
        if len(arr) == 0:
            raise DataError("weight vector needs a non-empty support")
        if len(arr) > size or (len(arr) and (arr[0] < 0 or arr[-1] >= size)):
            raise DataError("support ids out of range for the universe size")
        self.support_array = arr
        self.size = size

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in self.support_array)

    @property
    def uniform_weight(self) -> float:
        return 1.0 / len(self.support_array)

    def weight_of(self, idx: int) -> float:
        pos = np.searchsorted(self.support_array, idx)
        if pos < len(self.support_array) and self.support_array[pos] == idx:
            return self.uniform_weight
        return 0.0

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.size, dtype=np.float64)
        dense[self.support_array] = self.uniform_weight
        return dense

    def to_fractions(self) -> tuple[Fraction, ...]:
        """Exact rational form (the support is uniform by construction)."""
        w = Fraction(1, len(self.support_array))
        members = set(self.support)
        return tuple(w if i in members else Fraction(0) for i in range(self.size))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeightVector)
            and self.size == other.size
            and np.array_equal(self.support_array, other.support_array)
        )

    def __repr__(self) -> str:
        return f"WeightVector(support={self.support}, size={self.size})"


def weights(selected: Sequence[int], universe_size: int) -> WeightVector:
    return WeightVector(selected, universe_size)


def sample_batch(w: WeightVector, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """batch_size independent uniform draws (with replacement) from the support."""
    if batch_size < 0:
        raise DataError(f"batch_size must be >= 0, got {batch_size}")
    if batch_size == 0:
        return np.empty(0, dtype=np.int64)
    idx = rng.integers(0, len(w.support_array), size=batch_size)
    return w.support_array[idx]


@dataclass(frozen=True)
class CurriculumConfig:
    kind: str
    max_steps: int
    batch_size: int = 64
    buffer_size: int = 65536
    seed: int = 0
    lambda_pace: Optional[PaceFunction] = None
    beta_pace: Optional[PaceFunction] = None
    gamma_pace: Optional[PaceFunction] = None
    refill_fraction: float = 1.0
    mix_znorm: bool = False
    swap_cascade: bool = False

    def __post_init__(self):
        if self.kind not in CURRICULUM_KINDS:
            raise ConfigError(f"unknown curriculum kind {self.kind!r}")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0")
        if self.batch_size < 0:
            raise ConfigError("batch_size must be >= 0")
        if self.buffer_size < 1:
            raise ConfigError("buffer_size must be >= 1")
        if not 0.0 <= self.refill_fraction <= 1.0:
            raise ConfigError("refill_fraction must be in [0, 1]")
        if self.kind in ("domain", "denoise", "mix") and self.lambda_pace is None:
            raise ConfigError(f"kind {self.kind!r} needs lambda_pace")
        if self.kind == "cascade" and (self.beta_pace is None or self.gamma_pace is None):
            raise ConfigError("cascade needs beta_pace and gamma_pace")

    @staticmethod
    def with_default_paces(kind: str, max_steps: int, **kwargs) -> "CurriculumConfig":
        """Reference pace hyper-parameters, half-lives scaled to max_steps."""
        lam = scaled_pace(DOMAIN_HALF_LIFE, SINGLE_FLOOR, max_steps)
        beta = scaled_pace(DENOISE_HALF_LIFE, DENOISE_FLOOR, max_steps)
        gamma = scaled_pace(CASCADE_DOMAIN_HALF_LIFE, CASCADE_DOMAIN_FLOOR, max_steps)
        return CurriculumConfig(
            kind=kind,
            max_steps=max_steps,
            lambda_pace=None if kind == "random" else lam,
            beta_pace=beta if kind == "cascade" else None,
            gamma_pace=gamma if kind == "cascade" else None,
            **kwargs,
        )


@dataclass(frozen=True)
class StepRecord:
    step: int
    ratios: tuple[float, ...]
    n_selected: int
    at_floor: bool
    batch: np.ndarray


class Schedule:
    """Streaming curriculum over a dataset with frozen per-id score arrays.

    The buffer holds ``min(buffer_size, N)`` ids drawn from epoch-reshuffled
    permutations of the dataset; each step replaces ``refill_fraction`` of it
    (oldest first), selects survivors at the step's pace ratio(s), and samples
    one batch from the uniform re-weighting of the survivors.
    """

    def __init__(
        self,
        config: CurriculumConfig,
        n_examples: int,
        denoise: Optional[np.ndarray] = None,
        domain: Optional[np.ndarray] = None,
    ):
        if n_examples < 1:
            raise DataError("schedule needs a non-empty dataset")
        need_denoise = config.kind in ("denoise", "mix", "cascade")
        need_domain = config.kind in ("domain", "mix", "cascade")
        if need_denoise and denoise is None:
            raise ConfigError(f"kind {config.kind!r} needs denoise scores")
        if need_domain and domain is None:
            raise ConfigError(f"kind {config.kind!r} needs domain scores")
        for name, arr in (("denoise", denoise), ("domain", domain)):
            if arr is not None and len(arr) != n_examples:
                raise DataError(f"{name} scores cover {len(arr)} ids, dataset has {n_examples}")
        self.config = config
        self.n = n_examples
        self.denoise = None if denoise is None else np.asarray(denoise, dtype=np.float64)
        self.domain = None if domain is None else np.asarray(domain, dtype=np.float64)
        # global strict orders (score desc, id asc); rank position is reused
        # for every per-buffer selection so ties resolve identically everywhere
        all_ids = np.arange(n_examples, dtype=np.int64)
        self._rank_denoise = self._rank_of(all_ids, self.denoise)
        self._rank_domain = self._rank_of(all_ids, self.domain)
        stream_seq, sample_seq = np.random.SeedSequence(config.seed).spawn(2)
        self._rng_stream = np.random.default_rng(stream_seq)
        self._rng_sample = np.random.default_rng(sample_seq)
        self._buffer_cap = min(config.buffer_size, n_examples)
        self._buffer = np.empty(0, dtype=np.int64)
        self._epoch: Optional[np.ndarray] = None
        self._cursor = 0

    @staticmethod
    def _rank_of(ids: np.ndarray, scores: Optional[np.ndarray]) -> Optional[np.ndarray]:
        if scores is None:
            return None
        order = np.lexsort((ids, -scores))
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        return rank

    def _draw_stream(self, k: int) -> np.ndarray:
        out = np.empty(k, dtype=np.int64)
        pos = 0
        while pos < k:
            if self._epoch is None or self._cursor >= self.n:
                self._epoch = self._rng_stream.permutation(self.n)
                self._cursor = 0
            take = min(k - pos, self.n - self._cursor)
            out[pos : pos + take] = self._epoch[self._cursor : self._cursor + take]
            self._cursor += take
            pos += take
        return out

    def _draw_unique(self, k: int, taken: set[int]) -> list[int]:
        """k fresh ids not in ``taken``; epoch wrap can repeat ids, skip those."""
        fresh: list[int] = []
        while len(fresh) < k:
            for i in self._draw_stream(k - len(fresh)):
                i = int(i)
                if i not in taken:
                    taken.add(i)
                    fresh.append(i)
        return fresh

    def _refill(self):
        if len(self._buffer) == 0:
            self._buffer = np.array(self._draw_unique(self._buffer_cap, set()), dtype=np.int64)
            return
        k_new = int(round(self.config.refill_fraction * self._buffer_cap))
        if k_new <= 0:
            return
        kept = self._buffer[k_new:] if k_new < len(self._buffer) else self._buffer[:0]
        taken = {int(i) for i in kept}
        fresh = self._draw_unique(min(k_new, self._buffer_cap), taken)
        self._buffer = np.concatenate([kept, np.array(fresh, dtype=np.int64)])

    def _buffer_topk(self, members: np.ndarray, rank: np.ndarray, k: int) -> np.ndarray:
        order = np.argsort(rank[members], kind="stable")
        return members[order[:k]]

    def _select(self, t: int, members: np.ndarray) -> tuple[np.ndarray, tuple[float, ...]]:
        cfg = self.config
        if cfg.kind == "random":
            return members, (1.0,)
        if cfg.kind == "cascade":
            b = cfg.beta_pace.value(t)
            g = cfg.gamma_pace.value(t)
            if cfg.swap_cascade:
                k1 = survivor_count(g, len(members))
                stage1 = self._buffer_topk(members, self._rank_domain, k1)
                k2 = survivor_count(b, len(stage1))
                return self._buffer_topk(stage1, self._rank_denoise, k2), (b, g)
            k1 = survivor_count(b, len(members))
            stage1 = self._buffer_topk(members, self._rank_denoise, k1)
            k2 = survivor_count(g, len(stage1))
            return self._buffer_topk(stage1, self._rank_domain, k2), (b, g)
        ratio = cfg.lambda_pace.value(t)
        k = survivor_count(ratio, len(members))
        if cfg.kind == "domain":
            return self._buffer_topk(members, self._rank_domain, k), (ratio,)
        if cfg.kind == "denoise":
            return self._buffer_topk(members, self._rank_denoise, k), (ratio,)
        # mix: additive score, optionally standardized over the buffer
        d = self.domain[members]
        q = self.denoise[members]
        if cfg.mix_znorm:
            combined = zscore(d) + zscore(q)
        else:
            combined = d + q
        order = np.lexsort((members, -combined))
        return members[order[:k]], (ratio,)

    def at_floor(self, t: int) -> bool:
        cfg = self.config
        if cfg.kind == "random":
            return True
        if cfg.kind == "cascade":
            return cfg.beta_pace.at_floor(t) and cfg.gamma_pace.at_floor(t)
        return cfg.lambda_pace.at_floor(t)

    def step(self, t: int) -> StepRecord:
        self._refill()
        if len(self._buffer) < 1:
            raise DataError("buffer is empty after filtering")
        selected, ratios = self._select(t, self._buffer)
        w = WeightVector(selected, self.n)
        batch = sample_batch(w, self.config.batch_size, self._rng_sample)
        return StepRecord(t, ratios, len(w.support_array), self.at_floor(t), batch)

    def run(self, steps: Optional[int] = None) -> list[StepRecord]:
        total = self.config.max_steps if steps is None else steps
        return [self.step(t) for t in range(total)]

    def floor_sample_counts(self, steps: Optional[int] = None) -> dict[int, int]:
        """Multiset of ids sampled during the late phase (all paces at floor)."""
        counts: dict[int, int] = {}
        for rec in self.run(steps):
            if not rec.at_floor:
                continue
            for i in rec.batch:
                counts[int(i)] = counts.get(int(i), 0) + 1
        return counts


ScoreMap = Union[Mapping[int, float], np.ndarray]
