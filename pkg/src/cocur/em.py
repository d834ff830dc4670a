"""EM-style co-curriculum refinement.

Iteration 0 trains the scorers: a domain scorer from the background source
side plus in-domain monolingual text, a noisy translation model on the full
background corpus, and a clean model fine-tuned from it on trusted parallel
data.  Each subsequent iteration regenerates the co-curriculum with the
current scorers, collects the multiset of pairs sampled while every pace sits
at its floor (the curriculum's stationary distribution), fine-tunes the
original noisy model on that weighted multiset, and swaps the result in as
the new clean component.  The noisy model and the domain scorer never change.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .corpus import Corpus
from .diagnostics import selection_quality
from .errors import ConfigError, DataError
from .model1 import DenoiseScorer, Model1, denoise_scores, finetune_model1, perword_loglik, train_model1
from .ngram import DomainScorer, domain_scores, train_domain_scorer
from .schedule import (
    CASCADE_DOMAIN_FLOOR,
    DENOISE_FLOOR,
    SINGLE_FLOOR,
    CurriculumConfig,
    Schedule,
    cascade_fraction,
    select_fraction,
    zscore,
)


@dataclass(frozen=True)
class EmConfig:
    iterations: int = 3
    em_steps: int = 2000
    kind: str = "cascade"
    batch_size: int = 64
    buffer_size: int = 65536
    seed: int = 0
    tm_iterations: int = 5
    finetune_iterations: int = 3
    blend: float = 0.5
    epsilon_floor: float = 1e-9
    lm_order: int = 3
    lm_weights: tuple[float, ...] = (0.5, 0.3, 0.2)
    lm_alpha: float = 0.1
    lm_mu: float = 0.9
    mix_znorm: bool = False

    def __post_init__(self):
        if self.kind not in ("cascade", "mix"):
            raise ConfigError(f"the co-curriculum loop supports kinds cascade/mix, got {self.kind!r}")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")


@dataclass(frozen=True)
class EmRecord:
    iteration: int
    heldout_loglik: float
    clean_precision: float
    indomain_precision: float
    joint_precision: float


@dataclass(frozen=True)
class EmState:
    iteration: int
    noisy_tm: Model1
    clean_tm: Model1
    domain_scorer: DomainScorer
    background: Corpus
    heldout: Corpus
    domain_score_cache: np.ndarray
    history: tuple[EmRecord, ...]


def _floor_co_selection(config: EmConfig, denoise: np.ndarray, domain: np.ndarray) -> np.ndarray:
    """Late-curriculum retained set at the floor ratios (effective top 10%)."""
    if config.kind == "cascade":
        return cascade_fraction(denoise, domain, DENOISE_FLOOR, CASCADE_DOMAIN_FLOOR)
    combined = (zscore(domain) + zscore(denoise)) if config.mix_znorm else domain + denoise
    return select_fraction(combined, SINGLE_FLOOR)


def _evaluate(state_iteration: int, clean_tm: Model1, config: EmConfig, noisy_tm: Model1,
              background: Corpus, heldout: Corpus, domain_cache: np.ndarray) -> EmRecord:
    ll = perword_loglik(clean_tm, heldout)
    if background.labeled:
        den = denoise_scores(DenoiseScorer(noisy_tm, clean_tm), background)
        quality = selection_quality(_floor_co_selection(config, den, domain_cache), background)
    else:
        quality = {"clean_precision": float("nan"), "indomain_precision": float("nan"), "joint_precision": float("nan")}
    return EmRecord(state_iteration, ll, quality["clean_precision"], quality["indomain_precision"], quality["joint_precision"])


def init_em(
    background: Corpus,
    indomain_mono: Corpus,
    trusted: Corpus,
    config: EmConfig,
    heldout: Optional[Corpus] = None,
) -> EmState:
    """Train the iteration-0 scorers and record their evaluation."""
    for name, c in (("background", background), ("indomain_mono", indomain_mono), ("trusted", trusted)):
        if len(c) == 0:
            raise DataError(f"{name} corpus is empty")
    heldout = heldout if heldout is not None else trusted
    scorer = train_domain_scorer(
        background, indomain_mono,
        order=config.lm_order, interpolation_weights=config.lm_weights,
        unigram_alpha=config.lm_alpha, mu=config.lm_mu,
    )
    noisy = train_model1(background, config.tm_iterations, config.epsilon_floor)
    clean = finetune_model1(noisy, trusted, config.finetune_iterations, config.blend)
    domain_cache = domain_scores(scorer, background)
    record = _evaluate(0, clean, config, noisy, background, heldout, domain_cache)
    return EmState(0, noisy, clean, scorer, background, heldout, domain_cache, (record,))


def _curriculum_config(config: EmConfig) -> CurriculumConfig:
    # one seed for every iteration: once the scorer ranking stabilizes the
    # sampled multiset (and hence the fine-tuned model) is an exact fixed point
    return CurriculumConfig.with_default_paces(
        config.kind,
        max_steps=config.em_steps,
        batch_size=config.batch_size,
        buffer_size=config.buffer_size,
        seed=config.seed,
        mix_znorm=config.mix_znorm,
    )


def gen_curriculum(state: EmState, config: EmConfig) -> Schedule:
    """Schedule whose denoise scores come from (noisy, current clean) and
    whose domain scores come from the frozen domain scorer."""
    den = denoise_scores(DenoiseScorer(state.noisy_tm, state.clean_tm), state.background)
    return Schedule(_curriculum_config(config), len(state.background), denoise=den, domain=state.domain_score_cache)


def em_iterate(state: EmState, config: EmConfig) -> EmState:
    """One generation + fine-tune cycle; only the clean component changes."""
    sched = gen_curriculum(state, config)
    counts = sched.floor_sample_counts(config.em_steps)
    if not counts:
        raise DataError("empty curriculum sample: no late-phase batches were collected")
    ids = sorted(counts)
    weights = [float(counts[i]) for i in ids]
    sampled = state.background.subset(ids)
    clean = finetune_model1(state.noisy_tm, sampled, config.finetune_iterations, config.blend, weights=weights)
    record = _evaluate(state.iteration + 1, clean, config, state.noisy_tm, state.background, state.heldout, state.domain_score_cache)
    return replace(state, iteration=state.iteration + 1, clean_tm=clean, history=state.history + (record,))


def run_em(
    background: Corpus,
    indomain_mono: Corpus,
    trusted: Corpus,
    config: EmConfig,
    heldout: Optional[Corpus] = None,
) -> tuple[EmState, Schedule]:
    """init_em followed by the configured number of iterations; returns the
    final state and the schedule generated from the final scorers."""
    state = init_em(background, indomain_mono, trusted, config, heldout)
    for _ in range(config.iterations):
        state = em_iterate(state, config)
    return state, gen_curriculum(state, config)


def write_metrics_csv(history, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,heldout_loglik,clean_precision,indomain_precision,joint_precision\n")
        for rec in history:
            fh.write(
                f"{rec.iteration},{rec.heldout_loglik!r},{rec.clean_precision!r},"
                f"{rec.indomain_precision!r},{rec.joint_precision!r}\n"
            )
