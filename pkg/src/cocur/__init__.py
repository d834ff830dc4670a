"""Co-curricular data selection for noisy parallel corpora.

Composes a dynamic domain curriculum (cross-entropy-difference scoring) with
a dynamic denoising curriculum (translation-model scoring) into mixed or
cascaded co-curricula, samples training batches from the surviving examples,
and refines the denoising scorer with an EM-style bootstrap.
"""

from ._backend import backend_name, worker_count
from .corpus import Corpus, SentencePair, Vocab, build_vocab, load_mono, load_parallel, tokenize
from .errors import CocurError, ConfigError, DataError
from .model1 import (
    DenoiseScorer,
    Model1,
    denoise_score,
    denoise_scores,
    finetune_model1,
    tm_logprob,
    train_model1,
)
from .ngram import DomainScorer, NgramLm, domain_score, domain_scores, lm_logprob, train_ngram
from .schedule import (
    CurriculumConfig,
    PaceFunction,
    Schedule,
    WeightVector,
    cascade_select,
    mix_score,
    pace,
    sample_batch,
    select_top,
    weights,
)
from .synth import SynthConfig, corrupt_pair, gen_synthetic

__version__ = "0.1.0"
