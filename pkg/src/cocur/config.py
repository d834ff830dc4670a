"""Flat ``key = value`` run configuration.

Every key has a documented default; unknown keys are hard errors; the fully
resolved mapping is echoed into each run directory as ``resolved_config``
so any run can be reproduced from that file plus the seed.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from .errors import ConfigError

# name -> (type tag, default, help)
SCHEMA: dict[str, tuple[str, Any, str]] = {
    "seed": ("int", 0, "master RNG seed for the run"),
    "lowercase": ("bool", True, "lowercase during tokenization"),
    "max_len": ("int", 0, "drop pairs with a side longer than this (0 = no cap)"),
    "vocab_min_count": ("int", 1, "minimum token frequency for a vocabulary entry"),
    "background_source": ("str", "", "background parallel corpus, source side"),
    "background_target": ("str", "", "background parallel corpus, target side"),
    "background_labels": ("str", "", "optional labels TSV for the background corpus"),
    "indomain_source": ("str", "", "in-domain monolingual corpus (source language)"),
    "trusted_source": ("str", "", "trusted out-of-domain parallel corpus, source side"),
    "trusted_target": ("str", "", "trusted out-of-domain parallel corpus, target side"),
    "heldout_source": ("str", "", "held-out trusted corpus, source side"),
    "heldout_target": ("str", "", "held-out trusted corpus, target side"),
    "lm_order": ("int", 3, "n-gram order of the language models"),
    "lm_weights": ("floats", (0.5, 0.3, 0.2), "interpolation weights, highest order first"),
    "lm_alpha": ("float", 0.1, "add-alpha smoothing for the unigram level"),
    "lm_mu": ("float", 0.9, "in-domain weight when blending the in-domain unigram"),
    "tm_iterations": ("int", 5, "EM iterations for the noisy translation model"),
    "tm_finetune_iterations": ("int", 3, "EM iterations when fine-tuning on trusted data"),
    "tm_blend": ("float", 0.5, "weight of the trusted estimate in fine-tuning"),
    "tm_epsilon_floor": ("float", 1e-9, "probability floor applied after the final M-step"),
    "kind": ("str", "cascade", "curriculum kind: random|domain|denoise|mix|cascade"),
    "max_steps": ("int", 2000, "schedule length T"),
    "batch_size": ("int", 64, "examples sampled per step"),
    "buffer_size": ("int", 65536, "streaming buffer size (capped at the dataset size)"),
    "refill_fraction": ("float", 1.0, "fraction of the buffer replaced per step"),
    "mix_znorm": ("bool", False, "standardize both scores over the buffer before adding"),
    "swap_cascade": ("bool", False, "nest domain selection before denoise selection"),
    "half_life_lambda": ("float", 0.0, "single-curriculum pace half-life (0 = 400k scaled by T/3M)"),
    "half_life_beta": ("float", 0.0, "cascade denoise pace half-life (0 = 400k scaled by T/3M)"),
    "half_life_gamma": ("float", 0.0, "cascade domain pace half-life (0 = 900k scaled by T/3M)"),
    "floor_lambda": ("float", 0.1, "single-curriculum pace floor"),
    "floor_beta": ("float", 0.2, "cascade denoise pace floor"),
    "floor_gamma": ("float", 0.5, "cascade domain pace floor"),
    "checkpoints": ("ints", (), "steps at which `select` writes retained-id lists (empty = quartiles of T)"),
    "em_iterations": ("int", 3, "co-curriculum refinement iterations"),
    "em_steps": ("int", 2000, "schedule steps run per refinement iteration"),
    "synth_pairs": ("int", 20000, "background pairs to generate"),
    "synth_indomain_fraction": ("float", 0.5, "fraction of in-domain background pairs"),
    "synth_noise_fraction": ("float", 0.3, "fraction of corrupted background pairs"),
    "synth_vocab_size": ("int", 400, "source vocabulary size per domain"),
    "synth_overlap_fraction": ("float", 0.9, "fraction of each domain vocabulary that is shared"),
    "synth_head_size": ("int", 50, "exclusive high-frequency tokens per domain"),
    "synth_len_min": ("int", 4, "minimum sentence length"),
    "synth_len_max": ("int", 12, "maximum sentence length"),
    "synth_noise_mix": ("floats", (1.0, 0.0, 0.0), "weights over misalign,shuffle,truncate"),
    "synth_zipf_exponent": ("float", 1.0, "Zipf exponent of the domain unigram distributions"),
    "synth_mono_pairs": ("int", 3000, "in-domain monolingual sentences"),
    "synth_trusted_pairs": ("int", 1000, "trusted out-of-domain pairs"),
    "synth_heldout_pairs": ("int", 1000, "held-out trusted pairs"),
    "score_which": ("str", "both", "scores emitted by `score`: domain|denoise|both"),
    "domain_general_model": ("str", "", "path to the general-domain LM file"),
    "domain_indomain_model": ("str", "", "path to the in-domain LM file"),
    "tm_noisy_model": ("str", "", "path to the noisy translation model file"),
    "tm_clean_model": ("str", "", "path to the clean translation model file"),
}


def _parse_value(key: str, raw: str) -> Any:
    tag = SCHEMA[key][0]
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if tag == "floats":
            return tuple(float(v) for v in raw.split(",") if v.strip()) if raw else ()
        if tag == "ints":
            return tuple(int(v) for v in raw.split(",") if v.strip()) if raw else ()
        return raw
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {tag}") from exc


def _format_value(key: str, value: Any) -> str:
    tag = SCHEMA[key][0]
    if tag == "bool":
        return "true" if value else "false"
    if tag in ("floats", "ints"):
        return ",".join(repr(v) if tag == "floats" else str(v) for v in value)
    if tag == "float":
        return repr(value)
    return str(value)


class RunConfig:
    def __init__(self, overrides: dict[str, Any] | None = None):
        self._values = {k: default for k, (_, default, _) in SCHEMA.items()}
        for k, v in (overrides or {}).items():
            self.set(k, v)

    def set(self, key: str, value: Any) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        self._values[key] = value

    def set_raw(self, key: str, raw: str) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        self._values[key] = _parse_value(key, raw)

    def __getitem__(self, key: str) -> Any:
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def items(self):
        return self._values.items()

    def dump(self) -> str:
        lines = [f"{k} = {_format_value(k, self._values[k])}" for k in sorted(self._values)]
        return "\n".join(lines) + "\n"

    def write_resolved(self, out_dir) -> None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "resolved_config").write_text(self.dump(), encoding="utf-8")


def load_config(path) -> RunConfig:
    cfg = RunConfig()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        cfg.set_raw(key.strip(), raw)
    return cfg
