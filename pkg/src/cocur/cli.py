"""Subcommand front end.

Every command takes ``--config`` (flat key=value file), ``--out`` (run
directory), optional ``--seed`` and repeatable ``--set key=value`` overrides,
and echoes the fully resolved configuration into ``<out>/resolved_config``.
Run directories use a fixed layout: ``models/``, ``logs/``, ``reports/``.

Exit codes: 0 success, 1 data/config error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_io
from .config import RunConfig, load_config
from .corpus import Corpus, attach_labels, load_mono, load_parallel
from .diagnostics import (
    domain_relevance_curve,
    loss_stddev_curve,
    perword_loss_curve,
    score_auc,
    selection_quality,
    write_curves_csv,
)
from .em import EmConfig, em_iterate, gen_curriculum, init_em, write_metrics_csv
from .errors import CocurError, ConfigError
from .model1 import (
    DenoiseScorer,
    denoise_scores,
    finetune_model1,
    load_model1,
    save_model1,
    train_model1,
)
from .ngram import DomainScorer, domain_scores, load_ngram, save_ngram, train_domain_scorer
from .schedule import (
    CASCADE_DOMAIN_FLOOR,
    CASCADE_DOMAIN_HALF_LIFE,
    DENOISE_FLOOR,
    DENOISE_HALF_LIFE,
    DOMAIN_HALF_LIFE,
    SINGLE_FLOOR,
    CurriculumConfig,
    PaceFunction,
    Schedule,
    cascade_fraction,
    select_fraction,
    zscore,
)
from .synth import SynthConfig, gen_synthetic

COMMANDS = ("synth", "train-lm", "train-tm", "score", "select", "run", "em-optimize", "report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cocur", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key=value configuration file")
        sp.add_argument("--out", required=True, help="run directory for all outputs")
        sp.add_argument("--seed", type=int, help="override the seed config key")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a single config key (repeatable)")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        cfg.set_raw(key.strip(), raw)
    if args.seed is not None:
        cfg.set("seed", args.seed)
    return cfg


def _require(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if not cfg[k]]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")


def _out_dirs(out) -> Path:
    out = Path(out)
    for sub in ("models", "logs", "reports"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    return out


def _max_len(cfg) -> int | None:
    return cfg["max_len"] or None


def _load_background(cfg, with_labels: bool = False) -> Corpus:
    _require(cfg, "background_source", "background_target")
    corpus = load_parallel(cfg["background_source"], cfg["background_target"], cfg["lowercase"], _max_len(cfg))
    if with_labels and cfg["background_labels"]:
        corpus = attach_labels(corpus, cfg["background_labels"])
    return corpus


def _pace(cfg, which: str, max_steps: int) -> PaceFunction:
    reference = {"lambda": DOMAIN_HALF_LIFE, "beta": DENOISE_HALF_LIFE, "gamma": CASCADE_DOMAIN_HALF_LIFE}[which]
    half_life = cfg[f"half_life_{which}"]
    if half_life <= 0:
        half_life = reference * max_steps / 3_000_000
    return PaceFunction(half_life, cfg[f"floor_{which}"])


def _curriculum_config(cfg) -> CurriculumConfig:
    kind = cfg["kind"]
    steps = cfg["max_steps"]
    return CurriculumConfig(
        kind=kind,
        max_steps=steps,
        batch_size=cfg["batch_size"],
        buffer_size=cfg["buffer_size"],
        seed=cfg["seed"],
        lambda_pace=None if kind in ("random", "cascade") else _pace(cfg, "lambda", steps),
        beta_pace=_pace(cfg, "beta", steps) if kind == "cascade" else None,
        gamma_pace=_pace(cfg, "gamma", steps) if kind == "cascade" else None,
        refill_fraction=cfg["refill_fraction"],
        mix_znorm=cfg["mix_znorm"],
        swap_cascade=cfg["swap_cascade"],
    )


def _em_config(cfg) -> EmConfig:
    return EmConfig(
        iterations=cfg["em_iterations"],
        em_steps=cfg["em_steps"],
        kind=cfg["kind"],
        batch_size=cfg["batch_size"],
        buffer_size=cfg["buffer_size"],
        seed=cfg["seed"],
        tm_iterations=cfg["tm_iterations"],
        finetune_iterations=cfg["tm_finetune_iterations"],
        blend=cfg["tm_blend"],
        epsilon_floor=cfg["tm_epsilon_floor"],
        lm_order=cfg["lm_order"],
        lm_weights=cfg["lm_weights"],
        lm_alpha=cfg["lm_alpha"],
        lm_mu=cfg["lm_mu"],
        mix_znorm=cfg["mix_znorm"],
    )


def _train_domain_scorer(cfg, background: Corpus) -> DomainScorer:
    _require(cfg, "indomain_source")
    mono = load_mono(cfg["indomain_source"], cfg["lowercase"], _max_len(cfg))
    return train_domain_scorer(
        background, mono,
        order=cfg["lm_order"], interpolation_weights=cfg["lm_weights"],
        unigram_alpha=cfg["lm_alpha"], mu=cfg["lm_mu"], min_count=cfg["vocab_min_count"],
    )


def _train_denoise_scorer(cfg, background: Corpus) -> DenoiseScorer:
    _require(cfg, "trusted_source", "trusted_target")
    trusted = load_parallel(cfg["trusted_source"], cfg["trusted_target"], cfg["lowercase"], _max_len(cfg))
    noisy = train_model1(background, cfg["tm_iterations"], cfg["tm_epsilon_floor"])
    clean = finetune_model1(noisy, trusted, cfg["tm_finetune_iterations"], cfg["tm_blend"])
    return DenoiseScorer(noisy, clean)


def _load_domain_scorer(cfg) -> DomainScorer:
    _require(cfg, "domain_general_model", "domain_indomain_model")
    return DomainScorer(load_ngram(cfg["domain_general_model"]), load_ngram(cfg["domain_indomain_model"]))


def _load_denoise_scorer(cfg) -> DenoiseScorer:
    _require(cfg, "tm_noisy_model", "tm_clean_model")
    return DenoiseScorer(load_model1(cfg["tm_noisy_model"]), load_model1(cfg["tm_clean_model"]))


def cmd_synth(cfg, out: Path) -> None:
    synth_cfg = SynthConfig(
        n_pairs=cfg["synth_pairs"],
        indomain_fraction=cfg["synth_indomain_fraction"],
        noise_fraction=cfg["synth_noise_fraction"],
        vocab_size=cfg["synth_vocab_size"],
        overlap_fraction=cfg["synth_overlap_fraction"],
        head_size=cfg["synth_head_size"],
        len_min=cfg["synth_len_min"],
        len_max=cfg["synth_len_max"],
        noise_mix=tuple(cfg["synth_noise_mix"]),
        zipf_exponent=cfg["synth_zipf_exponent"],
        mono_pairs=cfg["synth_mono_pairs"],
        trusted_pairs=cfg["synth_trusted_pairs"],
        heldout_pairs=cfg["synth_heldout_pairs"],
        seed=cfg["seed"],
    )
    background, mono, trusted, heldout = gen_synthetic(synth_cfg)
    corpus_io.write_corpus(background, out / "background.src", out / "background.tgt")
    corpus_io.write_labels(background, out / "background.labels.tsv")
    corpus_io.write_corpus(mono, out / "indomain.src")
    corpus_io.write_corpus(trusted, out / "trusted.src", out / "trusted.tgt")
    corpus_io.write_corpus(heldout, out / "heldout.src", out / "heldout.tgt")


def cmd_train_lm(cfg, out: Path) -> None:
    _require(cfg, "background_source")
    general_mono = load_mono(cfg["background_source"], cfg["lowercase"], _max_len(cfg))
    _require(cfg, "indomain_source")
    indomain_mono = load_mono(cfg["indomain_source"], cfg["lowercase"], _max_len(cfg))
    scorer = train_domain_scorer(
        general_mono, indomain_mono,
        order=cfg["lm_order"], interpolation_weights=cfg["lm_weights"],
        unigram_alpha=cfg["lm_alpha"], mu=cfg["lm_mu"], min_count=cfg["vocab_min_count"],
    )
    save_ngram(scorer.general, out / "models" / "general.lm")
    save_ngram(scorer.indomain, out / "models" / "indomain.lm")


def cmd_train_tm(cfg, out: Path) -> None:
    background = _load_background(cfg)
    noisy = train_model1(background, cfg["tm_iterations"], cfg["tm_epsilon_floor"])
    save_model1(noisy, out / "models" / "noisy.m1")
    if cfg["trusted_source"] and cfg["trusted_target"]:
        trusted = load_parallel(cfg["trusted_source"], cfg["trusted_target"], cfg["lowercase"], _max_len(cfg))
        clean = finetune_model1(noisy, trusted, cfg["tm_finetune_iterations"], cfg["tm_blend"])
        save_model1(clean, out / "models" / "clean.m1")


def cmd_score(cfg, out: Path) -> None:
    which = cfg["score_which"]
    if which not in ("domain", "denoise", "both"):
        raise ConfigError(f"score_which must be domain|denoise|both, got {which!r}")
    background = _load_background(cfg)
    columns = ["id"]
    values = []
    if which in ("domain", "both"):
        scorer = _load_domain_scorer(cfg)
        values.append(domain_scores(scorer, background))
        columns.append("domain")
    if which in ("denoise", "both"):
        scorer = _load_denoise_scorer(cfg)
        values.append(denoise_scores(scorer, background))
        columns.append("denoise")
    with open(out / "scores.tsv", "w", encoding="utf-8") as fh:
        for i in range(len(background)):
            fields = [str(i)] + [repr(float(col[i])) for col in values]
            fh.write("\t".join(fields) + "\n")


def _schedule_scores(cfg, background: Corpus, load_models: bool) -> tuple:
    """(denoise array or None, domain array or None) per the configured kind."""
    kind = cfg["kind"]
    denoise = domain = None
    if kind in ("domain", "mix", "cascade"):
        scorer = _load_domain_scorer(cfg) if load_models else _train_domain_scorer(cfg, background)
        domain = domain_scores(scorer, background)
    if kind in ("denoise", "mix", "cascade"):
        scorer = _load_denoise_scorer(cfg) if load_models else _train_denoise_scorer(cfg, background)
        denoise = denoise_scores(scorer, background)
    return denoise, domain


def cmd_select(cfg, out: Path) -> None:
    background = _load_background(cfg)
    denoise, domain = _schedule_scores(cfg, background, load_models=True)
    steps = cfg["max_steps"]
    checkpoints = cfg["checkpoints"] or tuple(steps * i // 4 for i in range(5))
    kind = cfg["kind"]
    n = len(background)
    for t in checkpoints:
        if kind == "random":
            kept = np.arange(n, dtype=np.int64)
        elif kind == "cascade":
            beta, gamma = _pace(cfg, "beta", steps), _pace(cfg, "gamma", steps)
            kept = cascade_fraction(denoise, domain, beta.value(t), gamma.value(t))
        else:
            ratio = _pace(cfg, "lambda", steps).value(t)
            if kind == "domain":
                kept = select_fraction(domain, ratio)
            elif kind == "denoise":
                kept = select_fraction(denoise, ratio)
            else:
                combined = (zscore(domain) + zscore(denoise)) if cfg["mix_znorm"] else domain + denoise
                kept = select_fraction(combined, ratio)
        with open(out / "logs" / f"selected_step{t:06d}.txt", "w", encoding="utf-8") as fh:
            for i in sorted(int(v) for v in kept):
                fh.write(f"{i}\n")


def _write_batch_log(records, kind: str, path) -> None:
    cascade = kind == "cascade"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,beta_ratio,gamma_ratio,batch_ids\n" if cascade else "step,ratio,batch_ids\n")
        for rec in records:
            ratios = ",".join(repr(r) for r in rec.ratios)
            ids = " ".join(str(int(i)) for i in rec.batch)
            fh.write(f"{rec.step},{ratios},{ids}\n")


def cmd_run(cfg, out: Path) -> None:
    background = _load_background(cfg, with_labels=True)
    kind = cfg["kind"]
    denoise = domain = None
    if kind in ("domain", "mix", "cascade"):
        scorer = _train_domain_scorer(cfg, background)
        save_ngram(scorer.general, out / "models" / "general.lm")
        save_ngram(scorer.indomain, out / "models" / "indomain.lm")
        domain = domain_scores(scorer, background)
    if kind in ("denoise", "mix", "cascade"):
        scorer = _train_denoise_scorer(cfg, background)
        save_model1(scorer.noisy, out / "models" / "noisy.m1")
        save_model1(scorer.clean, out / "models" / "clean.m1")
        denoise = denoise_scores(scorer, background)
    schedule = Schedule(_curriculum_config(cfg), len(background), denoise=denoise, domain=domain)
    records = schedule.run()
    _write_batch_log(records, kind, out / "logs" / "batches.csv")


def cmd_em_optimize(cfg, out: Path) -> None:
    background = _load_background(cfg, with_labels=True)
    _require(cfg, "indomain_source", "trusted_source", "trusted_target")
    mono = load_mono(cfg["indomain_source"], cfg["lowercase"], _max_len(cfg))
    trusted = load_parallel(cfg["trusted_source"], cfg["trusted_target"], cfg["lowercase"], _max_len(cfg))
    heldout = None
    if cfg["heldout_source"] and cfg["heldout_target"]:
        heldout = load_parallel(cfg["heldout_source"], cfg["heldout_target"], cfg["lowercase"], _max_len(cfg))
    em_cfg = _em_config(cfg)
    state = init_em(background, mono, trusted, em_cfg, heldout)
    save_model1(state.noisy_tm, out / "models" / "noisy.m1")
    save_ngram(state.domain_scorer.general, out / "models" / "general.lm")
    save_ngram(state.domain_scorer.indomain, out / "models" / "indomain.lm")
    save_model1(state.clean_tm, out / "models" / "clean_iter0.m1")
    for _ in range(em_cfg.iterations):
        state = em_iterate(state, em_cfg)
        save_model1(state.clean_tm, out / "models" / f"clean_iter{state.iteration}.m1")
    write_metrics_csv(state.history, out / "logs" / "metrics.csv")
    final_schedule = gen_curriculum(state, em_cfg)
    records = final_schedule.run()
    _write_batch_log(records, em_cfg.kind, out / "logs" / "final_batches.csv")


def cmd_report(cfg, out: Path) -> None:
    background = _load_background(cfg, with_labels=True)
    domain_scorer = _load_domain_scorer(cfg)
    denoise_scorer = _load_denoise_scorer(cfg)
    domain = domain_scores(domain_scorer, background)
    denoise = denoise_scores(denoise_scorer, background)
    rng = np.random.default_rng(cfg["seed"])
    random_scores = rng.random(len(background))
    # per-word loss statistics come from the noisy scorer component
    curves = [
        perword_loss_curve(denoise_scorer.noisy, background, denoise, label="perword_loss_by_denoise"),
        loss_stddev_curve(denoise_scorer.noisy, background, denoise, label="loss_stddev_by_denoise"),
        domain_relevance_curve(domain_scorer, background, domain, label="relevance_by_domain"),
        domain_relevance_curve(domain_scorer, background, random_scores, label="relevance_by_random"),
    ]
    write_curves_csv(curves, out / "reports" / "curves.csv")
    if background.labeled:
        labels_clean = [p.labels.clean for p in background]
        labels_id = [p.labels.in_domain for p in background]
        rows = [
            ("domain_auc", score_auc(domain, labels_id)),
            ("denoise_auc", score_auc(denoise, labels_clean)),
        ]
        selections = {
            "random": select_fraction(random_scores, SINGLE_FLOOR),
            "domain": select_fraction(domain, SINGLE_FLOOR),
            "denoise": select_fraction(denoise, SINGLE_FLOOR),
            "mix": select_fraction(domain + denoise, SINGLE_FLOOR),
            "cascade": cascade_fraction(denoise, domain, DENOISE_FLOOR, CASCADE_DOMAIN_FLOOR),
        }
        for name, kept in selections.items():
            quality = selection_quality(kept, background)
            for metric, value in quality.items():
                rows.append((f"{name}_{metric}", value))
        with open(out / "reports" / "quality.csv", "w", encoding="utf-8") as fh:
            fh.write("name,value\n")
            for name, value in rows:
                fh.write(f"{name},{value!r}\n")


_DISPATCH = {
    "synth": cmd_synth,
    "train-lm": cmd_train_lm,
    "train-tm": cmd_train_tm,
    "score": cmd_score,
    "select": cmd_select,
    "run": cmd_run,
    "em-optimize": cmd_em_optimize,
    "report": cmd_report,
}


def main(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = _resolve_config(args)
        out = _out_dirs(args.out)
        cfg.write_resolved(out)
        _DISPATCH[args.command](cfg, out)
    except CocurError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def console_main() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    console_main()
