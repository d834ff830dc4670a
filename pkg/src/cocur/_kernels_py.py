"""Pure-Python (numpy) kernels for lexical translation model training/scoring.

This is the fallback backend; ``cocur._kernels`` is the compiled twin with
identical semantics.  Both operate on flat token/offset encodings and a dense
translation table whose row 0 is the NULL source token (source token id e
occupies row e + 1).
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"


def em_accumulate(ttable, src_tok, src_off, tgt_tok, tgt_off, weights, counts, start, end):
    """Accumulate fractional alignment counts for pairs [start, end).

    Returns the (weighted) log-likelihood of those pairs under ``ttable``:
    sum over target tokens of ln(mean over source slots of t(f|e)).
    """
    loglik = 0.0
    for p in range(start, end):
        w = weights[p]
        x = src_tok[src_off[p] : src_off[p + 1]]
        y = tgt_tok[tgt_off[p] : tgt_off[p + 1]]
        if len(y) == 0:
            continue
        rows = np.empty(len(x) + 1, dtype=np.int64)
        rows[0] = 0
        rows[1:] = x.astype(np.int64) + 1
        block = ttable[rows[:, None], y[None, :].astype(np.int64)]
        denom = block.sum(axis=0)
        loglik += w * (float(np.log(denom).sum()) - len(y) * math.log(len(x) + 1))
        np.add.at(counts, (rows[:, None], y[None, :].astype(np.int64)), block * (w / denom))
    return loglik


def score_pairs(ttable, src_tok, src_off, tgt_tok, tgt_off, out, start, end):
    """Per-pair Model 1 log-likelihood ln P(y|x) for pairs [start, end)."""
    for p in range(start, end):
        x = src_tok[src_off[p] : src_off[p + 1]]
        y = tgt_tok[tgt_off[p] : tgt_off[p + 1]]
        if len(y) == 0:
            out[p] = 0.0
            continue
        rows = np.empty(len(x) + 1, dtype=np.int64)
        rows[0] = 0
        rows[1:] = x.astype(np.int64) + 1
        denom = ttable[rows[:, None], y[None, :].astype(np.int64)].sum(axis=0)
        out[p] = float(np.log(denom).sum()) - len(y) * math.log(len(x) + 1)
