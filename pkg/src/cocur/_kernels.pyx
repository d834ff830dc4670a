# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for lexical translation model training/scoring.

Semantics match cocur._kernels_py exactly; see that module for the contract.
The GIL is released so chunks can run on real threads.
"""

from libc.math cimport log

NAME = "cython"


def em_accumulate(double[:, ::1] ttable,
                  int[::1] src_tok, long long[::1] src_off,
                  int[::1] tgt_tok, long long[::1] tgt_off,
                  double[::1] weights,
                  double[:, ::1] counts,
                  Py_ssize_t start, Py_ssize_t end):
    cdef double loglik = 0.0
    cdef Py_ssize_t p, i, j, xs, xe, ys, ye, f
    cdef double w, denom, inc
    with nogil:
        for p in range(start, end):
            w = weights[p]
            xs = src_off[p]
            xe = src_off[p + 1]
            ys = tgt_off[p]
            ye = tgt_off[p + 1]
            for j in range(ys, ye):
                f = tgt_tok[j]
                denom = ttable[0, f]
                for i in range(xs, xe):
                    denom += ttable[src_tok[i] + 1, f]
                loglik += w * (log(denom) - log(<double>(xe - xs + 1)))
                inc = w / denom
                counts[0, f] += ttable[0, f] * inc
                for i in range(xs, xe):
                    counts[src_tok[i] + 1, f] += ttable[src_tok[i] + 1, f] * inc
    return loglik


def score_pairs(double[:, ::1] ttable,
                int[::1] src_tok, long long[::1] src_off,
                int[::1] tgt_tok, long long[::1] tgt_off,
                double[::1] out,
                Py_ssize_t start, Py_ssize_t end):
    cdef Py_ssize_t p, i, j, xs, xe, ys, ye, f
    cdef double denom, total
    with nogil:
        for p in range(start, end):
            xs = src_off[p]
            xe = src_off[p + 1]
            ys = tgt_off[p]
            ye = tgt_off[p + 1]
            total = 0.0
            for j in range(ys, ye):
                f = tgt_tok[j]
                denom = ttable[0, f]
                for i in range(xs, xe):
                    denom += ttable[src_tok[i] + 1, f]
                total += log(denom) - log(<double>(xe - xs + 1))
            out[p] = total
