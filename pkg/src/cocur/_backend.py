"""Kernel backend selection and worker-count policy.

The compiled extension is preferred when importable; COCUR_PURE=1 forces the
numpy fallback.  COCUR_THREADS caps worker parallelism (0 or unset =
sequential reference mode).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("COCUR_PURE") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py


def backend_name() -> str:
    return kernels.NAME


def worker_count() -> int:
    raw = os.environ.get("COCUR_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return max(n, 0)


def chunk_bounds(n: int, workers: int) -> list[tuple[int, int]]:
    """Even partition of range(n); reduction over chunks must stay in order."""
    w = max(1, min(workers, n)) if n > 0 else 1
    return [(n * i // w, n * (i + 1) // w) for i in range(w)]
