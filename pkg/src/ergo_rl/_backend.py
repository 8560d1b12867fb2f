"""Kernel backend selection.

The hot numeric kernels (Bellman backups, GBM path simulation) ship in two
variants: numba-jitted loops and vectorized pure numpy. The ERGO_RL_BACKEND
environment variable picks one at import time:

    ERGO_RL_BACKEND=numba   force numba (error if not importable)
    ERGO_RL_BACKEND=numpy   force the pure-numpy fallback

Unset, numba is used whenever it imports; NUMBA_DISABLE_JIT=1 also forces
the fallback. Both variants implement the same arithmetic; see
benchmarks/bench_backends.py for the speed comparison.
"""

from __future__ import annotations

import os

ENV_FLAG = "ERGO_RL_BACKEND"


def _pick_backend() -> str:
    choice = os.environ.get(ENV_FLAG, "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(f"{ENV_FLAG} must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numpy":
        return "numpy"
    if os.environ.get("NUMBA_DISABLE_JIT", "").strip() == "1":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise ImportError(f"{ENV_FLAG}=numba requested but numba is not importable")
        return "numpy"
    return "numba"


BACKEND = _pick_backend()
USING_NUMBA = BACKEND == "numba"
