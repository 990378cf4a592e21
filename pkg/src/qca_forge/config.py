"""Process-wide knobs: worker-thread cap and default computation budgets."""

from __future__ import annotations

import os

DEFAULT_REDUCTION_BUDGET = 2_000_000
DEFAULT_B_MAX = 64
DEFAULT_DEGREE_CAP = 8
ORACLE_QUBIT_CAP = 20_000

_threads: int | None = None


def max_threads() -> int:
    """Worker-thread cap: --threads flag, else QCA_FORGE_THREADS, else 1."""
    if _threads is not None:
        return _threads
    env = os.environ.get("QCA_FORGE_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def set_max_threads(n: int | None) -> None:
    global _threads
    _threads = None if n is None else max(1, int(n))
