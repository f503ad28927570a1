"""Probabilistic similarity join over incomplete data streams."""

from ._joinids import (
    JoinIdsError,
    Workload,
    f1_score,
    generate,
    join_probability,
    metrics,
    run_join,
)

__all__ = [
    "JoinIdsError",
    "Workload",
    "f1_score",
    "generate",
    "join_probability",
    "metrics",
    "run_join",
]
