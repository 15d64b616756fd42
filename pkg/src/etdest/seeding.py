"""Deterministic derivation of per-sensor random streams."""

from __future__ import annotations

import numpy as np

__all__ = ["sensor_streams"]


def sensor_streams(seed, run_index: int, n_sensors: int) -> list[np.random.Generator]:
    """One generator per sensor, keyed by ``(run_index, sensor)``.

    Every stream depends only on the master seed and its own key, so
    adding more runs or sensors, changing worker counts, or reordering
    execution never changes the draws an existing pair sees. A ``None``
    seed picks fresh OS entropy (not reproducible, by request).
    """
    if run_index < 0:
        raise ValueError("run_index must be non-negative")
    if n_sensors < 1:
        raise ValueError("need at least one sensor")
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
    else:
        entropy = np.random.SeedSequence(seed).entropy
    return [
        np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(run_index, i)))
        for i in range(n_sensors)
    ]
