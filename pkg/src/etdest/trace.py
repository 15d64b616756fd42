"""Per-run recording shared by the event-triggered estimator and baselines.

A trace keeps the full-resolution scalar error series and the complete
broadcast log as (time, sensor) pairs; full estimate snapshots are only
stored at a configurable stride so long horizons with many nodes stay
cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TriggerEvent", "RunTrace"]


@dataclass(frozen=True)
class TriggerEvent:
    """One broadcast: sensor ``sensor`` sent ``estimate`` at round ``time``."""

    time: int
    sensor: int
    estimate: np.ndarray


@dataclass
class RunTrace:
    """Everything recorded during one simulated run.

    ``squared_error[t]`` is the squared network error
    ``sum_i ||x_i(t) - theta||**2`` for t = 0..horizon. Events are stored
    as parallel arrays sorted by round. ``child_counts`` snapshots the
    graph's out-degrees so communication rates can be computed without
    holding on to the graph itself.
    """

    horizon: int
    theta: np.ndarray
    squared_error: np.ndarray
    event_times: np.ndarray
    event_sensors: np.ndarray
    child_counts: np.ndarray
    initial_estimates: np.ndarray
    final_estimates: np.ndarray
    trigger_counts: np.ndarray
    max_trigger_slack: float
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    algorithm: str = "event-triggered"

    @property
    def n(self) -> int:
        return self.child_counts.shape[0]

    @property
    def param_dim(self) -> int:
        return self.theta.shape[0]

    def trigger_counts_at(self, t: int) -> np.ndarray:
        """Cumulative broadcast counts per sensor over rounds 0..t."""
        if not 0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        sel = self.event_times <= t
        return np.bincount(self.event_sensors[sel], minlength=self.n)

    def messages(self) -> int:
        """Total point-to-point messages sent over the whole run."""
        return int((self.trigger_counts * self.child_counts).sum())
