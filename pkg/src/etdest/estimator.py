"""Event-triggered consensus-plus-innovations estimation.

Every round t each sensor first decides whether to broadcast: at t = 0
everyone sends unconditionally, afterwards sensor i sends exactly when
the Euclidean distance between its current estimate and its last
broadcast value strictly exceeds its threshold f_i(t). Sensors then
update by mixing a local innovation step (driven by the fresh
measurement) with consensus toward the latest values received from
their parents. Neighbor values seen during the update are the ones
broadcast this same round by default; ``delivery="next-round"`` delays
them by one round instead.

Schedules are evaluated at ``max(t, 1)`` so power-law profiles that are
undefined at zero can be used directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import SensorGraph
from .seeding import sensor_streams
from .sensing import ModelError, ObservationModel, Schedules, as_parameter
from .trace import RunTrace, TriggerEvent

__all__ = [
    "DELIVERY_MODES",
    "DivergenceError",
    "EstimatorState",
    "trigger_check",
    "network_step",
    "run",
]

DELIVERY_MODES = ("same-round", "next-round")

_CHUNK = 4096  # rounds of noise drawn per sensor at a time


class DivergenceError(RuntimeError):
    """Estimates left the finite trust region; carries the failing round."""

    def __init__(self, t: int, limit: float):
        super().__init__(f"estimates diverged at round {t} (limit {limit:g})")
        self.t = t
        self.limit = limit


@dataclass
class EstimatorState:
    """Network state entering round ``t``.

    ``last_broadcast[i]`` is the estimate sensor i most recently sent;
    ``trigger_counts[i]`` counts its broadcasts so far.
    """

    estimates: np.ndarray
    last_broadcast: np.ndarray
    trigger_counts: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, initial_estimates) -> "EstimatorState":
        x = np.array(initial_estimates, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"initial estimates must be (n, dim), got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("initial estimates must be finite")
        n = x.shape[0]
        return cls(
            estimates=x,
            last_broadcast=x.copy(),
            trigger_counts=np.zeros(n, dtype=np.int64),
            t=0,
        )


def trigger_check(state: EstimatorState, i: int, threshold: float) -> bool:
    """Would sensor ``i`` broadcast now? Strict comparison, forced at t = 0."""
    if state.t == 0:
        return True
    dev = float(np.linalg.norm(state.estimates[i] - state.last_broadcast[i]))
    return dev > threshold


# ----- round mechanics ------------------------------------------------


class _Operators:
    """Precomputed arrays for the per-round update."""

    def __init__(self, graph: SensorGraph, model: ObservationModel, theta: np.ndarray):
        if model.n != graph.n:
            raise ModelError(f"model has {model.n} sensors but graph has {graph.n} nodes")
        self.weights = graph.weights
        self.degrees = graph.in_weights()
        self.dims = np.array(model.dims)
        self.m_max = model.m_max
        if model.static:
            n, m_max, dim = model.n, model.m_max, model.param_dim
            self.h_pad = np.zeros((n, m_max, dim))
            self.ht_pad = np.zeros((n, dim, m_max))
            self.obs_pad = np.zeros((n, m_max))
            for i, h in enumerate(model.matrices):
                m = h.shape[0]
                self.h_pad[i, :m] = h
                self.ht_pad[i, :, :m] = h.T
                self.obs_pad[i, :m] = h @ theta
        else:
            self.h_pad = None


def _innovation(ops: _Operators, model, theta, x, t, noise_rows):
    """Per-sensor ``H^T (y - H x)`` with y drawn as ``H theta + v``."""
    if ops.h_pad is not None:
        y = ops.obs_pad + noise_rows
        resid = y - np.einsum("nkm,nm->nk", ops.h_pad, x)
        return np.einsum("nmk,nk->nm", ops.ht_pad, resid)
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        h = model.matrix(i, t)
        y_i = h @ theta + noise_rows[i, : ops.dims[i]]
        out[i] = h.T @ (y_i - h @ x[i])
    return out


def _round(ops, model, schedules, theta, x, b, k, t, noise_rows, delivery):
    """Advance one round in place (b, k mutated); returns (x_next, fired, slack)."""
    n = x.shape[0]
    tt = max(t, 1)
    thresholds = schedules.threshold_vector(tt, n)
    dev = np.linalg.norm(x - b, axis=1)
    fired = np.ones(n, dtype=bool) if t == 0 else dev > thresholds
    visible = b.copy() if delivery == "next-round" else b
    b[fired] = x[fired]
    k[fired] += 1
    # post-trigger deviation from the latest broadcast can never exceed
    # the threshold; keep the worst margin as evidence
    slack = float(np.max(np.where(fired, 0.0, dev) - thresholds))
    innovation = _innovation(ops, model, theta, x, t, noise_rows)
    consensus = ops.weights @ visible - ops.degrees[:, None] * x
    alphas = schedules.step_vector(tt, n)
    x_next = x + alphas[:, None] * (innovation + consensus)
    return x_next, fired, slack


def _draw_noise_rows(model, t, streams, out):
    for i in range(model.n):
        out[i, : model.dims[i]] = model.noise_block(i, t, 1, streams[i])[0]
    return out


def network_step(
    state: EstimatorState,
    graph: SensorGraph,
    model: ObservationModel,
    schedules: Schedules,
    theta,
    streams,
    *,
    delivery: str = "same-round",
) -> tuple[EstimatorState, list[TriggerEvent]]:
    """Run one round, returning the next state and the broadcasts it caused.

    Functional flavor of the inner loop of :func:`run`: the input state
    is left untouched and the two agree float for float when fed the
    same streams.
    """
    if delivery not in DELIVERY_MODES:
        raise ValueError(f"delivery must be one of {DELIVERY_MODES}")
    theta = as_parameter(theta, model.param_dim)
    ops = _Operators(graph, model, theta)
    x = state.estimates.copy()
    b = state.last_broadcast.copy()
    k = state.trigger_counts.copy()
    t = state.t
    noise_rows = np.zeros((model.n, model.m_max))
    _draw_noise_rows(model, t, streams, noise_rows)
    x_next, fired, _ = _round(ops, model, schedules, theta, x, b, k, t, noise_rows, delivery)
    events = [TriggerEvent(time=t, sensor=int(i), estimate=x[i].copy()) for i in np.flatnonzero(fired)]
    return EstimatorState(estimates=x_next, last_broadcast=b, trigger_counts=k, t=t + 1), events


def run(
    graph: SensorGraph,
    model: ObservationModel,
    schedules: Schedules,
    theta,
    initial_estimates,
    horizon: int,
    seed=None,
    *,
    run_index: int = 0,
    delivery: str = "same-round",
    snapshot_every: int = 0,
    divergence_limit: float = 1e12,
) -> RunTrace:
    """Simulate the event-triggered estimator for ``horizon`` rounds.

    Parameters
    ----------
    graph : SensorGraph
        Communication structure; node i listens to its parents.
    model : ObservationModel
        Per-sensor measurement maps and noise.
    schedules : Schedules
        Step sizes and trigger thresholds.
    theta : array_like
        True parameter the measurements are generated from.
    initial_estimates : (n, dim) array_like
        Starting estimate of every sensor.
    horizon : int
        Number of rounds; the trace covers times 0..horizon.
    seed : int, SeedSequence, or None
        Master seed; per-sensor streams are derived from
        ``(seed, run_index, sensor)``.
    run_index : int
        Monte Carlo run number, part of the stream key.
    delivery : str
        "same-round" (default) or "next-round" neighbor visibility.
    snapshot_every : int
        Store full estimate snapshots at this round stride (0 disables).
    divergence_limit : float
        Abort with :class:`DivergenceError` when any estimate magnitude
        passes this bound or stops being finite.

    Returns
    -------
    RunTrace
    """
    if delivery not in DELIVERY_MODES:
        raise ValueError(f"delivery must be one of {DELIVERY_MODES}")
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    theta = as_parameter(theta, model.param_dim)
    ops = _Operators(graph, model, theta)
    n, dim = graph.n, model.param_dim
    x = np.array(initial_estimates, dtype=float)
    if x.shape != (n, dim):
        raise ValueError(f"initial estimates must have shape {(n, dim)}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial estimates must be finite")

    streams = sensor_streams(seed, run_index, n)
    b = x.copy()
    k = np.zeros(n, dtype=np.int64)
    sq_error = np.empty(horizon + 1)
    sq_error[0] = float(((x - theta) ** 2).sum())
    event_times: list[np.ndarray] = []
    event_sensors: list[np.ndarray] = []
    snapshots: dict[int, np.ndarray] = {}
    if snapshot_every > 0:
        snapshots[0] = x.copy()
    worst_slack = -np.inf

    m_max = model.m_max
    noise = np.zeros((n, _CHUNK, m_max))
    initial = x.copy()
    for t in range(horizon):
        r = t % _CHUNK
        if r == 0:
            count = min(_CHUNK, horizon - t)
            for i in range(n):
                noise[i, :count, : model.dims[i]] = model.noise_block(i, t, count, streams[i])
        x, fired, slack = _round(ops, model, schedules, theta, x, b, k, t, noise[:, r, :], delivery)
        worst_slack = max(worst_slack, slack)
        idx = np.flatnonzero(fired)
        if idx.size:
            event_times.append(np.full(idx.size, t, dtype=np.int64))
            event_sensors.append(idx.astype(np.int64))
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > divergence_limit:
            raise DivergenceError(t + 1, divergence_limit)
        sq_error[t + 1] = float(((x - theta) ** 2).sum())
        if snapshot_every > 0 and (t + 1) % snapshot_every == 0:
            snapshots[t + 1] = x.copy()

    return RunTrace(
        horizon=horizon,
        theta=theta,
        squared_error=sq_error,
        event_times=np.concatenate(event_times) if event_times else np.empty(0, dtype=np.int64),
        event_sensors=np.concatenate(event_sensors) if event_sensors else np.empty(0, dtype=np.int64),
        child_counts=graph.child_counts().astype(np.int64),
        initial_estimates=initial,
        final_estimates=x.copy(),
        trigger_counts=k,
        max_trigger_slack=float(worst_slack),
        snapshots=snapshots,
        algorithm="event-triggered",
    )
