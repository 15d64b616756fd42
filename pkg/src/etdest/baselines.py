"""Time-triggered baselines with a fixed communication period.

Three classic schemes, all broadcasting on rounds where ``t % period``
is zero and running on stale neighbor values in between, so a period of
p costs one p-th of an always-on scheme's messages:

* ``periodic-consensus-innovations``: separate decaying consensus and
  innovation gains, and a fixed innovation gain matrix (by default the
  inverse of the network information matrix).
* ``diffusion-lms``: adapt-then-combine least mean squares with uniform
  combination weights over each node's parents and itself.
* ``periodic-single-gain``: one decaying gain multiplying both the
  innovation and the consensus term; with period 1 this coincides with
  the event-triggered estimator run with zero thresholds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .estimator import DivergenceError, _innovation, _Operators
from .graph import SensorGraph
from .seeding import sensor_streams
from .sensing import ObservationModel, Schedule, as_parameter
from .trace import RunTrace, TriggerEvent

__all__ = [
    "BASELINE_KINDS",
    "BaselineError",
    "BaselineConfig",
    "BaselineState",
    "baseline_step",
    "run_baseline",
]

BASELINE_KINDS = (
    "periodic-consensus-innovations",
    "diffusion-lms",
    "periodic-single-gain",
)


class BaselineError(ValueError):
    """Baseline misconfiguration (unknown kind, missing gains)."""


@dataclass(frozen=True)
class BaselineConfig:
    """Which baseline to run and with what gains.

    ``step`` is the innovation gain for consensus-innovations, the
    adaptation gain for diffusion, and the shared gain for single-gain.
    ``consensus_step`` and ``gain_matrix`` only apply to
    consensus-innovations; ``gain_matrix="auto"`` inverts the summed
    sensor information matrices at t=0 (pseudo-inverse, with a warning,
    when singular).
    """

    kind: str
    period: int = 1
    step: Schedule | None = None
    consensus_step: Schedule | None = None
    gain_matrix: np.ndarray | str = "auto"

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise BaselineError(f"unknown baseline kind {self.kind!r}, expected one of {BASELINE_KINDS}")
        if int(self.period) < 1:
            raise BaselineError("period must be at least 1")
        object.__setattr__(self, "period", int(self.period))
        if self.step is None or not callable(self.step):
            raise BaselineError(f"{self.kind} needs a callable step schedule")
        if self.kind == "periodic-consensus-innovations":
            if self.consensus_step is None or not callable(self.consensus_step):
                raise BaselineError(f"{self.kind} needs a callable consensus_step schedule")
        elif self.consensus_step is not None:
            raise BaselineError(f"{self.kind} does not take consensus_step")


@dataclass
class BaselineState:
    """Runtime state: current estimates plus the last values shared.

    For the diffusion scheme ``shared`` holds the stale intermediate
    (post-adaptation) values; for the other kinds the stale estimates.
    """

    estimates: np.ndarray
    shared: np.ndarray
    send_counts: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, initial_estimates) -> "BaselineState":
        x = np.array(initial_estimates, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"initial estimates must be (n, dim), got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("initial estimates must be finite")
        return cls(
            estimates=x,
            shared=x.copy(),
            send_counts=np.zeros(x.shape[0], dtype=np.int64),
            t=0,
        )


def _resolve_gain_matrix(config: BaselineConfig, model: ObservationModel) -> np.ndarray | None:
    if config.kind != "periodic-consensus-innovations":
        return None
    if isinstance(config.gain_matrix, str):
        if config.gain_matrix != "auto":
            raise BaselineError(f"gain_matrix must be 'auto' or a matrix, got {config.gain_matrix!r}")
        total = np.zeros((model.param_dim, model.param_dim))
        for i in range(model.n):
            total += model.gram(i, 0)
        try:
            return np.linalg.inv(total)
        except np.linalg.LinAlgError:
            warnings.warn("network information matrix is singular, using pseudo-inverse")
            return np.linalg.pinv(total)
    k = np.asarray(config.gain_matrix, dtype=float)
    if k.shape != (model.param_dim, model.param_dim):
        raise BaselineError(
            f"gain_matrix has shape {k.shape}, expected {(model.param_dim, model.param_dim)}"
        )
    return k


class _BaselineOps:
    def __init__(self, config, graph, model, theta):
        self.inner = _Operators(graph, model, theta)
        self.gain_matrix = _resolve_gain_matrix(config, model)
        if config.kind == "diffusion-lms":
            self.binary = (graph.weights > 0).astype(float)
            self.combine_div = self.binary.sum(axis=1) + 1.0


def _baseline_round(config, ops, model, theta, x, shared, counts, t, noise_rows):
    """One round; ``shared`` and ``counts`` mutated in place."""
    comm = t % config.period == 0
    tt = max(t, 1)
    if comm:
        counts += 1
    if config.kind == "diffusion-lms":
        innovation = _innovation(ops.inner, model, theta, x, t, noise_rows)
        psi = x + float(config.step(tt)) * innovation
        if comm:
            shared[:] = psi
        x_next = (psi + ops.binary @ shared) / ops.combine_div[:, None]
        return x_next, comm
    if comm:
        shared[:] = x
    innovation = _innovation(ops.inner, model, theta, x, t, noise_rows)
    consensus = ops.inner.weights @ shared - ops.inner.degrees[:, None] * x
    if config.kind == "periodic-single-gain":
        gains = np.full(x.shape[0], float(config.step(tt)))
        x_next = x + gains[:, None] * (innovation + consensus)
    else:
        x_next = (
            x
            + float(config.consensus_step(tt)) * consensus
            + float(config.step(tt)) * (innovation @ ops.gain_matrix.T)
        )
    return x_next, comm


def baseline_step(
    config: BaselineConfig,
    state: BaselineState,
    graph: SensorGraph,
    model: ObservationModel,
    theta,
    streams,
) -> tuple[BaselineState, list[TriggerEvent]]:
    """Advance one round functionally; mirrors the loop of :func:`run_baseline`."""
    theta = as_parameter(theta, model.param_dim)
    ops = _BaselineOps(config, graph, model, theta)
    x = state.estimates.copy()
    shared = state.shared.copy()
    counts = state.send_counts.copy()
    t = state.t
    noise_rows = np.zeros((model.n, model.m_max))
    for i in range(model.n):
        noise_rows[i, : model.dims[i]] = model.noise_block(i, t, 1, streams[i])[0]
    sent_from = x.copy()
    x_next, comm = _baseline_round(config, ops, model, theta, x, shared, counts, t, noise_rows)
    events = (
        [TriggerEvent(time=t, sensor=i, estimate=sent_from[i].copy()) for i in range(model.n)]
        if comm
        else []
    )
    return BaselineState(estimates=x_next, shared=shared, send_counts=counts, t=t + 1), events


def run_baseline(
    config: BaselineConfig,
    graph: SensorGraph,
    model: ObservationModel,
    theta,
    initial_estimates,
    horizon: int,
    seed=None,
    *,
    run_index: int = 0,
    snapshot_every: int = 0,
    divergence_limit: float = 1e12,
) -> RunTrace:
    """Simulate a periodic baseline for ``horizon`` rounds; returns a trace.

    Mirrors the event-triggered :func:`etdest.estimator.run` contract:
    same stream derivation (so a given seed and run index feeds all
    algorithms identical measurements), same trace layout, same
    divergence guard.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    theta = as_parameter(theta, model.param_dim)
    ops = _BaselineOps(config, graph, model, theta)
    n, dim = graph.n, model.param_dim
    x = np.array(initial_estimates, dtype=float)
    if x.shape != (n, dim):
        raise ValueError(f"initial estimates must have shape {(n, dim)}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial estimates must be finite")

    streams = sensor_streams(seed, run_index, n)
    shared = x.copy()
    counts = np.zeros(n, dtype=np.int64)
    sq_error = np.empty(horizon + 1)
    sq_error[0] = float(((x - theta) ** 2).sum())
    comm_rounds: list[int] = []
    snapshots: dict[int, np.ndarray] = {}
    if snapshot_every > 0:
        snapshots[0] = x.copy()
    initial = x.copy()

    chunk = 4096
    noise = np.zeros((n, chunk, model.m_max))
    for t in range(horizon):
        r = t % chunk
        if r == 0:
            count = min(chunk, horizon - t)
            for i in range(n):
                noise[i, :count, : model.dims[i]] = model.noise_block(i, t, count, streams[i])
        x, comm = _baseline_round(config, ops, model, theta, x, shared, counts, t, noise[:, r, :])
        if comm:
            comm_rounds.append(t)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > divergence_limit:
            raise DivergenceError(t + 1, divergence_limit)
        sq_error[t + 1] = float(((x - theta) ** 2).sum())
        if snapshot_every > 0 and (t + 1) % snapshot_every == 0:
            snapshots[t + 1] = x.copy()

    rounds = np.asarray(comm_rounds, dtype=np.int64)
    return RunTrace(
        horizon=horizon,
        theta=theta,
        squared_error=sq_error,
        event_times=np.repeat(rounds, n),
        event_sensors=np.tile(np.arange(n, dtype=np.int64), rounds.size),
        child_counts=graph.child_counts().astype(np.int64),
        initial_estimates=initial,
        final_estimates=x.copy(),
        trigger_counts=counts,
        max_trigger_slack=float("nan"),
        snapshots=snapshots,
        algorithm=config.kind,
    )
