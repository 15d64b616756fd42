"""Experiment configuration: JSON schema, validation, and object builders.

Configs are plain JSON. Node and sensor labels in config files are
1-based (matching how small networks are usually drawn); everything is
converted to 0-based indices at this boundary. Schedule specs are
``{"kind": "power", "scale": s, "offset": o, "exponent": e}`` or
``{"kind": "constant", "value": v}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BASELINE_KINDS, BaselineConfig
from .estimator import DELIVERY_MODES
from .graph import SensorGraph, random_geometric
from .sensing import ConstantSchedule, ObservationModel, PowerSchedule, Schedules

__all__ = ["ConfigError", "ExperimentConfig", "schedule_from_spec", "schedule_to_spec"]


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


def _require(mapping, key, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where}: expected an object")
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _number(value, where, *, minimum=None, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _integer(value, where, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def schedule_from_spec(spec, where):
    """Build a schedule object from its JSON spec.

    JSON uses the literal exponent (``(t + offset) ** exponent``, so a
    decaying gain has a negative exponent) while :class:`PowerSchedule`
    stores the decay rate with the opposite sign; translate here.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{where}: expected a schedule object with a 'kind'")
    kind = spec["kind"]
    extra = set(spec) - {"kind", "scale", "offset", "exponent", "value"}
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    if kind == "power":
        return PowerSchedule(
            scale=float(_number(_require(spec, "scale", where), f"{where}.scale", minimum=0)),
            offset=float(_number(spec.get("offset", 0.0), f"{where}.offset")),
            exponent=-float(_number(_require(spec, "exponent", where), f"{where}.exponent")),
        )
    if kind == "constant":
        value = _require(spec, "value", where)
        if value == "inf":
            return ConstantSchedule(np.inf)
        return ConstantSchedule(float(_number(value, f"{where}.value", minimum=0)))
    raise ConfigError(f"{where}: unknown schedule kind {kind!r}")


def schedule_to_spec(schedule) -> dict:
    if isinstance(schedule, PowerSchedule):
        return {
            "kind": "power",
            "scale": schedule.scale,
            "offset": schedule.offset,
            "exponent": -schedule.exponent,
        }
    if isinstance(schedule, ConstantSchedule):
        value = "inf" if np.isinf(schedule.value) else schedule.value
        return {"kind": "constant", "value": value}
    raise ConfigError(f"cannot serialize schedule {schedule!r}")


def _schedule_field(raw, where):
    """Normalize a schedule spec or list of specs (validated eagerly)."""
    if isinstance(raw, list):
        if not raw:
            raise ConfigError(f"{where}: empty schedule list")
        for k, item in enumerate(raw):
            schedule_from_spec(item, f"{where}[{k}]")
        return raw
    schedule_from_spec(raw, where)
    return raw


@dataclass
class ExperimentConfig:
    """One experiment: network, sensing, schedules, algorithm, ensemble size.

    Instances hold the normalized JSON form; ``build_*`` methods turn the
    pieces into runtime objects. ``baselines`` lists extra algorithm
    blocks run next to the main one by comparison tooling.
    """

    name: str
    graph: dict
    theta: list
    observation: dict
    schedules: dict
    initial_estimates: object
    horizon: int
    runs: int = 1
    seed: int | None = None
    algorithm: dict = field(default_factory=lambda: {"kind": "event-triggered"})
    baselines: list = field(default_factory=list)
    delivery: str = "same-round"
    snapshot_every: int = 0

    # ----- parsing -------------------------------------------------------

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object at top level")
        known = {
            "name", "graph", "theta", "observation", "schedules", "initial_estimates",
            "horizon", "runs", "seed", "algorithm", "baselines", "delivery", "snapshot_every",
        }
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"config: unknown top-level keys {sorted(extra)}")

        name = _require(raw, "name", "config")
        if not isinstance(name, str) or not name:
            raise ConfigError("config.name: expected a non-empty string")

        graph = cls._check_graph(_require(raw, "graph", "config"))
        theta = _require(raw, "theta", "config")
        if not isinstance(theta, list) or not theta:
            raise ConfigError("config.theta: expected a non-empty list of numbers")
        theta = [float(_number(v, f"config.theta[{k}]")) for k, v in enumerate(theta)]

        observation = cls._check_observation(_require(raw, "observation", "config"))
        schedules = cls._check_schedules(_require(raw, "schedules", "config"))
        initial = cls._check_initial(_require(raw, "initial_estimates", "config"))

        horizon = _integer(_require(raw, "horizon", "config"), "config.horizon", minimum=1)
        runs = _integer(raw.get("runs", 1), "config.runs", minimum=1)
        seed = raw.get("seed")
        if seed is not None:
            seed = _integer(seed, "config.seed", minimum=0)

        algorithm = cls._check_algorithm(raw.get("algorithm", {"kind": "event-triggered"}), "config.algorithm")
        baselines = raw.get("baselines", [])
        if not isinstance(baselines, list):
            raise ConfigError("config.baselines: expected a list")
        baselines = [
            cls._check_algorithm(b, f"config.baselines[{k}]", baseline_only=True)
            for k, b in enumerate(baselines)
        ]

        delivery = raw.get("delivery", "same-round")
        if delivery not in DELIVERY_MODES:
            raise ConfigError(f"config.delivery: expected one of {DELIVERY_MODES}, got {delivery!r}")
        snapshot_every = _integer(raw.get("snapshot_every", 0), "config.snapshot_every", minimum=0)

        return cls(
            name=name,
            graph=graph,
            theta=theta,
            observation=observation,
            schedules=schedules,
            initial_estimates=initial,
            horizon=horizon,
            runs=runs,
            seed=seed,
            algorithm=algorithm,
            baselines=baselines,
            delivery=delivery,
            snapshot_every=snapshot_every,
        )

    # ----- field validators ------------------------------------------------

    @staticmethod
    def _check_graph(raw) -> dict:
        if not isinstance(raw, dict):
            raise ConfigError("config.graph: expected an object")
        if "random_geometric" in raw:
            if set(raw) != {"random_geometric"}:
                raise ConfigError("config.graph: random_geometric cannot be combined with other keys")
            rg = raw["random_geometric"]
            nodes = _integer(_require(rg, "nodes", "config.graph.random_geometric"), "config.graph.random_geometric.nodes", minimum=1)
            radius = _number(_require(rg, "radius", "config.graph.random_geometric"), "config.graph.random_geometric.radius")
            if radius <= 0:
                raise ConfigError("config.graph.random_geometric.radius: must be positive")
            seed = _integer(_require(rg, "seed", "config.graph.random_geometric"), "config.graph.random_geometric.seed", minimum=0)
            out = {"nodes": nodes, "radius": radius, "seed": seed}
            if "max_tries" in rg:
                out["max_tries"] = _integer(rg["max_tries"], "config.graph.random_geometric.max_tries", minimum=1)
            extra = set(rg) - {"nodes", "radius", "seed", "max_tries"}
            if extra:
                raise ConfigError(f"config.graph.random_geometric: unknown keys {sorted(extra)}")
            return {"random_geometric": out}
        nodes = _integer(_require(raw, "nodes", "config.graph"), "config.graph.nodes", minimum=1)
        edges = _require(raw, "edges", "config.graph")
        if not isinstance(edges, list):
            raise ConfigError("config.graph.edges: expected a list of [from, to, weight] triples")
        checked = []
        for k, edge in enumerate(edges):
            where = f"config.graph.edges[{k}]"
            if not (isinstance(edge, list) and len(edge) == 3):
                raise ConfigError(f"{where}: expected [from, to, weight]")
            u = _integer(edge[0], f"{where}[0]", minimum=1)
            v = _integer(edge[1], f"{where}[1]", minimum=1)
            if u > nodes or v > nodes:
                raise ConfigError(f"{where}: node label out of range 1..{nodes}")
            w = _number(edge[2], f"{where}[2]")
            if w <= 0:
                raise ConfigError(f"{where}: weight must be positive")
            checked.append([u, v, float(w)])
        extra = set(raw) - {"nodes", "edges"}
        if extra:
            raise ConfigError(f"config.graph: unknown keys {sorted(extra)}")
        return {"nodes": nodes, "edges": checked}

    @staticmethod
    def _check_observation(raw) -> dict:
        if not isinstance(raw, dict):
            raise ConfigError("config.observation: expected an object")
        extra = set(raw) - {"matrices", "assignment", "noise_std"}
        if extra:
            raise ConfigError(f"config.observation: unknown keys {sorted(extra)}")
        matrices = _require(raw, "matrices", "config.observation")
        if not isinstance(matrices, dict) or not matrices:
            raise ConfigError("config.observation.matrices: expected a non-empty name->matrix object")
        for mname, rows in matrices.items():
            where = f"config.observation.matrices[{mname!r}]"
            arr = np.asarray(rows, dtype=float) if isinstance(rows, list) else None
            if arr is None or arr.ndim != 2 or arr.size == 0 or not np.all(np.isfinite(arr)):
                raise ConfigError(f"{where}: expected a finite 2-D matrix as nested lists")
        widths = {np.asarray(rows).shape[1] for rows in matrices.values()}
        if len(widths) != 1:
            raise ConfigError("config.observation.matrices: all matrices need the same column count")
        assignment = _require(raw, "assignment", "config.observation")
        if isinstance(assignment, dict):
            cycle = _require(assignment, "cycle", "config.observation.assignment")
            if set(assignment) != {"cycle"}:
                raise ConfigError("config.observation.assignment: expected either a list or {'cycle': [...]}")
            if not isinstance(cycle, list) or not cycle:
                raise ConfigError("config.observation.assignment.cycle: expected a non-empty list")
            names = cycle
        elif isinstance(assignment, list) and assignment:
            names = assignment
        else:
            raise ConfigError("config.observation.assignment: expected a list or {'cycle': [...]}")
        for k, mname in enumerate(names):
            if mname not in matrices:
                raise ConfigError(f"config.observation.assignment[{k}]: unknown matrix name {mname!r}")
        noise = raw.get("noise_std", 1.0)
        if isinstance(noise, list):
            for k, v in enumerate(noise):
                _number(v, f"config.observation.noise_std[{k}]", minimum=0)
        else:
            _number(noise, "config.observation.noise_std", minimum=0)
        return {"matrices": matrices, "assignment": assignment, "noise_std": noise}

    @staticmethod
    def _check_schedules(raw) -> dict:
        if not isinstance(raw, dict):
            raise ConfigError("config.schedules: expected an object")
        known = {"step", "threshold", "reference_step", "delta", "rho", "threshold_floor", "trigger_scale"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"config.schedules: unknown keys {sorted(extra)}")
        out = {
            "step": _schedule_field(_require(raw, "step", "config.schedules"), "config.schedules.step"),
            "threshold": _schedule_field(_require(raw, "threshold", "config.schedules"), "config.schedules.threshold"),
        }
        for key in ("reference_step", "threshold_floor", "trigger_scale"):
            if key in raw:
                schedule_from_spec(raw[key], f"config.schedules.{key}")
                out[key] = raw[key]
        if "delta" in raw:
            delta = _number(raw["delta"], "config.schedules.delta", minimum=0)
            if delta >= 0.5:
                raise ConfigError("config.schedules.delta: must lie in [0, 1/2)")
            out["delta"] = delta
        if "rho" in raw:
            rho = _number(raw["rho"], "config.schedules.rho")
            if rho <= 2:
                raise ConfigError("config.schedules.rho: must exceed 2")
            out["rho"] = rho
        return out

    @staticmethod
    def _check_initial(raw):
        if isinstance(raw, dict):
            if set(raw) != {"fill"}:
                raise ConfigError("config.initial_estimates: expected a matrix or {'fill': value}")
            _number(raw["fill"], "config.initial_estimates.fill")
            return {"fill": raw["fill"]}
        if isinstance(raw, list) and raw:
            arr = np.asarray(raw, dtype=float)
            if arr.ndim != 2 or not np.all(np.isfinite(arr)):
                raise ConfigError("config.initial_estimates: expected a finite 2-D matrix")
            return raw
        raise ConfigError("config.initial_estimates: expected a matrix or {'fill': value}")

    @staticmethod
    def _check_algorithm(raw, where, baseline_only=False) -> dict:
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected an object")
        kind = _require(raw, "kind", where)
        if kind == "event-triggered":
            if baseline_only:
                raise ConfigError(f"{where}: only baseline blocks allowed here")
            extra = set(raw) - {"kind"}
            if extra:
                raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
            return {"kind": "event-triggered"}
        if kind != "baseline":
            raise ConfigError(f"{where}.kind: expected 'event-triggered' or 'baseline', got {kind!r}")
        baseline = _require(raw, "baseline", where)
        if baseline not in BASELINE_KINDS:
            raise ConfigError(f"{where}.baseline: expected one of {BASELINE_KINDS}, got {baseline!r}")
        period = _integer(raw.get("period", 1), f"{where}.period", minimum=1)
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.params: expected an object")
        known = {"step", "consensus_step", "gain_matrix"}
        extra = (set(raw) - {"kind", "baseline", "period", "params"}) | (set(params) - known)
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        out_params = {}
        if "step" in params:
            schedule_from_spec(params["step"], f"{where}.params.step")
            out_params["step"] = params["step"]
        else:
            raise ConfigError(f"{where}.params: missing required key 'step'")
        if "consensus_step" in params:
            schedule_from_spec(params["consensus_step"], f"{where}.params.consensus_step")
            out_params["consensus_step"] = params["consensus_step"]
        if "gain_matrix" in params:
            gm = params["gain_matrix"]
            if gm != "auto":
                arr = np.asarray(gm, dtype=float) if isinstance(gm, list) else None
                if arr is None or arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                    raise ConfigError(f"{where}.params.gain_matrix: expected 'auto' or a square matrix")
            out_params["gain_matrix"] = gm
        return {"kind": "baseline", "baseline": baseline, "period": period, "params": out_params}

    # ----- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "graph": self.graph,
            "theta": list(self.theta),
            "observation": self.observation,
            "schedules": self.schedules,
            "initial_estimates": self.initial_estimates,
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "algorithm": self.algorithm,
            "baselines": self.baselines,
            "delivery": self.delivery,
            "snapshot_every": self.snapshot_every,
        }

    def with_algorithm(self, algorithm: dict) -> "ExperimentConfig":
        """Copy of this config running a different algorithm block."""
        d = self.to_dict()
        d["algorithm"] = algorithm
        return ExperimentConfig.from_dict(d)

    def algorithm_label(self, algorithm: dict | None = None) -> str:
        alg = algorithm if algorithm is not None else self.algorithm
        if alg["kind"] == "event-triggered":
            return "event-triggered"
        return f"{alg['baseline']}-p{alg['period']}"

    # ----- builders ----------------------------------------------------------

    @property
    def n(self) -> int:
        if "random_geometric" in self.graph:
            return self.graph["random_geometric"]["nodes"]
        return self.graph["nodes"]

    def build_graph(self) -> SensorGraph:
        if "random_geometric" in self.graph:
            rg = self.graph["random_geometric"]
            return random_geometric(
                rg["nodes"], rg["radius"], seed=rg["seed"], max_tries=rg.get("max_tries", 50)
            )
        edges = [(u - 1, v - 1, w) for u, v, w in self.graph["edges"]]
        return SensorGraph.from_edges(self.graph["nodes"], edges)

    def build_model(self) -> ObservationModel:
        n = self.n
        matrices = {k: np.asarray(v, dtype=float) for k, v in self.observation["matrices"].items()}
        assignment = self.observation["assignment"]
        if isinstance(assignment, dict):
            cycle = assignment["cycle"]
            names = [cycle[i % len(cycle)] for i in range(n)]
        else:
            if len(assignment) != n:
                raise ConfigError(
                    f"config.observation.assignment: got {len(assignment)} entries for {n} sensors"
                )
            names = assignment
        noise = self.observation.get("noise_std", 1.0)
        if isinstance(noise, list) and len(noise) != n:
            raise ConfigError(f"config.observation.noise_std: got {len(noise)} entries for {n} sensors")
        model = ObservationModel([matrices[name] for name in names], noise_std=noise)
        if model.param_dim != len(self.theta):
            raise ConfigError(
                f"config.theta: has {len(self.theta)} entries but matrices have {model.param_dim} columns"
            )
        return model

    def build_schedules(self) -> Schedules:
        def build(field_value, where):
            if isinstance(field_value, list):
                return [schedule_from_spec(x, where) for x in field_value]
            return schedule_from_spec(field_value, where)

        raw = self.schedules
        for key in ("step", "threshold"):
            value = raw[key]
            if isinstance(value, list) and len(value) != self.n:
                raise ConfigError(f"config.schedules.{key}: got {len(value)} entries for {self.n} sensors")
        kwargs = {}
        for key in ("reference_step", "threshold_floor", "trigger_scale"):
            if key in raw:
                kwargs[key] = schedule_from_spec(raw[key], f"config.schedules.{key}")
        return Schedules(
            step=build(raw["step"], "config.schedules.step"),
            threshold=build(raw["threshold"], "config.schedules.threshold"),
            delta=raw.get("delta"),
            rho=raw.get("rho"),
            **kwargs,
        )

    def build_initial(self) -> np.ndarray:
        n, dim = self.n, len(self.theta)
        if isinstance(self.initial_estimates, dict):
            return np.full((n, dim), float(self.initial_estimates["fill"]))
        arr = np.asarray(self.initial_estimates, dtype=float)
        if arr.shape != (n, dim):
            raise ConfigError(
                f"config.initial_estimates: expected shape {(n, dim)}, got {tuple(arr.shape)}"
            )
        return arr

    def build_baseline(self, algorithm: dict | None = None) -> BaselineConfig:
        alg = algorithm if algorithm is not None else self.algorithm
        if alg.get("kind") != "baseline":
            raise ConfigError("algorithm block is not a baseline")
        params = alg["params"]
        kwargs = {"step": schedule_from_spec(params["step"], "params.step")}
        if "consensus_step" in params:
            kwargs["consensus_step"] = schedule_from_spec(params["consensus_step"], "params.consensus_step")
        if "gain_matrix" in params:
            gm = params["gain_matrix"]
            kwargs["gain_matrix"] = gm if gm == "auto" else np.asarray(gm, dtype=float)
        return BaselineConfig(kind=alg["baseline"], period=alg["period"], **kwargs)
