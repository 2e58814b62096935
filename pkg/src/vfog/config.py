"""Experiment configuration: typed sections, defaults and strict JSON loading."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


MB = 1_000_000  # bytes
GHZ = 1e9


@dataclass
class TopologyConfig:
    zones: int = 6
    fog_nodes: int = 6
    segment_length_m: float = 500.0
    cpu_choices_ghz: list[float] = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    memory_range_mb: list[float] = field(default_factory=lambda: [20.0, 60.0])
    cloud_cpu_ghz: float = 16.0


@dataclass
class FleetConfig:
    vehicles: int = 100
    speed_range_kmh: list[float] = field(default_factory=lambda: [20.0, 80.0])
    arrival_rate: float = 0.5  # tasks per second per vehicle


@dataclass
class TaskConfig:
    size_range_mb: list[float] = field(default_factory=lambda: [0.5, 5.0])
    deadline_range_ms: list[float] = field(default_factory=lambda: [50.0, 500.0])
    cycles_per_bit: float = 10.0
    result_size_kb: float = 10.0


@dataclass
class LinkConfig:
    v2r_rate_mbps: float = 400.0
    hop_delay_ms: float = 5.0
    backhaul_rtt_ms: float = 100.0


@dataclass
class RewardConfig:
    alpha: float = 1.0
    beta: float = 1.0
    lambda_balance: float = 1.0
    gamma_discount: float = 0.9
    delay_cap: float = 2.0
    balance_window_s: float = 5.0


@dataclass
class ObservationConfig:
    max_queue_len: float = 8.0
    max_vehicles_per_zone: float = 40.0
    max_delay_s: float = 0.5
    utilization_window_s: float = 5.0


@dataclass
class OptimizationConfig:
    epoch_s: float = 0.02  # 0 assigns every arrival on the spot
    slots_per_node: int = 2


@dataclass
class QLearningConfig:
    learning_rate: float = 0.1
    discount: float = 0.9
    visit_decay: float = 1000.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5
    training_episodes: int = 60  # -1 inherits run.training_episodes


@dataclass
class DqnConfig:
    hidden: list[int] = field(default_factory=lambda: [64, 64])
    learning_rate: float = 1e-3
    discount: float = 0.9
    buffer_capacity: int = 50_000
    batch_size: int = 64
    target_sync_interval: int = 500
    train_every: int = 1
    huber_delta: float = 1.0
    grad_clip: float = 10.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5
    training_episodes: int = -1


@dataclass
class ActorCriticConfig:
    hidden: list[int] = field(default_factory=lambda: [64, 64])
    learning_rate: float = 1e-3
    discount: float = 0.9
    entropy_coef: float = 0.001
    value_coef: float = 0.5
    grad_clip: float = 10.0
    training_episodes: int = 15


@dataclass
class PolicyConfig:
    optimization: OptimizationConfig = field(default_factory=OptimizationConfig)
    q_learning: QLearningConfig = field(default_factory=QLearningConfig)
    dqn: DqnConfig = field(default_factory=DqnConfig)
    actor_critic: ActorCriticConfig = field(default_factory=ActorCriticConfig)


@dataclass
class RunConfig:
    training_episodes: int = 10
    episode_length_s: float = 100.0
    eval_length_s: float = 200.0
    warmup_s: float = 0.0
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    metrics_interval_s: float = 1.0


@dataclass
class ExperimentConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    fleet: FleetConfig = field(default_factory=FleetConfig)
    tasks: TaskConfig = field(default_factory=TaskConfig)
    links: LinkConfig = field(default_factory=LinkConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    observation: ObservationConfig = field(default_factory=ObservationConfig)
    policies: PolicyConfig = field(default_factory=PolicyConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def replace(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with dotted-path overrides, e.g. ``replace(**{"fleet.vehicles": 5})``."""
        data = self.to_dict()
        for dotted, value in overrides.items():
            node = data
            *parents, leaf = dotted.split(".")
            for p in parents:
                node = node[p]
            if leaf not in node:
                raise ConfigError(f"unknown key '{dotted}'")
            node[leaf] = value
        return from_dict(data)


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"'{path or 'root'}' must be an object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown key '{where}{unknown[0]}'")
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            continue
        key = f"{path}.{name}" if path else name
        value = data[name]
        if dataclasses.is_dataclass(f.default_factory() if f.default_factory is not dataclasses.MISSING else None):
            kwargs[name] = _build(type(f.default_factory()), value, key)
        else:
            kwargs[name] = _coerce(f, value, key)
    return cls(**kwargs)


def _coerce(f: dataclasses.Field, value: Any, key: str) -> Any:
    default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"'{key}' must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{key}' must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{key}' must be a number")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"'{key}' must be finite")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"'{key}' must be a list of numbers")
        if default and isinstance(default[0], int) and not isinstance(default[0], bool):
            if not all(isinstance(v, int) for v in value):
                raise ConfigError(f"'{key}' must be a list of integers")
            return list(value)
        return [float(v) for v in value]
    return value


def from_dict(data: dict[str, Any]) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data, "")
    validate(cfg)
    return cfg


def _check(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"'{key}' {msg}")


def _check_range(values: list[float], key: str, positive: bool = True) -> None:
    _check(len(values) == 2, key, "must be a [min, max] pair")
    _check(values[0] <= values[1], key, f"has min > max ({values[0]} > {values[1]})")
    if positive:
        _check(values[0] > 0, key, "must be strictly positive")


def validate(cfg: ExperimentConfig) -> None:
    t, fl, tk, ln, rw, ob = cfg.topology, cfg.fleet, cfg.tasks, cfg.links, cfg.reward, cfg.observation
    _check(t.zones >= 1, "topology.zones", "must be >= 1")
    _check(t.fog_nodes == t.zones, "topology.fog_nodes", "must equal topology.zones (one fog node per zone)")
    _check(t.segment_length_m > 0, "topology.segment_length_m", "must be > 0")
    _check(len(t.cpu_choices_ghz) > 0 and min(t.cpu_choices_ghz) > 0,
           "topology.cpu_choices_ghz", "must be a non-empty list of positive rates")
    _check_range(t.memory_range_mb, "topology.memory_range_mb")
    _check(t.cloud_cpu_ghz > 0, "topology.cloud_cpu_ghz", "must be > 0")

    _check(fl.vehicles >= 1, "fleet.vehicles", "must be >= 1")
    _check_range(fl.speed_range_kmh, "fleet.speed_range_kmh")
    _check(fl.arrival_rate >= 0, "fleet.arrival_rate", "must be >= 0")

    _check_range(tk.size_range_mb, "tasks.size_range_mb")
    _check_range(tk.deadline_range_ms, "tasks.deadline_range_ms")
    _check(tk.cycles_per_bit > 0, "tasks.cycles_per_bit", "must be > 0")
    _check(tk.result_size_kb > 0, "tasks.result_size_kb", "must be > 0")
    _check(tk.size_range_mb[1] <= t.memory_range_mb[0], "tasks.size_range_mb",
           "max task size must fit in the smallest fog memory")

    _check(ln.v2r_rate_mbps > 0, "links.v2r_rate_mbps", "must be > 0")
    _check(ln.hop_delay_ms > 0, "links.hop_delay_ms", "must be > 0")
    _check(ln.backhaul_rtt_ms > 0, "links.backhaul_rtt_ms", "must be > 0")

    for k in ("alpha", "beta", "lambda_balance"):
        _check(getattr(rw, k) >= 0, f"reward.{k}", "must be >= 0")
    _check(rw.alpha + rw.beta + rw.lambda_balance > 0, "reward.alpha", "reward weights must not all be zero")
    _check(0 < rw.gamma_discount < 1, "reward.gamma_discount", "must lie in (0, 1)")
    _check(rw.delay_cap > 0, "reward.delay_cap", "must be > 0")
    _check(rw.balance_window_s > 0, "reward.balance_window_s", "must be > 0")

    for k in ("max_queue_len", "max_vehicles_per_zone", "max_delay_s", "utilization_window_s"):
        _check(getattr(ob, k) > 0, f"observation.{k}", "must be > 0")

    op = cfg.policies.optimization
    _check(op.epoch_s >= 0, "policies.optimization.epoch_s", "must be >= 0 (0 assigns at each arrival)")
    _check(op.slots_per_node >= 1, "policies.optimization.slots_per_node", "must be >= 1")
    q = cfg.policies.q_learning
    _check(0 < q.learning_rate <= 1, "policies.q_learning.learning_rate", "must lie in (0, 1]")
    _check(0 < q.discount < 1, "policies.q_learning.discount", "must lie in (0, 1)")
    for name in ("q_learning", "dqn"):
        p = getattr(cfg.policies, name)
        _check(0 <= p.eps_end <= p.eps_start <= 1, f"policies.{name}.eps_start", "must satisfy 0 <= eps_end <= eps_start <= 1")
        _check(0 < p.eps_decay_fraction <= 1, f"policies.{name}.eps_decay_fraction", "must lie in (0, 1]")
    d = cfg.policies.dqn
    _check(d.batch_size >= 1, "policies.dqn.batch_size", "must be >= 1")
    _check(d.buffer_capacity >= d.batch_size, "policies.dqn.buffer_capacity", "must be >= batch_size")
    _check(d.target_sync_interval >= 1, "policies.dqn.target_sync_interval", "must be >= 1")
    _check(d.train_every >= 1, "policies.dqn.train_every", "must be >= 1")
    for name in ("dqn", "actor_critic"):
        p = getattr(cfg.policies, name)
        _check(p.learning_rate > 0, f"policies.{name}.learning_rate", "must be > 0")
        _check(0 < p.discount < 1, f"policies.{name}.discount", "must lie in (0, 1)")
        _check(len(p.hidden) >= 1 and min(p.hidden) >= 1, f"policies.{name}.hidden", "must list positive layer widths")

    for name in ("q_learning", "dqn", "actor_critic"):
        _check(getattr(cfg.policies, name).training_episodes >= -1, f"policies.{name}.training_episodes",
               "must be >= 0, or -1 to inherit run.training_episodes")
    r = cfg.run
    _check(r.training_episodes >= 0, "run.training_episodes", "must be >= 0")
    _check(r.episode_length_s > 0, "run.episode_length_s", "must be > 0")
    _check(r.eval_length_s > 0, "run.eval_length_s", "must be > 0")
    _check(0 <= r.warmup_s < r.eval_length_s, "run.warmup_s", "must lie in [0, eval_length_s)")
    _check(len(r.seeds) >= 1, "run.seeds", "must list at least one seed")
    _check(r.metrics_interval_s > 0, "run.metrics_interval_s", "must be > 0")


def training_episodes(cfg: ExperimentConfig, policy: str) -> int:
    """Episode budget for a learner: its own override, else ``run.training_episodes``."""
    own = getattr(cfg.policies, policy.replace("-", "_")).training_episodes
    return cfg.run.training_episodes if own < 0 else own


def with_training_episodes(cfg: ExperimentConfig, episodes: int) -> ExperimentConfig:
    """Same config with every learner's budget set to ``episodes``."""
    return cfg.replace(**{"run.training_episodes": episodes, "policies.q_learning.training_episodes": -1,
                          "policies.dqn.training_episodes": -1, "policies.actor_critic.training_episodes": -1})


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    if not text.strip():
        return ExperimentConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in '{path}': {exc}") from exc
    return from_dict(data)
