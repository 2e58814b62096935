"""Seeded train / eval / compare pipelines on top of :class:`~vfog.env.Simulation`."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .config import ExperimentConfig, training_episodes
from .env import Simulation, StateEncoder
from .metrics import MetricsRecord, balance_category, export_csv, export_json, records_to_csv
from .policies import (
    ActorCriticAgent, DqnAgent, GreedyPolicy, LinearEpsilon, OptimizationPolicy,
    QLearningPolicy, QTable,
)
from .policies.base import Policy
from .simcore import RngStreams

log = logging.getLogger(__name__)

LEARNERS = ("q-learning", "dqn", "actor-critic")
BASELINES = ("greedy", "optimization")
ALL_POLICIES = BASELINES + LEARNERS
ARTIFACT_SUFFIX = {"q-learning": ".qtable.csv", "dqn": ".dqn.mlp", "actor-critic": ".ac.mlp"}


class PolicyLoadError(ValueError):
    pass


def hardware_streams(seed: int) -> RngStreams:
    """Fog hardware is fixed per seed and shared by every episode and evaluation."""
    return RngStreams(seed, "hardware")


def expected_decisions(cfg: ExperimentConfig, policy: str) -> int:
    per_episode = cfg.fleet.vehicles * cfg.fleet.arrival_rate * cfg.run.episode_length_s
    return int(per_episode * training_episodes(cfg, policy))


def make_policy(name: str, cfg: ExperimentConfig, seed: int) -> Policy:
    pc = cfg.policies
    if name == "greedy":
        return GreedyPolicy()
    if name == "optimization":
        return OptimizationPolicy(pc.optimization.slots_per_node)
    streams = RngStreams(seed, name)
    dim = StateEncoder(cfg).dim
    total = max(1, expected_decisions(cfg, name))
    if name == "q-learning":
        q = pc.q_learning
        table = QTable(learning_rate=q.learning_rate, discount=q.discount, visit_decay=q.visit_decay)
        eps = LinearEpsilon(q.eps_start, q.eps_end, int(q.eps_decay_fraction * total))
        return QLearningPolicy(table, rng=streams["exploration"], epsilon=eps)
    if name == "dqn":
        d = pc.dqn
        return DqnAgent(
            dim, hidden=d.hidden, rng=streams["exploration"],
            init_rng=streams["nn-init"].generator, replay_rng=streams["replay"].generator,
            learning_rate=d.learning_rate, discount=d.discount,
            buffer_capacity=d.buffer_capacity, batch_size=d.batch_size,
            target_sync_interval=d.target_sync_interval, train_every=d.train_every,
            huber_delta=d.huber_delta, grad_clip=d.grad_clip,
            epsilon=LinearEpsilon(d.eps_start, d.eps_end, int(d.eps_decay_fraction * total)),
        )
    if name == "actor-critic":
        a = pc.actor_critic
        return ActorCriticAgent(
            dim, hidden=a.hidden, rng=streams["exploration"], init_rng=streams["nn-init"].generator,
            learning_rate=a.learning_rate, discount=a.discount, entropy_coef=a.entropy_coef,
            value_coef=a.value_coef, grad_clip=a.grad_clip,
        )
    raise ValueError(f"unknown policy '{name}' (expected one of {', '.join(ALL_POLICIES)})")


def save_policy(policy: Policy, path: str | Path) -> Path:
    path = Path(path)
    policy.save(path)
    return path


def load_policy(name: str, path: str | Path, cfg: ExperimentConfig | None = None) -> Policy:
    loaders = {"q-learning": QLearningPolicy.load, "dqn": DqnAgent.load, "actor-critic": ActorCriticAgent.load}
    if name not in loaders:
        raise PolicyLoadError(f"'{name}' has no persisted artifact")
    try:
        policy = loaders[name](path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise PolicyLoadError(f"cannot load {name} artifact '{path}': {exc}") from exc
    if cfg is not None and name != "q-learning":
        dim = StateEncoder(cfg).dim
        net = policy.online if name == "dqn" else policy.net
        if net.layer_sizes[0] != dim:
            raise PolicyLoadError(
                f"artifact '{path}' expects state dimension {net.layer_sizes[0]}, config gives {dim}")
    return policy.eval()


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- single runs --------------------------------------------------------------


@dataclass
class TrainingResult:
    policy: Policy
    curve: list[dict] = field(default_factory=list)


def run_episode(cfg: ExperimentConfig, policy: Policy, seed: int, streams: RngStreams,
                horizon: float, warmup: float = 0.0, record_trace: bool = False):
    sim = Simulation(cfg, policy, streams, hardware_streams(seed), horizon=horizon, seed=seed,
                     warmup=warmup, record_trace=record_trace)
    return sim.run()


def run_training(cfg: ExperimentConfig, policy_name: str, seed: int) -> TrainingResult:
    if policy_name not in LEARNERS:
        raise ValueError(f"'{policy_name}' does not learn; train accepts {', '.join(LEARNERS)}")
    policy = make_policy(policy_name, cfg, seed).train()
    curve = []
    for ep in range(training_episodes(cfg, policy_name)):
        res = run_episode(cfg, policy, seed, RngStreams(seed, f"train/ep{ep}"), cfg.run.episode_length_s)
        rec = res.record
        curve.append({
            "episode": ep,
            "total_reward": res.total_reward,
            "mean_reward": res.total_reward / res.decisions if res.decisions else 0.0,
            "avg_latency": rec.avg_latency,
            "success_rate": rec.success_rate,
        })
        log.debug("%s seed=%d ep=%d reward/decision=%.4f success=%s", policy_name, seed, ep,
                  curve[-1]["mean_reward"], rec.success_rate)
    policy.eval()
    return TrainingResult(policy, curve)


def run_eval(cfg: ExperimentConfig, policy: Policy | str, seed: int, record_trace: bool = False):
    if isinstance(policy, str):
        if policy not in BASELINES:
            raise ValueError(f"'{policy}' must be trained first; pass a loaded artifact")
        policy = make_policy(policy, cfg, seed)
    policy.eval()
    res = run_episode(cfg, policy, seed, RngStreams(seed, "eval"), cfg.run.eval_length_s,
                      warmup=cfg.run.warmup_s, record_trace=record_trace)
    return res if record_trace else res.record


def write_curve(curve: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["episode", "total_reward", "mean_reward", "avg_latency", "success_rate"],
                           lineterminator="\n")
        w.writeheader()
        for row in curve:
            w.writerow({k: ("" if v is None else repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})


# -- comparison -----------------------------------------------------------------


def _sub_run(cfg_json: str, policy_name: str, seed: int, out_dir: str | None) -> dict:
    cfg = ExperimentConfig() if cfg_json is None else _cfg_from_json(cfg_json)
    artifact = None
    if policy_name in LEARNERS:
        result = run_training(cfg, policy_name, seed)
        policy = result.policy
        if out_dir is not None:
            base = Path(out_dir)
            artifact = base / "policies" / f"{policy_name}-seed{seed}{ARTIFACT_SUFFIX[policy_name]}"
            save_policy(policy, artifact)
            write_curve(result.curve, base / "curves" / f"{policy_name}-seed{seed}.csv")
    else:
        policy = make_policy(policy_name, cfg, seed)
    record = run_eval(cfg, policy, seed)
    return {"record": asdict(record), "artifact": None if artifact is None else str(artifact)}


def _cfg_from_json(text: str) -> ExperimentConfig:
    from .config import from_dict
    return from_dict(json.loads(text))


@dataclass
class PolicySummary:
    policy: str
    n: int
    latency_mean: float
    latency_std: float
    success_mean: float
    success_std: float
    jain_mean: float
    jain_std: float
    variance_mean: float
    utilization_mean: float
    balance_label: str
    latency_improvement_vs_greedy: float | None = None
    success_gain_vs_greedy: float | None = None


@dataclass
class ComparisonReport:
    summaries: dict[str, PolicySummary]
    latency_order: list[str]
    success_order: list[str]
    records: list[MetricsRecord]

    def to_dict(self) -> dict:
        return {
            "summaries": {k: asdict(v) for k, v in self.summaries.items()},
            "latency_order": self.latency_order,
            "success_order": self.success_order,
        }


def _mean_std(xs: list[float]) -> tuple[float, float]:
    if not xs:
        return math.nan, math.nan
    return statistics.fmean(xs), (statistics.stdev(xs) if len(xs) > 1 else 0.0)


def summarize(records: list[MetricsRecord]) -> ComparisonReport:
    """Aggregate exported records per policy (means and standard deviations across seeds)."""
    by_policy: dict[str, list[MetricsRecord]] = {}
    for r in records:
        by_policy.setdefault(r.policy, []).append(r)
    summaries = {}
    for name, recs in by_policy.items():
        lat = _mean_std([r.avg_latency for r in recs if r.avg_latency is not None])
        suc = _mean_std([r.success_rate for r in recs if r.success_rate is not None])
        jain = _mean_std([r.load_balance_jain for r in recs])
        summaries[name] = PolicySummary(
            policy=name, n=len(recs),
            latency_mean=lat[0], latency_std=lat[1],
            success_mean=suc[0], success_std=suc[1],
            jain_mean=jain[0], jain_std=jain[1],
            variance_mean=statistics.fmean(r.load_variance for r in recs),
            utilization_mean=statistics.fmean(r.mean_utilization for r in recs),
            balance_label=balance_category(jain[0]),
        )
    greedy = summaries.get("greedy")
    if greedy is not None:
        for s in summaries.values():
            s.latency_improvement_vs_greedy = 1.0 - s.latency_mean / greedy.latency_mean
            s.success_gain_vs_greedy = s.success_mean - greedy.success_mean
    order = [p for p in ALL_POLICIES if p in summaries] + sorted(set(summaries) - set(ALL_POLICIES))
    latency_order = sorted(order, key=lambda p: -summaries[p].latency_mean)
    success_order = sorted(order, key=lambda p: summaries[p].success_mean)
    return ComparisonReport(summaries, latency_order, success_order, records)


def run_compare(cfg: ExperimentConfig, seeds: list[int], out_dir: str | Path | None = None,
                workers: int = 1, policies: tuple[str, ...] = ALL_POLICIES) -> ComparisonReport:
    if len(seeds) < 3:
        raise ValueError("compare needs at least 3 seeds")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "policies").mkdir(parents=True, exist_ok=True)
        (out / "curves").mkdir(parents=True, exist_ok=True)
    jobs = [(p, s) for s in seeds for p in policies]
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    out_str = None if out is None else str(out)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sub_run, cfg_json, p, s, out_str) for p, s in jobs]
            results = [f.result() for f in futures]
    else:
        results = [_sub_run(cfg_json, p, s, out_str) for p, s in jobs]
    records = [MetricsRecord(**r["record"]) for r in results]
    report = summarize(records)
    if out is not None:
        write_compare_outputs(report, out)
    return report


def write_compare_outputs(report: ComparisonReport, out: Path) -> None:
    export_csv(report.records, out / "metrics.csv")
    export_json(report.records, out / "metrics.json")
    (out / "comparison.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    for fname, field_mean, field_std in (
        ("fig3_latency.csv", "latency_mean", "latency_std"),
        ("fig4_success.csv", "success_mean", "success_std"),
    ):
        with open(out / fname, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", field_mean, field_std])
            for name in [p for p in ALL_POLICIES if p in report.summaries]:
                s = report.summaries[name]
                w.writerow([name, repr(getattr(s, field_mean)), repr(getattr(s, field_std))])


def records_csv_text(records: list[MetricsRecord]) -> str:
    return records_to_csv(records)
