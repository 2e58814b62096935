"""Run metrics: latency, success rate, load balance and utilization, plus CSV/JSON export."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .world import FogNode, Outcome, Task


def balance_index(loads: Sequence[float]) -> float:
    """Jain's fairness index, 1.0 for an all-zero load vector."""
    if len(loads) == 0:
        raise ValueError("balance_index needs at least one load")
    s = math.fsum(loads)
    sq = math.fsum(x * x for x in loads)
    if sq == 0.0:
        return 1.0
    return min(1.0, (s * s) / (len(loads) * sq))


def load_variance(loads: Sequence[float]) -> float:
    n = len(loads)
    mean = math.fsum(loads) / n
    return math.fsum((x - mean) ** 2 for x in loads) / n


def balance_category(jain: float) -> str:
    """Human-readable bucket used only in summaries."""
    if jain < 0.5:
        return "Low"
    if jain < 0.7:
        return "Moderate"
    if jain <= 0.9:
        return "High"
    return "Very High"


def utilization(node: FogNode, elapsed: float) -> float:
    if elapsed <= 0:
        raise ValueError("elapsed must be positive")
    return min(1.0, max(0.0, node.busy_time_until(elapsed) / elapsed))


def sampled_balance(world, window: float) -> tuple[float, float]:
    """Jain index and variance of per-node busy-time shares over the trailing window."""
    now = world.kernel.now()
    shares = [b / window for b in world.window_busy(now, window)]
    return balance_index(shares), load_variance(shares)


@dataclass
class MetricsRecord:
    policy: str
    seed: int
    avg_latency: float | None
    success_rate: float | None
    load_balance_jain: float
    load_variance: float
    mean_utilization: float
    node_utilization: list[float]
    generated: int
    completed: int
    missed: int
    rejected: int
    in_flight: int

    def to_row(self) -> dict:
        row = dataclasses.asdict(self)
        row["node_utilization"] = ";".join(repr(float(u)) for u in self.node_utilization)
        for k in ("avg_latency", "success_rate"):
            row[k] = "" if row[k] is None else repr(float(row[k]))
        for k in ("load_balance_jain", "load_variance", "mean_utilization"):
            row[k] = repr(float(row[k]))
        return row


CSV_COLUMNS = [f.name for f in dataclasses.fields(MetricsRecord)]


class ConservationError(AssertionError):
    pass


@dataclass
class MetricsCollector:
    """Accumulates outcomes and periodic balance samples for one run.

    Only tasks created at or after ``since`` are counted, so a warm-up
    prefix can be excluded.
    """

    since: float = 0.0
    latency_sum: float = 0.0
    generated: int = 0
    completed: int = 0
    missed: int = 0
    rejected: int = 0
    jain_samples: list[float] = field(default_factory=list)
    variance_samples: list[float] = field(default_factory=list)
    _seen: set[int] = field(default_factory=set)

    def record_arrival(self, task: Task) -> None:
        if task.created_at >= self.since:
            self.generated += 1

    def record_outcome(self, task: Task) -> None:
        if task.id in self._seen:
            raise ValueError(f"task {task.id} recorded twice")
        if task.outcome == Outcome.PENDING:
            raise ValueError(f"task {task.id} is not terminal")
        self._seen.add(task.id)
        if task.created_at < self.since:
            return
        if task.outcome == Outcome.COMPLETED:
            self.completed += 1
            self.latency_sum += task.latency
        elif task.outcome == Outcome.DEADLINE_MISS:
            self.missed += 1
        else:
            self.rejected += 1

    @property
    def in_flight(self) -> int:
        return self.generated - self.completed - self.missed - self.rejected

    @property
    def avg_latency(self) -> float | None:
        return self.latency_sum / self.completed if self.completed else None

    @property
    def success_rate(self) -> float | None:
        return self.completed / self.generated if self.generated else None

    def sample(self, world, window: float) -> None:
        if world.in_flight != world.generated - world.completed - world.missed - world.rejected or world.in_flight < 0:
            raise ConservationError("world task counts do not balance")
        if self.in_flight < 0:
            raise ConservationError("metrics task counts do not balance")
        if world.kernel.now() < self.since + window:
            return
        jain, var = sampled_balance(world, window)
        self.jain_samples.append(jain)
        self.variance_samples.append(var)

    def finish(self, world, policy: str, seed: int) -> MetricsRecord:
        horizon = world.kernel.horizon
        elapsed = horizon if math.isfinite(horizon) else world.kernel.now()
        utils = [utilization(node, elapsed) for node in world.nodes] if elapsed > 0 else [0.0] * len(world.nodes)
        jain = math.fsum(self.jain_samples) / len(self.jain_samples) if self.jain_samples else 1.0
        var = math.fsum(self.variance_samples) / len(self.variance_samples) if self.variance_samples else 0.0
        return MetricsRecord(
            policy=policy,
            seed=seed,
            avg_latency=self.avg_latency,
            success_rate=self.success_rate,
            load_balance_jain=float(jain),
            load_variance=float(var),
            mean_utilization=math.fsum(utils) / len(utils),
            node_utilization=[float(u) for u in utils],
            generated=self.generated,
            completed=self.completed,
            missed=self.missed,
            rejected=self.rejected,
            in_flight=self.in_flight,
        )


def records_to_csv(records: Iterable[MetricsRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.to_row())
    return buf.getvalue()


def export_csv(records: Sequence[MetricsRecord], path: str | Path) -> None:
    if not records:
        raise ValueError("export_csv needs at least one record")
    path = Path(path)
    try:
        path.write_text(records_to_csv(records))
    except OSError as exc:
        raise OSError(f"cannot write metrics CSV to '{path}': {exc.strerror or exc}") from exc


def _opt_float(s: str) -> float | None:
    return None if s == "" else float(s)


def read_csv(path: str | Path) -> list[MetricsRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(MetricsRecord(
                policy=row["policy"],
                seed=int(row["seed"]),
                avg_latency=_opt_float(row["avg_latency"]),
                success_rate=_opt_float(row["success_rate"]),
                load_balance_jain=float(row["load_balance_jain"]),
                load_variance=float(row["load_variance"]),
                mean_utilization=float(row["mean_utilization"]),
                node_utilization=[float(x) for x in row["node_utilization"].split(";") if x],
                generated=int(row["generated"]),
                completed=int(row["completed"]),
                missed=int(row["missed"]),
                rejected=int(row["rejected"]),
                in_flight=int(row["in_flight"]),
            ))
    return out


def export_json(records: Sequence[MetricsRecord], path: str | Path) -> None:
    Path(path).write_text(json.dumps([dataclasses.asdict(r) for r in records], indent=2) + "\n")
