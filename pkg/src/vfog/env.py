"""Decision-process view of the world: observations, tabular keys, reward and the run loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .config import ExperimentConfig
from .metrics import MetricsCollector, MetricsRecord, balance_index
from .simcore import EventKind, Kernel, RngStreams
from .world import N_ACTIONS, Action, Outcome, Task, World

if TYPE_CHECKING:
    from .policies.base import Policy

__all__ = [
    "RewardWeights", "Transition", "Observation", "StateEncoder", "balance_index",
    "compute_reward", "delay_norm", "Simulation", "EpisodeResult",
]

SIZE_CLASSES = 3
DEADLINE_CLASSES = 3
QUEUE_LEVELS = 4
QUEUE_THRESHOLDS = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0
    beta: float = 1.0
    lambda_balance: float = 1.0
    gamma_discount: float = 0.9

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.lambda_balance) < 0:
            raise ValueError("reward weights must be non-negative")
        if self.alpha + self.beta + self.lambda_balance == 0:
            raise ValueError("reward weights must not all be zero")
        if not 0 < self.gamma_discount < 1:
            raise ValueError("gamma_discount must lie in (0, 1)")


def delay_norm(outcome: Outcome, latency: float | None, deadline: float, cap: float) -> float:
    if outcome == Outcome.REJECTED or latency is None:
        return cap
    return min(latency / deadline, cap)


def compute_reward(delay: float, success: bool, balance: float, weights: RewardWeights) -> float:
    return weights.alpha * -delay + weights.beta * float(success) + weights.lambda_balance * balance


@dataclass
class Transition:
    state: np.ndarray
    key: tuple
    action: int
    reward: float
    next_state: np.ndarray
    next_key: tuple
    done: bool


@dataclass
class Observation:
    vector: np.ndarray | None
    key: tuple | None
    legal: tuple[int, ...]
    task: Task
    world: World
    now: float


class StateEncoder:
    """Builds the normalized state vector and its tabular key.

    Per-node blocks are rotated so that slot 0 is the task's origin node,
    slot 1 its right neighbour and slot ``n-1`` its left neighbour; the
    origin one-hot keeps absolute position recoverable.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.n = cfg.topology.zones
        ob = cfg.observation
        self.max_queue = ob.max_queue_len
        self.max_vehicles = ob.max_vehicles_per_zone
        self.max_delay = ob.max_delay_s
        self.window = ob.utilization_window_s
        self.size_lo, self.size_hi = (x * 1e6 for x in cfg.tasks.size_range_mb)
        self.dl_lo, self.dl_hi = (x / 1000.0 for x in cfg.tasks.deadline_range_ms)
        n = self.n
        # capacity(n) + vehicles(n) + queue(n + cloud) + delay + size + deadline + one-hot(n)
        self.dim = 4 * n + 4
        self.o_cap, self.o_veh, self.o_queue = 0, n, 2 * n
        self.o_cloud = 3 * n
        self.o_delay = 3 * n + 1
        self.o_size = 3 * n + 2
        self.o_deadline = 3 * n + 3
        self.o_onehot = 3 * n + 4
        self.dim = 4 * n + 4

    @staticmethod
    def _unit(x: float) -> float:
        if x != x:  # NaN
            return 0.0
        return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)

    def _span(self, x: float, lo: float, hi: float) -> float:
        return self._unit((x - lo) / (hi - lo)) if hi > lo else 0.0

    def observe(self, world: World, task: Task, now: float) -> np.ndarray:
        n = self.n
        u = self._unit
        v = np.empty(self.dim)
        for j in range(n):
            i = (task.origin_zone + j) % n
            node = world.nodes[i]
            v[self.o_cap + j] = u(1.0 - node.busy_in_window(now, self.window) / self.window)
            v[self.o_veh + j] = u(world.zone_population[i] / self.max_vehicles)
            v[self.o_queue + j] = u(node.pending_count() / self.max_queue)
        v[self.o_cloud] = u(world.cloud.pending_count() / self.max_queue)
        v[self.o_delay] = u(world.delay_estimate / self.max_delay)
        v[self.o_size] = self._span(task.size, self.size_lo, self.size_hi)
        v[self.o_deadline] = self._span(task.deadline, self.dl_lo, self.dl_hi)
        v[self.o_onehot:] = 0.0
        v[self.o_onehot + task.origin_zone] = 1.0
        return v

    @staticmethod
    def queue_level(q: float) -> int:
        level = 0
        for th in QUEUE_THRESHOLDS:
            if q >= th:
                level += 1
        return level

    @staticmethod
    def size_class(x: float, classes: int = SIZE_CLASSES) -> int:
        return min(classes - 1, int(x * classes))

    def discretize(self, v: np.ndarray) -> tuple:
        n = self.n
        origin = int(np.argmax(v[self.o_onehot:self.o_onehot + n]))
        q = self.o_queue
        left = q + (n - 1 if n > 1 else 0)
        right = q + (1 if n > 1 else 0)
        return (
            origin,
            self.size_class(float(v[self.o_size])),
            self.size_class(float(v[self.o_deadline]), DEADLINE_CLASSES),
            self.queue_level(float(v[q])),
            self.queue_level(float(v[left])),
            self.queue_level(float(v[right])),
        )

    def key_space_size(self) -> int:
        return self.n * SIZE_CLASSES * DEADLINE_CLASSES * QUEUE_LEVELS ** 3


@dataclass
class _PendingDecision:
    state: np.ndarray
    key: tuple
    action: int
    reward: float | None = None
    next_state: np.ndarray | None = None
    next_key: tuple | None = None


@dataclass
class EpisodeResult:
    record: MetricsRecord
    total_reward: float
    transitions: int
    decisions: int
    trace: list | None = None


@dataclass
class Simulation:
    """One seeded run of the world under a policy.

    Learning policies in training mode receive a :class:`Transition` per
    resolved decision: the reward of the decision's own task and the
    observation at the next decision of the same controller.
    """

    cfg: ExperimentConfig
    policy: "Policy"
    streams: RngStreams
    topology_streams: RngStreams | None = None
    horizon: float = 200.0
    seed: int = 0
    warmup: float = 0.0
    record_trace: bool = False
    kernel: Kernel = field(init=False)
    world: World = field(init=False)

    def __post_init__(self) -> None:
        self.kernel = Kernel(self.horizon)
        self.world = World(self.cfg, self.kernel, self.streams, self.topology_streams)
        self.encoder = StateEncoder(self.cfg)
        rw = self.cfg.reward
        self.weights = RewardWeights(rw.alpha, rw.beta, rw.lambda_balance, rw.gamma_discount)
        self.metrics = MetricsCollector(since=self.warmup)
        self.total_reward = 0.0
        self.transitions = 0
        self.decisions = 0
        self._pending: dict[int, _PendingDecision] = {}
        self._last: _PendingDecision | None = None
        self._batch: list[Task] = []
        self.trace: list | None = [] if self.record_trace else None
        self._wants_obs = getattr(self.policy, "needs_observation", True)
        self._learning = bool(getattr(self.policy, "learns", False)) and self.policy.training

    # -- reward -------------------------------------------------------------

    def reward_for(self, task: Task, now: float) -> float:
        rw = self.cfg.reward
        dn = delay_norm(task.outcome, task.latency, task.deadline, rw.delay_cap)
        window = rw.balance_window_s
        shares = [b / window for b in self.world.window_busy(now, window)]
        return compute_reward(dn, task.outcome == Outcome.COMPLETED, balance_index(shares), self.weights)

    def _emit(self, rec: _PendingDecision, done: bool) -> None:
        nxt, nkey = (rec.next_state, rec.next_key) if not done else (rec.state, rec.key)
        self.policy.learn(Transition(rec.state, rec.key, rec.action, rec.reward, nxt, nkey, done))
        self.transitions += 1

    def _resolve(self, task: Task, now: float) -> None:
        self.metrics.record_outcome(task)
        if not self._wants_obs and not self._learning:
            return
        rec = self._pending.pop(task.id, None)
        if rec is None:
            return
        r = self.reward_for(task, now)
        self.total_reward += r
        if not self._learning:
            return
        rec.reward = r
        if rec.next_state is not None:
            self._emit(rec, done=False)

    # -- decisions -----------------------------------------------------------

    def _observation(self, task: Task, now: float) -> Observation:
        if self._wants_obs:
            vec = self.encoder.observe(self.world, task, now)
            key = self.encoder.discretize(vec)
        else:
            vec = key = None
        return Observation(vec, key, self.world.legal_actions(task), task, self.world, now)

    def _decide(self, task: Task, now: float) -> None:
        obs = self._observation(task, now)
        action = int(self.policy.decide(obs))
        if action not in obs.legal:
            raise ValueError(f"policy {self.policy.name} chose illegal action {action}")
        self._commit(task, action, now, obs)

    def _commit(self, task: Task, action: int, now: float, obs: Observation | None) -> None:
        self.decisions += 1
        if obs is not None and obs.vector is not None:
            rec = _PendingDecision(obs.vector, obs.key, action)
            if self._learning and self._last is not None:
                last = self._last
                last.next_state, last.next_key = obs.vector, obs.key
                if last.reward is not None:
                    self._emit(last, done=False)
            self._last = rec
            self._pending[task.id] = rec
        self.world.dispatch(task, action, now)
        if self.trace is not None:
            self.trace.append(("decide", now, task.id, action))

    def _decide_batch(self, now: float) -> None:
        batch, self._batch = self._batch, []
        if not batch:
            return
        assignment = self.policy.assign_batch(batch, self.world, now)
        for task in batch:
            self._commit(task, int(assignment[task.id]), now, None)

    # -- main loop -----------------------------------------------------------

    def run(self) -> EpisodeResult:
        k, w = self.kernel, self.world
        w.schedule_first_events()
        k.at(0.0, EventKind.METRICS_SAMPLE)
        batched = bool(getattr(self.policy, "batched", False))
        epoch = self.cfg.policies.optimization.epoch_s
        immediate = batched and epoch <= 0  # zero-length epoch: each arrival is its own batch
        if batched and not immediate:
            k.at(epoch, EventKind.DECISION_EPOCH)
        sample_dt = self.cfg.run.metrics_interval_s
        window = self.cfg.reward.balance_window_s
        arrivals = self.streams["arrivals"]
        mobility = self.streams["mobility"]
        tasks = w.tasks
        trace = self.trace
        K_ARR, K_TX, K_PROC = EventKind.TASK_ARRIVAL, EventKind.TRANSMISSION_DONE, EventKind.PROCESSING_DONE
        K_HO, K_EPOCH = EventKind.VEHICLE_HANDOVER, EventKind.DECISION_EPOCH

        while True:
            ev = k.pop_next()
            if ev is None:
                break
            now = ev.fire_time
            kind = ev.kind
            if trace is not None:
                trace.append((kind.name, now, ev.sequence_number, ev.payload))
            if kind == K_ARR:
                vehicle = w.vehicles[ev.payload]
                task = w.new_task(vehicle, now)
                self.metrics.record_arrival(task)
                w.spawn_arrival(vehicle, arrivals)
                if batched:
                    self._batch.append(task)
                    if immediate:
                        self._decide_batch(now)
                else:
                    self._decide(task, now)
            elif kind == K_TX:
                task = tasks[ev.payload]
                if not w.on_transmission_done(task, now):
                    task.completed_at = None
                    self._resolve(task, now)
            elif kind == K_PROC:
                task = tasks[ev.payload]
                w.complete_task(task, now)
                self._resolve(task, now)
            elif kind == K_HO:
                vehicle = w.vehicles[ev.payload]
                w.advance_vehicle(vehicle, now, mobility)
                k.at(vehicle.next_handover_time, K_HO, vehicle.id)
            elif kind == K_EPOCH:
                self._decide_batch(now)
                k.at(now + epoch, K_EPOCH)
            else:
                self.metrics.sample(w, window)
                k.at(now + sample_dt, EventKind.METRICS_SAMPLE)

        if self._learning and self._last is not None and self._last.reward is not None \
                and self._last.next_state is None:
            self._emit(self._last, done=True)
        if hasattr(self.policy, "end_episode"):
            self.policy.end_episode()
        record = self.metrics.finish(w, getattr(self.policy, "name", "policy"), self.seed)
        return EpisodeResult(record, self.total_reward, self.transitions, self.decisions, self.trace)
