"""Physical model: ring of zones with one fog node each, a cloud tier, vehicles and tasks."""

from __future__ import annotations

import bisect
import enum
import math
from collections import deque
from dataclasses import dataclass, field

from .config import GHZ, MB, ExperimentConfig
from .simcore import EventKind, Kernel, RngStream, RngStreams


class Outcome(enum.IntEnum):
    PENDING = 0
    COMPLETED = 1
    DEADLINE_MISS = 2
    REJECTED = 3


class Action(enum.IntEnum):
    LOCAL = 0
    LEFT = 1
    RIGHT = 2
    CLOUD = 3


N_ACTIONS = len(Action)


@dataclass(frozen=True)
class Route:
    """Where a task goes: ``hops`` ring hops to fog node ``node``, or the cloud."""

    node: int | None  # None means cloud
    hops: int = 0

    @property
    def is_cloud(self) -> bool:
        return self.node is None


CLOUD_ROUTE = Route(None, 0)


@dataclass
class Zone:
    id: int
    segment_length: float
    neighbors: tuple[int, int]  # (left, right)
    fog_node: int


@dataclass
class FogNode:
    id: int
    cpu_rate: float
    memory_capacity: float = math.inf
    queue: deque = field(default_factory=deque)
    busy_until: float = 0.0
    cumulative_busy_time: float = 0.0  # total service time ever scheduled
    queued_bytes: float = 0.0
    inflight: int = 0
    inflight_cycles: float = 0.0
    inflight_bytes: float = 0.0
    # service spans in start order with running busy totals, for O(log n) window queries
    span_starts: list = field(default_factory=list)
    span_ends: list = field(default_factory=list)
    span_cum: list = field(default_factory=list)  # busy time up to and including span i

    def __post_init__(self) -> None:
        if not self.cpu_rate > 0:
            raise ValueError("cpu_rate must be positive")
        if not self.memory_capacity > 0:
            raise ValueError("memory_capacity must be positive")

    def busy_time_until(self, t: float) -> float:
        # scheduled work after the last enqueue is one contiguous block ending at busy_until
        return self.cumulative_busy_time - max(0.0, self.busy_until - t)

    def add_span(self, start: float, end: float) -> None:
        """Record a service span; spans never overlap and arrive in start order (FIFO)."""
        prev = self.span_cum[-1] if self.span_cum else 0.0
        self.span_starts.append(start)
        self.span_ends.append(end)
        self.span_cum.append(prev + (end - start))

    def clear_spans(self) -> None:
        self.span_starts.clear()
        self.span_ends.clear()
        self.span_cum.clear()

    def _busy_before(self, x: float) -> float:
        i = bisect.bisect_right(self.span_ends, x)  # spans [0, i) finished by x
        done = self.span_cum[i - 1] if i else 0.0
        if i < len(self.span_starts) and self.span_starts[i] < x:
            done += x - self.span_starts[i]
        return done

    def busy_in_window(self, t: float, window: float) -> float:
        if not self.span_starts:
            return 0.0
        return self._busy_before(t) - self._busy_before(t - window)

    def backlog(self, t: float) -> float:
        return max(0.0, self.busy_until - t)

    def pending_count(self) -> int:
        return len(self.queue) + self.inflight


@dataclass
class CloudNode(FogNode):
    backhaul_rtt: float = 0.1

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.backhaul_rtt > 0:
            raise ValueError("backhaul_rtt must be positive")


@dataclass
class Vehicle:
    id: int
    zone: int
    speed: float  # m/s
    arrival_rate: float
    next_handover_time: float = 0.0


@dataclass
class Task:
    id: int
    vehicle: int
    origin_zone: int
    size: float  # bytes
    cycles_required: float
    deadline: float  # seconds, relative to created_at
    created_at: float
    decided_at: float | None = None
    tx_done_at: float | None = None
    completed_at: float | None = None
    outcome: Outcome = Outcome.PENDING
    action: int | None = None
    route: Route | None = None
    start_at: float | None = None

    @property
    def latency(self) -> float | None:
        if self.completed_at is None:
            return None
        return self.completed_at - self.created_at

    @property
    def size_bits(self) -> float:
        return self.size * 8.0


@dataclass(frozen=True)
class LinkModel:
    v2r_rate: float  # bits/s
    inter_zone_hop_delay: float  # s per hop
    backhaul_rtt: float  # s
    result_bits: float = 80_000.0

    def __post_init__(self) -> None:
        if min(self.v2r_rate, self.inter_zone_hop_delay, self.backhaul_rtt, self.result_bits) <= 0:
            raise ValueError("link rates and delays must be strictly positive")


def transmission_delay(task: Task, route: Route, link: LinkModel) -> float:
    base = task.size_bits / link.v2r_rate
    if route.is_cloud:
        return base + link.backhaul_rtt / 2.0
    return base + route.hops * link.inter_zone_hop_delay


def downlink_delay(route: Route, link: LinkModel, extra_hops: int = 0) -> float:
    base = link.result_bits / link.v2r_rate + extra_hops * link.inter_zone_hop_delay
    if route.is_cloud:
        return base + link.backhaul_rtt / 2.0
    return base + route.hops * link.inter_zone_hop_delay


def processing_time(task: Task, node: FogNode) -> float:
    return task.cycles_required / node.cpu_rate


def ring_distance(a: int, b: int, n: int) -> int:
    d = abs(a - b) % n
    return min(d, n - d)


class World:
    """Mutable world state plus the event handlers that evolve it.

    Everything random is drawn from the supplied streams: ``topology`` for
    hardware, ``fleet``/``arrivals``/``mobility`` for traffic.
    """

    def __init__(self, cfg: ExperimentConfig, kernel: Kernel, streams: RngStreams,
                 topology_streams: RngStreams | None = None):
        self.cfg = cfg
        self.kernel = kernel
        self.streams = streams
        topo_rng = (topology_streams or streams)["topology"]
        t, fl, tk, ln = cfg.topology, cfg.fleet, cfg.tasks, cfg.links

        self.link = LinkModel(
            v2r_rate=ln.v2r_rate_mbps * 1e6,
            inter_zone_hop_delay=ln.hop_delay_ms / 1000.0,
            backhaul_rtt=ln.backhaul_rtt_ms / 1000.0,
            result_bits=tk.result_size_kb * 1000.0 * 8.0,
        )
        n = t.zones
        self.n_zones = n
        self.zones = [
            Zone(i, t.segment_length_m, ((i - 1) % n, (i + 1) % n), i) for i in range(n)
        ]
        mem_lo, mem_hi = t.memory_range_mb
        self.nodes = [
            FogNode(i, topo_rng.choice(t.cpu_choices_ghz) * GHZ, topo_rng.uniform(mem_lo, mem_hi) * MB)
            for i in range(n)
        ]
        self.cloud = CloudNode(-1, t.cloud_cpu_ghz * GHZ, math.inf, backhaul_rtt=self.link.backhaul_rtt)

        self.size_range = (tk.size_range_mb[0] * MB, tk.size_range_mb[1] * MB)
        self.deadline_range = (tk.deadline_range_ms[0] / 1000.0, tk.deadline_range_ms[1] / 1000.0)
        self.cycles_per_bit = tk.cycles_per_bit

        fleet_rng = streams["fleet"]
        sp_lo, sp_hi = fl.speed_range_kmh
        self.vehicles: list[Vehicle] = []
        for vid in range(fl.vehicles):
            zone = fleet_rng.integers(0, n)
            speed = fleet_rng.uniform(sp_lo, sp_hi) / 3.6
            v = Vehicle(vid, zone, speed, fl.arrival_rate)
            v.next_handover_time = fleet_rng.uniform() * t.segment_length_m / speed
            self.vehicles.append(v)
        self.zone_population = [0] * n
        for v in self.vehicles:
            self.zone_population[v.zone] += 1

        self.tasks: dict[int, Task] = {}
        self._next_task_id = 0
        self.generated = 0
        self.completed = 0
        self.missed = 0
        self.rejected = 0
        self.delay_estimate = 0.0  # EWMA of realized uplink delays
        self._delay_seen = False

    # -- topology helpers -------------------------------------------------

    def route_for(self, origin_zone: int, action: int) -> Route:
        if action == Action.CLOUD:
            return CLOUD_ROUTE
        if action == Action.LOCAL or self.n_zones == 1:
            return Route(self.zones[origin_zone].fog_node, 0)
        left, right = self.zones[origin_zone].neighbors
        target = left if action == Action.LEFT else right
        return Route(self.zones[target].fog_node, 1)

    def node_for(self, route: Route) -> FogNode:
        return self.cloud if route.is_cloud else self.nodes[route.node]

    def legal_actions(self, task: Task | None = None) -> tuple[int, ...]:
        if self.n_zones == 1:
            return (Action.LOCAL, Action.CLOUD)
        return tuple(Action)

    @property
    def in_flight(self) -> int:
        return self.generated - self.completed - self.missed - self.rejected

    # -- traffic ------------------------------------------------------------

    def schedule_first_events(self) -> None:
        for v in self.vehicles:
            self.spawn_arrival(v, self.streams["arrivals"])
            self.kernel.at(v.next_handover_time, EventKind.VEHICLE_HANDOVER, v.id)

    def spawn_arrival(self, vehicle: Vehicle, rng: RngStream):
        if vehicle.arrival_rate <= 0:
            return None
        gap = rng.exponential(vehicle.arrival_rate)
        return self.kernel.at(self.kernel.now() + gap, EventKind.TASK_ARRIVAL, vehicle.id)

    def new_task(self, vehicle: Vehicle, now: float) -> Task:
        rng = self.streams["tasks"]
        size = rng.uniform(*self.size_range)
        deadline = rng.uniform(*self.deadline_range)
        task = Task(
            id=self._next_task_id,
            vehicle=vehicle.id,
            origin_zone=vehicle.zone,
            size=size,
            cycles_required=size * 8.0 * self.cycles_per_bit,
            deadline=deadline,
            created_at=now,
        )
        self._next_task_id += 1
        self.tasks[task.id] = task
        self.generated += 1
        return task

    def advance_vehicle(self, vehicle: Vehicle, now: float, rng: RngStream) -> None:
        zone = self.zones[vehicle.zone]
        if self.n_zones > 1:
            new_zone = zone.neighbors[rng.integers(0, 2)]
            self.zone_population[vehicle.zone] -= 1
            self.zone_population[new_zone] += 1
            vehicle.zone = new_zone
        vehicle.next_handover_time = now + zone.segment_length / vehicle.speed

    # -- offloading mechanics ----------------------------------------------

    def predicted_completion_latency(self, task: Task, action: int, now: float) -> float:
        """Latency the task would see if nothing else were submitted meanwhile."""
        route = self.route_for(task.origin_zone, action)
        node = self.node_for(route)
        uplink = transmission_delay(task, route, self.link)
        wait = max(0.0, node.busy_until - now - uplink)
        return (now - task.created_at) + uplink + wait + processing_time(task, node) + downlink_delay(route, self.link)

    def dispatch(self, task: Task, action: int, now: float) -> float:
        """Commit ``task`` to ``action``; returns the transmission-done time."""
        route = self.route_for(task.origin_zone, action)
        node = self.node_for(route)
        task.action = int(action)
        task.route = route
        task.decided_at = now
        tx = transmission_delay(task, route, self.link)
        node.inflight += 1
        node.inflight_cycles += task.cycles_required
        node.inflight_bytes += task.size
        done = now + tx
        self.kernel.at(done, EventKind.TRANSMISSION_DONE, task.id)
        return done

    def enqueue_task(self, node: FogNode, task: Task, now: float) -> bool:
        if node.queued_bytes + task.size > node.memory_capacity:
            return False
        start = max(now, node.busy_until)
        proc = processing_time(task, node)
        node.busy_until = start + proc
        node.cumulative_busy_time += proc
        node.queued_bytes += task.size
        node.queue.append(task.id)
        if node is not self.cloud:
            node.add_span(start, start + proc)
        task.start_at = start
        self.kernel.at(start + proc, EventKind.PROCESSING_DONE, task.id)
        return True

    def on_transmission_done(self, task: Task, now: float) -> bool:
        node = self.node_for(task.route)
        node.inflight -= 1
        node.inflight_cycles -= task.cycles_required
        node.inflight_bytes -= task.size
        task.tx_done_at = now
        uplink = now - task.decided_at
        self.delay_estimate = uplink if not self._delay_seen else 0.9 * self.delay_estimate + 0.1 * uplink
        self._delay_seen = True
        if self.enqueue_task(node, task, now):
            return True
        task.outcome = Outcome.REJECTED
        self.rejected += 1
        return False

    def complete_task(self, task: Task, now: float) -> Outcome:
        node = self.node_for(task.route)
        head = node.queue.popleft()
        assert head == task.id, "FIFO order violated"
        node.queued_bytes -= task.size
        moved = ring_distance(task.origin_zone, self.vehicles[task.vehicle].zone, self.n_zones)
        task.completed_at = now + downlink_delay(task.route, self.link, moved)
        if task.completed_at - task.created_at <= task.deadline:
            task.outcome = Outcome.COMPLETED
            self.completed += 1
        else:
            task.outcome = Outcome.DEADLINE_MISS
            self.missed += 1
        return task.outcome

    # -- load views ----------------------------------------------------------

    def window_busy(self, now: float, window: float) -> list[float]:
        return [node.busy_in_window(now, window) for node in self.nodes]
