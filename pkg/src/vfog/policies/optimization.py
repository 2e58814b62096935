"""Epoch-batched baseline: jointly assign pending tasks to node slots at minimum total predicted latency."""

from __future__ import annotations

import numpy as np

from ..world import Action, processing_time, transmission_delay, downlink_delay
from .base import Policy
from .hungarian import hungarian

_FORBIDDEN = 1e9


def _candidates(world, task) -> dict[int, int]:
    """fog node id -> action index reaching it (lowest action wins for duplicates)."""
    out: dict[int, int] = {}
    for a in world.legal_actions(task):
        if a == Action.CLOUD:
            continue
        node = world.route_for(task.origin_zone, a).node
        out.setdefault(node, int(a))
    return out


def slot_cost(world, task, action: int, slot: int, now: float, backlog: float) -> float:
    """Predicted latency of ``task`` when it is the ``slot``-th (0-based) batch member
    from the end of the node's run; earlier members delay later ones by their service time."""
    route = world.route_for(task.origin_zone, action)
    node = world.node_for(route)
    up = transmission_delay(task, route, world.link)
    proc = processing_time(task, node)
    wait = max(0.0, backlog - up)
    return (now - task.created_at) + up + wait + (slot + 1) * proc + downlink_delay(route, world.link)


def opt_assign_batch(tasks, world, now: float, slots_per_node: int = 2,
                     include_inflight: bool = True, memory_aware: bool = True) -> dict[int, int]:
    """Map task id -> action minimizing the summed slot costs (exact, via Hungarian)."""
    if not tasks:
        return {}
    n_fog = len(world.nodes)
    backlog = []
    for node in world.nodes + [world.cloud]:
        b = node.backlog(now)
        if include_inflight:
            b += node.inflight_cycles / node.cpu_rate
        backlog.append(b)

    rows = len(tasks)
    cols = n_fog * slots_per_node + rows
    cost = np.full((rows, cols), _FORBIDDEN)
    col_action: list[list[int | None]] = [[None] * cols for _ in range(rows)]
    for r, task in enumerate(tasks):
        for node_id, action in _candidates(world, task).items():
            node = world.nodes[node_id]
            if memory_aware and node.queued_bytes + node.inflight_bytes + task.size > node.memory_capacity:
                continue
            for k in range(slots_per_node):
                c = node_id * slots_per_node + k
                cost[r, c] = slot_cost(world, task, action, k, now, backlog[node_id])
                col_action[r][c] = action
        for k in range(rows):
            c = n_fog * slots_per_node + k
            cost[r, c] = slot_cost(world, task, Action.CLOUD, k, now, backlog[-1])
            col_action[r][c] = int(Action.CLOUD)
    assign, _ = hungarian(cost)
    return {task.id: col_action[r][assign[r]] for r, task in enumerate(tasks)}


class OptimizationPolicy(Policy):
    name = "optimization"
    batched = True

    def __init__(self, slots_per_node: int = 2, include_inflight: bool = True, memory_aware: bool = True):
        super().__init__()
        self.slots_per_node = slots_per_node
        self.include_inflight = include_inflight
        self.memory_aware = memory_aware

    def assign_batch(self, tasks, world, now: float) -> dict[int, int]:
        return opt_assign_batch(tasks, world, now, self.slots_per_node, self.include_inflight, self.memory_aware)

    def decide(self, obs) -> int:
        return self.assign_batch([obs.task], obs.world, obs.now)[obs.task.id]
