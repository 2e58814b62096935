import itertools
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from bandits import (
    MDP_NEXT, MDP_REWARD, OBS, STATE, bandit_transition, mdp_transition, train_ac_bandit,
    train_dqn_bandit,
)
from conftest import make_world
from vfog.env import Transition
from vfog.policies import (
    ActorCriticAgent, DqnAgent, GreedyPolicy, LinearEpsilon, OptimizationPolicy, QLearningPolicy,
    QTable, ReplayBuffer, ac_train_step, dqn_train_step, epsilon_greedy_select, greedy_decide,
    hungarian, opt_assign_batch, q_update,
)
from vfog.policies.optimization import slot_cost
from vfog.simcore import RngStream
from vfog.world import Action, Task


class _StubWorld:
    def __init__(self, preds):
        self.preds = preds

    def legal_actions(self, task=None):
        return (0, 1, 2, 3)

    def predicted_completion_latency(self, task, action, now):
        return self.preds[action]


def test_greedy_picks_argmin():
    assert greedy_decide(None, _StubWorld([0.030, 0.050, 0.020, 0.120]), 0.0) == Action.RIGHT


def test_greedy_ties_pick_local():
    assert greedy_decide(None, _StubWorld([0.1] * 4), 0.0) == Action.LOCAL


def _random_world(seed):
    w, _ = make_world(seed=seed)
    rng = np.random.default_rng(seed)
    for node in w.nodes:
        node.busy_until = float(rng.uniform(0, 0.6))
    w.cloud.busy_until = float(rng.uniform(0, 0.3))
    return w, rng


def _random_task(rng, tid=0, origin=None, n=6, now=0.0):
    size = float(rng.uniform(0.5, 5.0)) * 1e6
    return Task(tid, 0, int(rng.integers(0, n)) if origin is None else origin, size, size * 80,
                float(rng.uniform(0.05, 0.5)), now)


@pytest.mark.parametrize("seed", range(20))
def test_greedy_choice_is_no_worse_than_any_alternative(seed):
    w, rng = _random_world(seed)
    t = _random_task(rng)
    a = greedy_decide(t, w, 0.0)
    preds = [w.predicted_completion_latency(t, b, 0.0) for b in Action]
    assert all(preds[a] <= p for p in preds)


def test_two_by_two_assignment_example():
    cols, total = hungarian([[10, 20], [30, 5]])
    assert list(cols) == [0, 1] and total == 15


@pytest.mark.parametrize("seed", range(30))
def test_hungarian_matches_brute_force_5x5(seed):
    c = np.random.default_rng(seed).uniform(0, 100, size=(5, 5))
    assert hungarian(c)[1] == pytest.approx(oracles.brute_force_assignment(c))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 10_000))
def test_hungarian_rectangular_matches_brute_force(rows, extra, seed):
    c = np.random.default_rng(seed).integers(-20, 50, size=(rows, rows + extra)).astype(float)
    cols, total = hungarian(c)
    assert len(set(cols)) == rows
    assert total == pytest.approx(oracles.brute_force_assignment(c))


def test_hungarian_rejects_bad_shapes():
    with pytest.raises(ValueError):
        hungarian(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        hungarian([[np.inf]])


@pytest.mark.parametrize("seed", range(10))
def test_batch_of_one_equals_greedy(seed):
    w, rng = _random_world(seed)
    t = _random_task(rng)
    assert opt_assign_batch([t], w, 0.0)[t.id] == greedy_decide(t, w, 0.0)


def _sequential_greedy_total(tasks, w, now, slots):
    """Assign tasks one by one to their cheapest free slot; returns summed slot cost."""
    used, total = set(), 0.0
    n = len(w.nodes)
    backlog = [node.backlog(now) for node in w.nodes]
    cloud_backlog = w.cloud.backlog(now)
    cloud_slot = 0
    for t in tasks:
        best = (slot_cost(w, t, Action.CLOUD, cloud_slot, now, cloud_backlog), None)
        for a in (Action.LOCAL, Action.LEFT, Action.RIGHT):
            node = w.route_for(t.origin_zone, a).node
            for k in range(slots):
                if (node, k) not in used:
                    best = min(best, (slot_cost(w, t, a, k, now, backlog[node]), (node, k)),
                               key=lambda x: x[0])
        total += best[0]
        if best[1] is None:
            cloud_slot += 1
        else:
            used.add(best[1])
    return total


@pytest.mark.parametrize("seed", range(25))
def test_joint_assignment_never_costs_more_than_sequential_greedy(seed):
    w, rng = _random_world(seed)
    tasks = [_random_task(rng, tid=i) for i in range(int(rng.integers(2, 7)))]
    plan = opt_assign_batch(tasks, w, 0.0, slots_per_node=2)
    # recover the slot costs of the joint plan
    order = {}
    joint = 0.0
    for t in tasks:
        a = plan[t.id]
        key = "cloud" if a == Action.CLOUD else w.route_for(t.origin_zone, a).node
        order.setdefault(key, []).append(t)
    backlog = {i: node.backlog(0.0) for i, node in enumerate(w.nodes)}
    backlog["cloud"] = w.cloud.backlog(0.0)
    for key, ts in order.items():
        # cheapest slot ordering for a fixed set on one node: largest service in the lowest slot
        costs = []
        for perm in itertools.permutations(range(len(ts))):
            c = 0.0
            for slot, i in enumerate(perm):
                t = ts[i]
                a = plan[t.id]
                c += slot_cost(w, t, a, slot, 0.0, backlog[key])
            costs.append(c)
        joint += min(costs)
    assert joint <= _sequential_greedy_total(tasks, w, 0.0, 2) + 1e-9


def test_q_update_example():
    table = QTable(learning_rate=0.1, discount=0.9, visit_decay=float("inf"))
    table.row("s2")[:] = [0.5, 0.0, 0.0, 0.0]
    q_update(table, Transition(None, "s", 0, 1.0, None, "s2", False))
    assert table.values("s")[0] == pytest.approx(0.145)


def test_q_update_zero_rate_is_noop():
    with pytest.raises(ValueError):
        QTable(learning_rate=0.0)
    table = QTable(learning_rate=1e-300, visit_decay=float("inf"))
    q_update(table, Transition(None, "s", 0, 5.0, None, "s", False))
    assert table.values("s")[0] == pytest.approx(0.0, abs=1e-290)


def test_terminal_transition_drops_bootstrap():
    table = QTable(learning_rate=1.0, visit_decay=float("inf"))
    table.row("s2")[:] = 10.0
    q_update(table, Transition(None, "s", 1, 2.0, None, "s2", True))
    assert table.values("s")[1] == 2.0


def _q_star():
    return oracles.value_iteration(MDP_NEXT, MDP_REWARD, 0.9)


def test_q_learning_converges_on_known_mdp():
    table = QTable(n_actions=2, learning_rate=0.5, discount=0.9)
    rng = np.random.default_rng(0)
    for _ in range(50_000):
        s, a = int(rng.integers(3)), int(rng.integers(2))
        q_update(table, mdp_transition(s, a))
    learned = np.array([table.values((s,)) for s in range(3)])
    assert np.max(np.abs(learned - _q_star())) < 1e-2


def test_bellman_fixed_point_is_stationary():
    q_star = _q_star()
    table = QTable(n_actions=2, learning_rate=0.1, discount=0.9)
    for s in range(3):
        table.row((s,))[:] = q_star[s]
    for s, a in itertools.product(range(3), range(2)):
        before = table.values((s,))[a]
        q_update(table, mdp_transition(s, a))
        assert abs(table.values((s,))[a] - before) < 1e-9


def test_epsilon_zero_is_pure_argmax():
    assert epsilon_greedy_select([1, 3, 2, 0], 0.0, None) == 1
    assert epsilon_greedy_select([0, 5, 5, 1], 0.0, None) == 1


def test_epsilon_one_is_uniform():
    rng = RngStream(0, "exploration")
    counts = np.bincount([epsilon_greedy_select([0, 1, 2, 3], 1.0, rng) for _ in range(100_000)], minlength=4)
    assert np.all(np.abs(counts / 100_000 - 0.25) < 0.01)


def test_epsilon_respects_legal_set():
    rng = RngStream(0, "exploration")
    assert {epsilon_greedy_select([9, 0, 0, 0], 1.0, rng, (0, 3)) for _ in range(200)} == {0, 3}


def test_linear_epsilon_schedule():
    eps = LinearEpsilon(1.0, 0.05, 100)
    assert eps(0) == 1.0 and eps(50) == pytest.approx(0.525) and eps(100) == eps(10_000) == 0.05


def test_replay_sampling_without_replacement():
    buf = ReplayBuffer(10, 1)
    for i in range(15):
        buf.push([i], 0, float(i), [i], False)
    assert len(buf) == 10
    s, a, r, s2, d = buf.sample(10, np.random.default_rng(0))
    assert sorted(r) == list(range(5, 15))


def _dqn(**kw):
    return DqnAgent(1, 2, (8,), rng=RngStream(0, "e"), init_rng=np.random.default_rng(0),
                    replay_rng=np.random.default_rng(1), **kw)


def test_dqn_warmup_guard():
    agent = _dqn(batch_size=8).train()
    before = agent.online.to_bytes()
    for _ in range(7):
        agent.buffer.push(STATE, 0, 1.0, STATE, True)
    assert dqn_train_step(agent) == 0.0
    assert agent.online.to_bytes() == before


def test_dqn_terminal_targets_are_rewards():
    agent = _dqn(batch_size=4, learning_rate=0.0 + 1e-12)
    for _ in range(4):
        agent.buffer.push(STATE, 0, 0.7, STATE, True)
    q0 = agent.online.forward(STATE)[0]
    loss = dqn_train_step(agent)
    err = q0 - 0.7
    expected = 0.5 * err * err if abs(err) <= 1 else abs(err) - 0.5
    assert loss == pytest.approx(expected)


def test_dqn_target_changes_only_at_sync():
    agent = _dqn(batch_size=4, target_sync_interval=5).train()
    for _ in range(4):
        agent.buffer.push(STATE, 0, 1.0, STATE, True)
    snap = agent.target.to_bytes()
    for i in range(1, 11):
        dqn_train_step(agent)
        if i % 5:
            assert agent.target.to_bytes() == snap
        else:
            assert agent.target.to_bytes() == agent.online.to_bytes()
            snap = agent.target.to_bytes()


def test_dqn_bandit():
    agent = train_dqn_bandit(0)
    q = agent.q_values(STATE)
    assert abs(q[0] - 1.0) < 0.05 and agent.decide(OBS) == 0


def _ac():
    return ActorCriticAgent(2, 2, (8,), rng=RngStream(0, "e"), init_rng=np.random.default_rng(0))


def test_ac_zero_advantage_zero_critic_gradient():
    agent = _ac()
    agent.net = type(agent.net)([2, 8, 3])  # all-zero net: V(s) = V(s') = 0
    from vfog.nn import Adam
    agent.optimizer = Adam([agent.net.flat])
    s = np.array([0.3, 0.7])
    _, critic = ac_train_step(agent, Transition(s, None, 0, 0.0, s, None, False))
    assert critic == 0.0


def test_ac_terminal_advantage():
    agent = _ac()
    s = np.array([0.3, 0.7])
    v = agent.value(s)
    _, critic = ac_train_step(agent, Transition(s, None, 1, 2.0, s, None, True))
    assert critic == pytest.approx((2.0 - v) ** 2)


def test_ac_policy_stays_a_distribution():
    agent = _ac().train()
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = rng.normal(size=2)
        ac_train_step(agent, Transition(s, None, int(rng.integers(2)), float(rng.normal()), s, None, False))
        pi = agent.policy(s)
        assert np.all(pi >= 0) and abs(pi.sum() - 1) < 1e-9


def test_ac_bandit():
    agent = train_ac_bandit(0)
    assert agent.policy(STATE)[0] > 0.9


def test_evaluation_mode_leaves_parameters_unchanged():
    agent = train_dqn_bandit(1, steps=200)
    before = agent.online.to_bytes()
    for _ in range(50):
        agent.learn(bandit_transition(agent.decide(OBS)))
    assert agent.online.to_bytes() == before
    ac = train_ac_bandit(1, steps=200)
    before = ac.net.to_bytes()
    ac.learn(bandit_transition(0))
    assert ac.net.to_bytes() == before


def test_qtable_round_trip_and_diagnostics(tmp_path):
    table = QTable()
    table.row((1, 0, 2, 0, 1, 3))[:] = [0.1, -2.0, 1 / 3, 0.0]
    pol = QLearningPolicy(table)
    pol.save(tmp_path / "q.csv")
    back = QLearningPolicy.load(tmp_path / "q.csv")
    assert np.array_equal(back.table.values((1, 0, 2, 0, 1, 3)), table.values((1, 0, 2, 0, 1, 3)))
    (tmp_path / "bad.csv").write_text("k0,q0\n1,2,3\n")
    with pytest.raises(ValueError, match="line 2"):
        QTable.load(tmp_path / "bad.csv")
