import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import reuse_distance_loops
from v2vrrm.clustering import (
    groups_for,
    make_plan,
    one_hop_feasible,
    reduce_for_group,
    reuse_distance,
    slots_for_group,
    stitch,
)
from v2vrrm.formulations import FormulationSpec, PowerOnly
from v2vrrm.harness.config import ExperimentConfig
from v2vrrm.harness.scenario import generate_scenario
from v2vrrm.model import Allocation, Scenario

CFG = ExperimentConfig(n_tx=6, T=6)


@pytest.fixture(scope="module")
def convoy():
    return generate_scenario(CFG, seed=3, trial=0)


def test_one_hop_set_matches_threshold_scan(convoy):
    thr = convoy.gamma_t * convoy.noise / convoy.p_max
    for i in range(convoy.N):
        ref = {j for j in range(convoy.N) if j != i and convoy.H[i, j] >= thr}
        assert one_hop_feasible(convoy, i) == ref


@pytest.mark.parametrize("trial", range(5))
def test_reuse_distance_matches_loop_oracle(trial):
    sc = generate_scenario(CFG, seed=11, trial=trial)
    ref = reuse_distance_loops(sc.H, sc.gamma_t, sc.noise, sc.p_max, 0.01)
    assert reuse_distance(sc, 0.01) == ref


def test_reuse_distance_on_default_convoys_is_close_to_twelve():
    vals = [reuse_distance(generate_scenario(CFG, seed=5, trial=k), 0.01) for k in range(10)]
    assert all(9 <= v <= 13 for v in vals)


def test_reuse_distance_edge_cases(convoy):
    with pytest.raises(ValueError):
        reuse_distance(convoy, 0.0)
    single = Scenario.build(np.zeros((1, 1)), T=1)
    assert reuse_distance(single, 0.01) == 0


@pytest.mark.parametrize("n_tx,d,G", [(10, 12, 3), (20, 12, 2), (50, 12, 2), (6, 12, 3), (6, 11, 3), (5, 11, 4), (4, 0, 1)])
def test_group_count(n_tx, d, G):
    assert groups_for(n_tx, d) == G


def test_group_slots():
    assert slots_for_group(0, 3, 8) == (0, 3, 6)
    assert slots_for_group(2, 3, 8) == (2, 5)
    assert slots_for_group(1, 4, 1) == ()
    with pytest.raises(ValueError):
        slots_for_group(1, 1, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(1, 8), st.integers(0, 20), st.integers(1, 12))
def test_plan_partitions(N, n_tx, d, T):
    n_tx = min(n_tx, N)
    H = np.ones((N, N))
    sc = Scenario.build(H, T=T)
    plan = make_plan(sc, 0.01, n_tx, d_reuse=d)
    G = plan.G
    assert G == -(-(n_tx + d) // n_tx)
    assert plan.C == -(-N // (G * n_tx))
    # transmitter sets partition the convoy
    seen = sorted(i for tx in plan.T_sets.values() for i in tx)
    assert seen == list(range(N))
    # group timeslots partition the interval
    slots = sorted(s for ss in plan.S_sets.values() for s in ss)
    assert slots == list(range(T))
    for g, ss in plan.S_sets.items():
        assert all(s % G == g for s in ss)
    # same-g transmitters in different clusters are more than d apart
    for (c, g), tx in plan.T_sets.items():
        for (c2, g2), tx2 in plan.T_sets.items():
            if g2 == g and c2 != c:
                assert min(abs(a - b) for a in tx for b in tx2) > d
    for i in range(N):
        c, g = plan.group_of(i)
        assert i in plan.T_sets[(c, g)]


def test_intercluster_interference_bound(convoy):
    plan = make_plan(convoy, 0.01, CFG.n_tx)
    worst = 0.0
    for (c, g), tx in plan.T_sets.items():
        others = [k for (c2, g2), tx2 in plan.T_sets.items() if g2 == g and c2 != c for k in tx2]
        for j in plan.D_sets[(c, g)]:
            if others:
                worst = max(worst, 2 * convoy.p_max * max(convoy.H[k, j] for k in others))
    assert worst <= 0.01 * convoy.noise


def test_plan_json_and_description(convoy):
    plan = make_plan(convoy, 0.01, CFG.n_tx)
    data = json.loads(plan.dump_json())
    assert data["G"] == plan.G and data["C"] == plan.C
    assert f"G={plan.G}" in plan.describe()


def test_reduce_for_group_slices_everything(convoy):
    plan = make_plan(convoy, 0.01, CFG.n_tx)
    c, g = sorted(plan.T_sets)[len(plan.T_sets) // 2]
    piece, _ = reduce_for_group(convoy, plan, c, g)
    sub = piece.scenario
    assert sub.noise == pytest.approx(convoy.noise * 1.01)
    assert tuple(sub.slot_times) == plan.S_sets[g]
    tx = set(plan.T_sets[(c, g)])
    for loc, v in enumerate(piece.members):
        assert sub.can_transmit[loc] == (v in tx)
        for loc2, v2 in enumerate(piece.members):
            assert sub.H[loc, loc2] == convoy.H[v, v2]
    assert sorted(piece.messages) == sorted(m for i in tx for m in convoy.messages_of(i))
    with pytest.raises(ValueError):
        reduce_for_group(convoy, plan, 99, 0)


def test_reduce_drops_late_messages():
    sc = Scenario.build(np.ones((4, 4)), T=4, t_gen=[3, 0, 3, 0])
    plan = make_plan(sc, 0.01, 2, d_reuse=2)  # G = 2: slots (0, 2) and (1, 3)
    piece, _ = reduce_for_group(sc, plan, 0, 0)
    assert piece.dropped_messages == (0,) and piece.messages == (1,)
    piece1, _ = reduce_for_group(sc, plan, 0, 1)
    assert piece1.dropped_messages == () and piece1.messages == (2, 3)


def test_reduce_slices_power_only_schedule():
    sc = Scenario.build(np.ones((4, 4)), T=4)
    plan = make_plan(sc, 0.01, 2, d_reuse=2)
    x = np.zeros((4, 4, 1, 4), dtype=bool)
    x[2, 2, 0, 1] = True
    _, spec = reduce_for_group(sc, plan, 0, 1, FormulationSpec(variant=PowerOnly(x)))
    assert spec.variant.x.shape == (4, 2, 1, 2)
    assert spec.variant.x[2, 0, 0, 0]


def test_stitch_places_pieces_back(convoy):
    plan = make_plan(convoy, 0.01, CFG.n_tx)
    pieces = []
    for c, g in sorted(plan.T_sets)[:3]:
        piece, _ = reduce_for_group(convoy, plan, c, g)
        a = Allocation.zeros(piece.scenario)
        a.X[0, 0, 0, 0] = True
        a.P[0, 0, 0] = 1e-3
        pieces.append((piece, a))
    out = stitch(convoy, pieces)
    for piece, _ in pieces:
        v, m, t = piece.members[0], piece.messages[0], piece.slots[0]
        assert out.X[v, m, 0, t] and out.P[v, 0, t] == pytest.approx(1e-3)
    assert out.X.sum() == 3
