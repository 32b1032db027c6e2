import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from checks import audit_clean
from oracles import sinr_loops
from v2vrrm.model import (
    Allocation,
    AuditOptions,
    Scenario,
    audit_allocation,
    db_to_linear,
    expected_receptions,
    gamma_bar,
    link_feasible,
    linear_to_db,
    sinr,
    sinr_tensor,
)


def two_link_scenario(F=1, acir=None, h=2.0, T=1):
    H = np.full((3, 3), h)
    return Scenario.build(H, T=T, acir=acir or (1.0,) + (1e-3,) * (F - 1), noise=1.0, p_max=1.0, gamma_t=1.0)


def test_sinr_interference_free():
    sc = two_link_scenario()
    a = Allocation.zeros(sc)
    a.P[0, 0, 0] = 1.0
    assert sinr(a, sc, 0, 1, 0, 0) == pytest.approx(2.0)


def test_sinr_symmetric_cochannel():
    sc = two_link_scenario()
    a = Allocation.zeros(sc)
    a.P[0, 0, 0] = a.P[2, 0, 0] = 0.5
    assert sinr(a, sc, 0, 1, 0, 0) == pytest.approx(1.0 / (1.0 + 1.0))


def test_sinr_adjacent_channel_leak():
    h = 3.0
    sc = two_link_scenario(F=3, acir=(1.0, 1e-3, 1e-3), h=h)
    a = Allocation.zeros(sc)
    a.P[0, 0, 0] = 1.0
    a.P[2, 2, 0] = 1.0
    assert sinr(a, sc, 0, 1, 0, 0) == pytest.approx(h / (1.0 + 1e-3 * h), rel=1e-12)


@pytest.mark.parametrize("g,expected", [(0.0, 0.0), (1.0, 0.5), (10**0.7, 10**0.7 / (1 + 10**0.7))])
def test_gamma_bar(g, expected):
    assert gamma_bar(g) == pytest.approx(expected, rel=1e-15)


def test_gamma_bar_rejects_negative():
    with pytest.raises(ValueError):
        gamma_bar(-1.0)


def test_db_round_trip():
    assert linear_to_db(db_to_linear(7.0)) == pytest.approx(7.0)
    assert db_to_linear(24.0) == pytest.approx(251.188643, rel=1e-6)


def test_scenario_rejects_bad_inputs():
    H = np.ones((2, 2))
    with pytest.raises(ValueError):
        Scenario.build(H, T=1, noise=0.0)
    with pytest.raises(ValueError):
        Scenario.build(H, T=1, acir=(0.5,))
    with pytest.raises(ValueError):
        Scenario.build(H, T=1, t_p=0)
    with pytest.raises(ValueError):
        Scenario.build(H, T=1, t_gen=[0, 3])
    with pytest.raises(ValueError):
        Scenario.build(np.zeros((2, 2)), T=1)


def test_scenario_is_read_only():
    sc = two_link_scenario()
    with pytest.raises(ValueError):
        sc.H[0, 1] = 5.0


def test_audit_empty_allocation_is_clean():
    sc = two_link_scenario(T=2)
    assert not audit_allocation(Allocation.zeros(sc), sc)


def test_audit_flags_two_messages_in_one_rb():
    sc = two_link_scenario()
    a = Allocation.zeros(sc)
    a.X[0, 0, 0, 0] = a.X[0, 1, 0, 0] = True
    assert audit_allocation(a, sc).cites("Xift")


def test_audit_flags_low_sinr():
    H = np.array([[0, 0.5], [0.5, 0]]) + np.eye(2)
    sc = Scenario.build(H, T=1, noise=1.0, p_max=1.0, gamma_t=1.0)
    a = Allocation.zeros(sc)
    a.X[0, 0, 0, 0] = True
    a.P[0, 0, 0] = 1.0
    a.Y[0, 1, 0, 0] = True
    a.W[1, 0, 0] = True
    assert sinr(a, sc, 0, 1, 0, 0) < sc.gamma_t
    rep = audit_allocation(a, sc)
    assert rep.cites("Yijft") and not rep.cites("Wjmt")


def test_audit_flags_power_without_schedule_and_total_power():
    sc = two_link_scenario(F=2)
    a = Allocation.zeros(sc)
    a.P[0, 0, 0] = 0.5
    assert audit_allocation(a, sc).cites("PConstrainedByX")
    a.X[0, 0, :, 0] = True
    a.P[0, :, 0] = 0.6
    assert audit_allocation(a, sc).cites("power_total")


def test_audit_flags_unheld_relay_and_half_duplex():
    sc = two_link_scenario()
    a = Allocation.zeros(sc)
    a.X[1, 0, 0, 0] = True  # VUE 1 sends VUE 0's message without having it
    assert audit_allocation(a, sc).cites("Ximft")
    b = Allocation.zeros(sc)
    b.X[0, 0, 0, 0] = b.X[1, 1, 0, 0] = True
    b.P[0, 0, 0] = b.P[1, 0, 0] = 1e-9
    b.Y[0, 1, 0, 0] = True
    assert audit_allocation(b, sc).cites("half_duplex")


def test_audit_flags_missing_reception():
    sc = two_link_scenario()
    a = Allocation.zeros(sc)
    a.X[0, 0, 0, 0] = True
    a.P[0, 0, 0] = 1.0
    a.Y[0, 1, 0, 0] = True
    rep = audit_allocation(a, sc)
    assert rep.cites("Wjmt")
    a.W[1, 0, 0] = True
    assert not audit_allocation(a, sc)


def test_audit_shape_mismatch():
    sc = two_link_scenario()
    a = Allocation.zeros(sc)
    a.P = np.zeros((3, 2, 1))
    with pytest.raises(ValueError):
        audit_allocation(a, sc)


def test_link_feasible_threshold_is_inclusive():
    H = np.array([[0, 2.0, 1.999], [2.0, 0, 5], [1.999, 5, 0]])
    sc = Scenario.build(H, T=1, noise=1.0, p_max=1.0, gamma_t=2.0)
    D = link_feasible(sc)
    assert D[0, 1] and not D[0, 2] and not D.diagonal().any()


powers = st.lists(st.floats(0, 1), min_size=12, max_size=12)


@settings(max_examples=60, deadline=None)
@given(powers, st.integers(0, 2), st.integers(0, 2), st.integers(0, 1))
def test_sinr_matches_loop_oracle(p, i, j, f):
    if i == j:
        return
    rng = np.random.default_rng(len(p))
    H = rng.uniform(0.1, 5, (3, 3))
    sc = Scenario.build(H, T=2, acir=(1.0, 0.01), noise=0.7, p_max=1.0, gamma_t=1.0)
    P = np.array(p).reshape(3, 2, 2)
    a = Allocation.zeros(sc)
    a.P = P
    ref = sinr_loops(P, sc.H, sc.acir, sc.noise, i, j, f, 1)
    assert sinr(a, sc, i, j, f, 1) == pytest.approx(ref, rel=1e-12)
    assert sinr_tensor(P, sc)[i, j, f, 1] == pytest.approx(ref, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(powers, st.floats(0, 1), st.integers(0, 1))
def test_sinr_nonincreasing_in_interferer_power(p, extra, f2):
    H = np.random.default_rng(7).uniform(0.1, 5, (3, 3))
    sc = Scenario.build(H, T=2, acir=(1.0, 0.01), noise=0.7, p_max=1.0, gamma_t=1.0)
    P = np.array(p).reshape(3, 2, 2)
    before = sinr_tensor(P, sc)[0, 1, 0, 0]
    P2 = P.copy()
    P2[2, f2, 0] += extra
    assert sinr_tensor(P2, sc)[0, 1, 0, 0] <= before * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(powers)
def test_zero_acir_decouples_frequencies(p):
    H = np.random.default_rng(3).uniform(0.1, 5, (3, 3))
    sc = Scenario.build(H, T=2, acir=(1.0, 0.0), noise=0.7, p_max=1.0, gamma_t=1.0)
    P = np.array(p).reshape(3, 2, 2)
    P2 = P.copy()
    P2[:, 1, :] = 0.0
    assert math.isclose(sinr_tensor(P, sc)[0, 1, 0, 0], sinr_tensor(P2, sc)[0, 1, 0, 0], rel_tol=1e-12)


def test_audit_options_ignore_half_duplex_when_disabled():
    sc = two_link_scenario()
    b = Allocation.zeros(sc)
    b.X[0, 0, 0, 0] = b.X[1, 1, 0, 0] = True
    b.P[0, 0, 0] = 1.0
    b.Y[0, 1, 0, 0] = True
    b.W[1, 0, 0] = True
    assert audit_allocation(b, sc).cites("half_duplex")
    rep = audit_allocation(b, sc, AuditOptions(half_duplex=False))
    assert not rep.cites("half_duplex")


def test_relay_echo_to_source_is_not_a_reception():
    H = np.full((2, 2), 10.0)
    sc = Scenario.build(H, T=2, noise=1.0, p_max=1.0, gamma_t=2.0)
    a = Allocation.zeros(sc)
    a.X[0, 0, 0, 0] = a.X[1, 0, 0, 1] = True
    a.P[0, 0, 0] = a.P[1, 0, 1] = 1.0
    a.Y[0, 1, 0, 0] = a.Y[1, 0, 0, 1] = True
    a.W[1, 0, 0] = True
    W = expected_receptions(a.X, a.Y, sc)
    assert not W[0, 0].any() and W[1, 0, 0]
    assert audit_clean(a, sc)
