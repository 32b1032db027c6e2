import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2vrrm.formulations import (
    ErrorCurve,
    Unattainable,
    epsilon_req_aoi,
    epsilon_req_latency,
    gamma_from_epsilon,
    repetitions_required,
)


def test_gamma_from_step_curve():
    curve = ErrorCurve(np.array([1.0, 3.0, 5.0, 8.0]), np.array([1.0, 1.0, 1e-4, 1e-5]))
    assert gamma_from_epsilon(curve, 1e-2, 10) == 5.0


def test_gamma_with_one_transmitter_uses_requirement_directly():
    curve = ErrorCurve(np.array([0.0, 1.0, 2.0]), np.array([0.5, 0.02, 0.001]))
    assert gamma_from_epsilon(curve, 0.02, 1) == 1.0
    assert gamma_from_epsilon(curve, 0.019, 1) == 2.0


def test_gamma_unattainable():
    curve = ErrorCurve(np.array([0.0, 1.0]), np.array([0.5, 0.1]))
    with pytest.raises(Unattainable):
        gamma_from_epsilon(curve, 0.01, 1)


def test_curve_validation():
    with pytest.raises(ValueError):
        ErrorCurve(np.array([0.0, 1.0]), np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        ErrorCurve(np.array([0.0, 1.0]), np.array([1.2, 0.2]))
    with pytest.raises(ValueError):
        ErrorCurve(np.array([1.0, 1.0]), np.array([0.2, 0.1]))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(1e-9, 1.0), min_size=2, max_size=20),
    st.floats(1e-6, 0.999),
    st.integers(1, 50),
)
def test_gamma_is_first_sample_meeting_bound(eps, eps_req, n_tx):
    e = np.sort(np.array(eps))[::-1]
    g = np.cumsum(np.ones(e.size))
    curve = ErrorCurve(g, e)
    target = eps_req / n_tx
    if e.min() > target:
        with pytest.raises(Unattainable):
            gamma_from_epsilon(curve, eps_req, n_tx)
        return
    gt = gamma_from_epsilon(curve, eps_req, n_tx)
    k = int(np.flatnonzero(g == gt)[0])
    assert e[k] <= target
    if k > 0:
        assert e[k - 1] > target


def test_epsilon_examples():
    assert epsilon_req_latency(0.99) == pytest.approx(0.01)
    assert epsilon_req_aoi(0.99, 1) == pytest.approx(0.01)
    eps = epsilon_req_aoi(0.99, 10)
    assert eps == pytest.approx(1 - 0.99**0.1, rel=1e-12)
    assert eps == pytest.approx(1.00453e-3, rel=1e-5)
    assert (1 - eps) ** 10 >= 0.99


def test_epsilon_rejects_zero_messages():
    with pytest.raises(ValueError):
        epsilon_req_aoi(0.9, 0)
    with pytest.raises(ValueError):
        epsilon_req_latency(1.0)


def test_repetitions_examples():
    assert repetitions_required(0.05, 5, 0.01) == 1
    rho = repetitions_required(1e-5, 20, 1e-2)
    assert rho == math.ceil(math.log(1e-5) / math.log(0.2)) == 8
    assert 0.2**rho <= 1e-5 < 0.2 ** (rho - 1)


def test_repetitions_unattainable():
    with pytest.raises(Unattainable):
        repetitions_required(1e-3, 10, 0.1)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-12, 0.999), st.integers(1, 100), st.floats(0, 1))
def test_repetitions_smallest_valid(eps_req, n_tx, frac):
    eps_hop = frac * 0.999 / n_tx
    q = n_tx * eps_hop
    rho = repetitions_required(eps_req, n_tx, eps_hop)
    assert q**rho <= eps_req
    if rho > 1:
        assert q ** (rho - 1) > eps_req


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-6, 1 - 1e-9), st.integers(1, 1000))
def test_epsilon_aoi_meets_probability(p_req, n):
    eps = epsilon_req_aoi(p_req, n)
    assert 0 <= eps < 1
    assert (1 - eps) ** n >= p_req
