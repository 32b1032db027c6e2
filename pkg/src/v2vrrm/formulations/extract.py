"""Turn solver output back into an Allocation, and recompute derived
metrics (latency, AoI, connectivity) straight from the reception tensor."""

from __future__ import annotations

import numpy as np

from ..model import LARGE, Allocation, Scenario
from ..solver import Solution
from .build import FormulatedModel
from .spec import AoIMetric


def extract_allocation(m: FormulatedModel, sol: Solution) -> Allocation:
    if not sol.has_solution:
        raise ValueError(f"solution has no assignment (status {sol.status})")
    sc = m.scenario
    N, M, F, T = sc.N, sc.M, sc.F, sc.T
    K = m.n_packets
    X = np.zeros((N, K, F, T), dtype=bool)
    P = np.zeros((N, F, T))
    Y = np.zeros((N, N, F, T), dtype=bool)
    W = np.zeros((N, M, T), dtype=bool)
    meta = {"objective": sol.objective, "status": sol.status}
    ZA = np.zeros((N, N), dtype=bool)
    ZT = np.zeros((N, N), dtype=bool)
    for v in m.vars:
        val = sol.assignment[v.name]
        if not v.key:
            continue
        fam, idx = v.key[0], v.key[1:]
        if fam == "X":
            X[idx] = val > 0.5
        elif fam == "P":
            P[idx] = val
        elif fam == "Y":
            Y[idx] = val > 0.5
        elif fam == "W":
            W[idx] = val > 0.5
        elif fam == "ZA":
            ZA[idx] = val > 0.5
        elif fam == "ZT":
            ZT[idx] = val > 0.5
        elif fam == "ETA":
            meta["eta"] = val
    # Powers on unscheduled RBs carry no meaning; report them as exactly zero.
    P[X.sum(axis=1) == 0] = 0.0
    np.clip(P, 0.0, sc.p_max, out=P)
    meta["Z_A"] = ZA
    meta["Z_tau"] = ZT
    alloc = Allocation(X=X, P=P, Y=Y, W=W, meta=meta)
    alloc.Z = connectivity_from_receptions(W, sc)
    alloc.A = aoi_from_receptions(W, sc)
    alloc.tau = latency_from_receptions(W, sc)
    return alloc


def latency_from_receptions(W: np.ndarray, scenario: Scenario) -> np.ndarray:
    """tau[j, m] = reception time - generation time, LARGE if never received."""
    W = np.asarray(W, dtype=bool)
    times = scenario.slot_times.astype(float)
    got = W.any(axis=2)
    t_rx = np.where(got, (W * times[None, None, :]).sum(axis=2), 0.0)
    tau = t_rx - scenario.t_gen[None, :]
    return np.where(got, tau, LARGE)


def aoi_from_receptions(W: np.ndarray, scenario: Scenario) -> np.ndarray:
    """A[i, j, t]: age at j of the freshest message from i at the end of slot t."""
    W = np.asarray(W, dtype=bool)
    N, T = scenario.N, scenario.T
    times = scenario.slot_times.astype(float)
    cum = np.cumsum(W, axis=2)  # (N, M, T)
    A = np.empty((N, N, T))
    for i in range(N):
        msgs = scenario.messages_of(i)
        for j in range(N):
            a0 = scenario.a_init[i, j]
            base = 1.0 + times + a0
            if not msgs:
                A[i, j] = base
                continue
            ages = [base - (scenario.t_gen[mm] + a0) * cum[j, mm] for mm in msgs]
            A[i, j] = np.min(ages, axis=0)
    return A


def connectivity_from_receptions(W: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Z[i, j] = 1 if j in R_i decoded at least one message of i."""
    W = np.asarray(W, dtype=bool)
    N = scenario.N
    Z = np.zeros((N, N), dtype=bool)
    got = W.any(axis=2)
    for i in range(N):
        msgs = scenario.messages_of(i)
        for j in scenario.receivers[i]:
            Z[i, j] = bool(got[j, msgs].any()) if msgs else False
    return Z


def aoi_metric_value(A: np.ndarray, metric) -> np.ndarray:
    return A.max(axis=2) if AoIMetric(metric) == AoIMetric.TIME_MAX else A.mean(axis=2)
