"""Translate probabilistic latency/AoI targets into SINR thresholds and
repetition counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class Unattainable(ValueError):
    """The requested reliability cannot be reached with the given inputs."""


@dataclass(frozen=True, eq=False)
class ErrorCurve:
    """Sampled 1-hop message error probability as a function of SINR."""

    gamma: np.ndarray
    epsilon: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float).ravel()
        e = np.asarray(self.epsilon, dtype=float).ravel()
        if g.size == 0 or g.size != e.size:
            raise ValueError("error curve needs matching, nonempty samples")
        order = np.argsort(g, kind="stable")
        g, e = g[order], e[order]
        if np.any(np.diff(g) <= 0):
            raise ValueError("error curve SINR samples must be distinct")
        if np.any((e < 0) | (e > 1)):
            raise ValueError("error probabilities must lie in [0, 1]")
        if np.any(np.diff(e) > 0):
            raise ValueError("error curve must be nonincreasing in SINR")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "epsilon", e)


def gamma_from_epsilon(curve: ErrorCurve, eps_req: float, n_tx: int) -> float:
    """Smallest sampled SINR whose error probability is at most eps_req / n_tx."""
    if not 0 < eps_req < 1:
        raise ValueError("eps_req must lie in (0, 1)")
    if n_tx < 1:
        raise ValueError("n_tx must be >= 1")
    target = eps_req / n_tx
    ok = np.flatnonzero(curve.epsilon <= target)
    if ok.size == 0:
        raise Unattainable(f"error curve never drops to {target:.3g}")
    return float(curve.gamma[ok[0]])


def epsilon_req_latency(p_req: float) -> float:
    if not 0 < p_req < 1:
        raise ValueError("probability must lie in (0, 1)")
    return 1.0 - p_req


def epsilon_req_aoi(p_req: float, n_messages: int) -> float:
    """Per-message error budget so that all n_messages succeed with prob. p_req.

    When rounding breaks (1 - eps) ** n_messages >= p_req, the result is
    recomputed from the success probability nudged up by a few ulps.
    """
    if not 0 < p_req < 1:
        raise ValueError("probability must lie in (0, 1)")
    if int(n_messages) != n_messages or n_messages < 1:
        raise ValueError("message count must be a positive integer")
    eps = -math.expm1(math.log(p_req) / n_messages)
    if (1.0 - eps) ** n_messages >= p_req:
        return eps
    keep = 1.0 - eps
    while (1.0 - (1.0 - keep)) ** n_messages < p_req:
        keep = math.nextafter(keep, 1.0)
    return 1.0 - keep


def repetitions_required(eps_req: float, n_tx: int, eps_hop: float) -> int:
    """Smallest rho with (n_tx * eps_hop) ** rho <= eps_req."""
    if not 0 < eps_req < 1:
        raise ValueError("eps_req must lie in (0, 1)")
    q = n_tx * eps_hop
    if q >= 1:
        raise Unattainable(f"end-to-end error bound {q:.3g} is not below 1")
    if q <= 0:
        return 1
    rho = max(1, math.ceil(math.log(eps_req) / math.log(q)))
    # Guard the ceiling against rounding in the logarithms.
    while q**rho > eps_req:
        rho += 1
    while rho > 1 and q ** (rho - 1) <= eps_req:
        rho -= 1
    return rho
