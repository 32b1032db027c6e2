"""CSI-free distributed scheduling.

Every VUE runs the same greedy schedule for its group using only its own
position index and system constants, so all members of a group agree on
the schedule without exchanging channel information.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class CdsParams:
    i_prime: int
    n_tx: int
    T: int
    F: int
    G: int
    beta: float = 0.1
    acir: tuple = (1.0,)
    n_total: Optional[int] = None  # clip the last group when N is not a multiple of n_tx

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.G < 1 or self.n_tx < 1 or self.F < 1 or self.T < 1:
            raise ValueError("G, n_tx, F and T must be positive")
        if self.i_prime < 0:
            raise ValueError("position index must be nonnegative")

    @property
    def cluster(self) -> int:
        return self.i_prime // (self.G * self.n_tx)

    @property
    def group(self) -> int:
        return (self.i_prime // self.n_tx) % self.G

    @property
    def slots(self) -> tuple:
        g = self.group
        return tuple(range(g, self.T, self.G))

    @property
    def members(self) -> tuple:
        first = (self.cluster * self.G + self.group) * self.n_tx
        last = first + self.n_tx
        if self.n_total is not None:
            last = min(last, self.n_total)
        return tuple(range(first, last))


def _lam(acir: Sequence[float], r: int) -> float:
    return float(acir[r]) if r < len(acir) else float(acir[-1])


def interference_proxy(i: int, f: int, t: int, X: np.ndarray, beta: float, acir: Sequence[float]) -> float:
    """Relative interference at VUE i in RB (f, t) under partial schedule X.

    X is indexed by (local VUE, frequency, local timeslot).  Each blocking
    vehicle between k and i attenuates by beta; the transmitter's own entry
    does not count as interference.
    """
    ks, fs = np.nonzero(X[:, :, t])
    total = 0.0
    for k, fp in zip(ks, fs):
        if k == i:
            continue
        total += _lam(acir, abs(int(fp) - f)) * beta ** (abs(int(k) - i) - 1)
    return total


@dataclass
class CdsResult:
    X: np.ndarray  # (n, F, T_g) Boolean, local indices
    members: tuple
    slots: tuple
    stage1_order: list  # (i, f, t) in placement order, local indices
    proxy_evaluations: int

    def global_schedule(self, N: int, T: int) -> np.ndarray:
        out = np.zeros((N, self.X.shape[1], T), dtype=bool)
        out[np.ix_(self.members, range(self.X.shape[1]), self.slots)] = self.X
        return out


def cds_schedule(params: CdsParams) -> CdsResult:
    """Greedy schedule of the caller's group.

    Stage 1 places every group member once, always choosing the
    (VUE, RB) pair with the least proxy interference.  Stage 2 fills each
    remaining RB with the least-interfered VUE that is idle in that
    timeslot.  Ties go to the smallest (i, f, t).
    """
    members, slots = params.members, params.slots
    n, F, Tg = len(members), params.F, len(slots)
    X = np.zeros((n, F, Tg), dtype=bool)
    evals = 0
    order = []
    if n == 0 or Tg == 0:
        return CdsResult(X, members, slots, order, 0)

    free = [(f, t) for f in range(F) for t in range(Tg)]
    waiting = list(range(n))
    while waiting and free:
        best = None
        for i in waiting:
            for f, t in free:
                val = interference_proxy(i, f, t, X, params.beta, params.acir)
                evals += 1
                if best is None or val < best[0]:
                    best = (val, i, f, t)
        _, i, f, t = best
        X[i, f, t] = True
        order.append((i, f, t))
        waiting.remove(i)
        free.remove((f, t))

    for f, t in free:
        busy = X[:, :, t].any(axis=1)
        best = None
        for i in range(n):
            if busy[i]:
                continue
            val = interference_proxy(i, f, t, X, params.beta, params.acir)
            evals += 1
            if best is None or val < best[0]:
                best = (val, i)
        if best is not None:
            X[best[1], f, t] = True
    return CdsResult(X, members, slots, order, evals)


def proxy_bound(n_tx: int, F: int, Tg: int) -> int:
    return n_tx * F * Tg * (n_tx + 2)


@dataclass(frozen=True)
class Reception:
    message: int
    source: int
    slot: int


class MessagePicker:
    """Stage-3 message choice for one VUE, fed slot by slot.

    The first scheduled slot carries the own message.  Later slots relay,
    once each, the not-yet-relayed message heard from the furthest source
    at least ``t_p`` slots earlier; with nothing to relay the own message
    is sent again.
    """

    def __init__(self, vue: int, own_msg: int, t_p: int = 1):
        self.vue = vue
        self.own = own_msg
        self.t_p = t_p
        self.log: list = []
        self.relayed: set = set()
        self.sent_own = False

    def hear(self, message: int, source: int, slot: int) -> None:
        self.log.append(Reception(message, source, slot))

    def pick(self, slot: int) -> int:
        if not self.sent_own:
            self.sent_own = True
            return self.own
        best = None
        for r in self.log:
            if r.slot > slot - self.t_p or r.message == self.own or r.message in self.relayed:
                continue
            key = (-abs(r.source - self.vue), r.source)
            if best is None or key < best[0]:
                best = (key, r.message)
        if best is None:
            return self.own
        self.relayed.add(best[1])
        return best[1]


def assign_messages(
    X: np.ndarray,
    own_msg: Sequence[int],
    reception_log: Sequence[Sequence],
    t_p: int = 1,
    *,
    slot_times: Optional[Sequence[int]] = None,
    vue_ids: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Message carried by each scheduled RB, -1 where nothing is sent.

    ``X`` is (n, F, T_g); ``reception_log[i]`` lists (message, source,
    slot) tuples for VUE i with absolute slots and global source ids.
    ``slot_times`` maps local timeslots to absolute ones, ``vue_ids`` maps
    local VUE indices to the global ids used for distances.
    """
    X = np.asarray(X, dtype=bool)
    n, F, Tg = X.shape
    times = list(range(Tg)) if slot_times is None else list(slot_times)
    ids = list(range(n)) if vue_ids is None else list(vue_ids)
    out = np.full((n, F, Tg), -1, dtype=int)
    for i in range(n):
        picker = MessagePicker(ids[i], own_msg[i], t_p)
        for rec in reception_log[i]:
            picker.hear(*rec)
        for t in range(Tg):
            fs = np.flatnonzero(X[i, :, t])
            if fs.size:
                out[i, fs, t] = picker.pick(times[t])
    return out
