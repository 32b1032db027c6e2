"""Partition a position-ordered convoy into clusters and groups.

Groups inside a cluster get disjoint timeslot sets; groups with the same
index in different clusters share timeslots and are kept more than
``d_reuse`` positions apart so their mutual interference stays below a
fraction ``delta`` of the noise power.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import Allocation, Scenario, link_feasible


def one_hop_feasible(scenario: Scenario, i: int) -> set:
    """VUEs that can decode i at full power in the absence of interference."""
    return {int(j) for j in np.flatnonzero(link_feasible(scenario)[i])}


def reuse_distance(scenario: Scenario, delta: float) -> int:
    """Largest index gap |k - i| such that k reaches some receiver of i above
    delta * noise / (2 Pmax)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    N = scenario.N
    if N <= 1:
        return 0
    D = link_feasible(scenario).astype(np.int64)
    loud = (scenario.H > delta * scenario.noise / (2.0 * scenario.p_max)).astype(np.int64)
    hits = (D @ loud.T) > 0  # hits[i, k]
    if not hits.any():
        return 0
    i, k = np.nonzero(hits)
    return int(np.abs(k - i).max())


def groups_for(n_tx: int, d_reuse: int) -> int:
    if n_tx < 1 or d_reuse < 0:
        raise ValueError("need n_tx >= 1 and d_reuse >= 0")
    return -(-(n_tx + d_reuse) // n_tx)


def slots_for_group(g: int, G: int, T: int) -> tuple:
    if not 0 <= g < G:
        raise ValueError(f"group index {g} outside 0..{G - 1}")
    return tuple(g + l * G for l in range(T // G + 1) if g + l * G < T)


@dataclass(frozen=True)
class GroupPlan:
    C: int
    G: int
    n_tx: int
    d_reuse: int
    delta: float
    T_sets: dict  # (c, g) -> tuple of transmitters
    R_sets: dict  # (c, g) -> tuple of intended receivers
    S_sets: dict  # g -> tuple of timeslots
    N: int
    T: int
    D_sets: dict = field(default_factory=dict)  # (c, g) -> VUEs reachable in one hop

    def group_of(self, i: int) -> tuple:
        block = i // self.n_tx
        return block // self.G, block % self.G

    def unreachable(self, c: int, g: int) -> tuple:
        """Intended receivers of the group that no group transmitter reaches."""
        return tuple(sorted(set(self.R_sets[(c, g)]) - set(self.D_sets.get((c, g), ()))))

    def to_dict(self) -> dict:
        key = lambda cg: f"{cg[0]},{cg[1]}"
        return {
            "C": self.C,
            "G": self.G,
            "n_tx": self.n_tx,
            "d_reuse": self.d_reuse,
            "delta": self.delta,
            "N": self.N,
            "T": self.T,
            "transmitters": {key(k): list(v) for k, v in sorted(self.T_sets.items())},
            "receivers": {key(k): list(v) for k, v in sorted(self.R_sets.items())},
            "timeslots": {str(g): list(v) for g, v in sorted(self.S_sets.items())},
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def describe(self) -> str:
        lines = [f"N={self.N} T={self.T} n_tx={self.n_tx} d_reuse={self.d_reuse} -> C={self.C} G={self.G}"]
        for g, slots in sorted(self.S_sets.items()):
            lines.append(f"  group {g}: timeslots {list(slots)}")
        for (c, g), tx in sorted(self.T_sets.items()):
            rx = self.R_sets[(c, g)]
            lost = self.unreachable(c, g)
            extra = f", unreachable {list(lost)}" if lost else ""
            lines.append(f"  ({c},{g}): tx {tx[0]}..{tx[-1]}, {len(rx)} receivers{extra}")
        return "\n".join(lines)


def make_plan(scenario: Scenario, delta: float, n_tx: int, d_reuse: Optional[int] = None) -> GroupPlan:
    """Clusters, groups, transmitter/receiver sets and timeslot sets.

    The reuse distance is computed from the scenario unless given.
    """
    N, T = scenario.N, scenario.T
    if not 1 <= n_tx <= N:
        raise ValueError(f"n_tx must lie in 1..{N}")
    if d_reuse is None:
        d_reuse = reuse_distance(scenario, delta)
    G = groups_for(n_tx, d_reuse)
    C = math.ceil(N / (G * n_tx))
    D = link_feasible(scenario)
    T_sets, R_sets, D_sets = {}, {}, {}
    for c in range(C):
        for g in range(G):
            first = (c * G + g) * n_tx
            tx = tuple(i for i in range(first, first + n_tx) if i < N)
            if not tx:
                continue
            T_sets[(c, g)] = tx
            R_sets[(c, g)] = tuple(sorted(set().union(*(scenario.receivers[i] for i in tx))))
            D_sets[(c, g)] = tuple(int(j) for j in np.flatnonzero(D[list(tx)].any(axis=0)))
    S_sets = {g: slots_for_group(g, G, T) for g in range(G)}
    return GroupPlan(C, G, n_tx, int(d_reuse), float(delta), T_sets, R_sets, S_sets, N, T, D_sets)


@dataclass(frozen=True)
class GroupSlice:
    scenario: Scenario
    c: int
    g: int
    members: tuple  # global VUE ids, local index order
    messages: tuple  # global message ids, local order
    slots: tuple  # global timeslots, local order
    dropped_messages: tuple = ()


def reduce_for_group(scenario: Scenario, plan: GroupPlan, c: int, g: int, spec=None):
    """Restrict the scenario to one group and add the intercluster margin.

    Returns ``(GroupSlice, spec)``; the slice scenario uses noise
    sigma^2 (1 + delta) so that every SINR constraint built from it keeps
    the margin.  Messages that only become available after the group's
    last timeslot are dropped and listed in the slice.
    """
    if (c, g) not in plan.T_sets:
        raise ValueError(f"group ({c},{g}) is empty")
    tx = plan.T_sets[(c, g)]
    members = tuple(sorted(set(tx) | set(plan.R_sets[(c, g)])))
    local = {v: n for n, v in enumerate(members)}
    slots = np.array(plan.S_sets[g], dtype=int)
    if slots.size == 0:
        raise ValueError(f"group {g} has no timeslots")
    msgs, dropped, omega_cols = [], [], []
    for i in tx:
        for mm in scenario.messages_of(i):
            t_av = scenario.available_time(mm)
            pos = int(np.searchsorted(slots, t_av, side="left"))
            if pos >= slots.size:
                dropped.append(mm)
                continue
            msgs.append(mm)
            col = np.zeros((len(members), slots.size), dtype=bool)
            col[local[i], pos] = True
            omega_cols.append(col)
    omega = np.stack(omega_cols, axis=1) if omega_cols else np.zeros((len(members), 0, slots.size), dtype=bool)
    idx = np.array(members)
    receivers = []
    txs = set(tx)
    for v in members:
        receivers.append({local[j] for j in scenario.receivers[v] if j in local} if v in txs else set())
    sub = Scenario(
        grid=type(scenario.grid)(scenario.F, int(slots.size)),
        H=scenario.H[np.ix_(idx, idx)],
        acir=scenario.acir,
        noise=scenario.noise * (1.0 + plan.delta),
        p_max=scenario.p_max,
        gamma_t=scenario.gamma_t,
        receivers=tuple(receivers),
        omega=omega,
        t_gen=scenario.t_gen[msgs] if msgs else np.zeros(0),
        t_d=scenario.t_d,
        t_p=scenario.t_p,
        a_init=scenario.a_init[np.ix_(idx, idx)],
        slot_times=slots,
        can_transmit=np.array([v in txs for v in members]),
        vue_ids=idx,
        message_ids=np.array(msgs, dtype=int),
        positions=None if scenario.positions is None else scenario.positions[idx],
    )
    piece = GroupSlice(sub, c, g, members, tuple(msgs), tuple(int(s) for s in slots), tuple(dropped))
    if spec is not None:
        spec = _slice_spec(spec, piece)
    return piece, spec


def _slice_spec(spec, piece: GroupSlice):
    from .formulations.spec import PowerOnly

    mem, msg, sl = list(piece.members), list(piece.messages), list(piece.slots)
    changes = {}
    if isinstance(spec.variant, PowerOnly):
        x = np.asarray(spec.variant.x)
        changes["variant"] = PowerOnly(x[np.ix_(mem, msg, range(x.shape[2]), sl)])
    if spec.history is not None:
        h = spec.history
        changes["history"] = Allocation(
            X=np.asarray(h.X)[np.ix_(mem, msg, range(h.X.shape[2]), sl)],
            P=np.asarray(h.P)[np.ix_(mem, range(h.P.shape[1]), sl)],
            Y=np.asarray(h.Y)[np.ix_(mem, mem, range(h.Y.shape[2]), sl)],
            W=np.asarray(h.W)[np.ix_(mem, msg, sl)],
        )
    return spec.replace(**changes) if changes else spec


def stitch(scenario: Scenario, pieces) -> Allocation:
    """Merge per-group allocations (GroupSlice, Allocation) into one global
    allocation.  Receptions are copied as claimed by each group."""
    F = scenario.F
    out = Allocation.zeros(scenario)
    for piece, alloc in pieces:
        mem = np.array(piece.members)
        msg = np.array(piece.messages, dtype=int)
        sl = np.array(piece.slots)
        if msg.size:
            out.X[np.ix_(mem, msg, range(F), sl)] |= np.asarray(alloc.X, dtype=bool)
            out.W[np.ix_(mem, msg, sl)] |= np.asarray(alloc.W, dtype=bool)
        out.P[np.ix_(mem, range(F), sl)] += np.asarray(alloc.P)
        out.Y[np.ix_(mem, mem, range(F), sl)] |= np.asarray(alloc.Y, dtype=bool)
    return out
