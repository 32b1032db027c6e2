"""Assemble scheduling and power-control MBLPs from a scenario.

Variable families (names follow ``<FAMILY>_<indices>``):

* ``X_i_k_f_t``  Boolean, VUE i sends message (or packet) k in RB (f, t)
* ``P_i_f_t``    transmit power in mW
* ``Y_i_j_f_t``  Boolean, link i -> j meets the SINR threshold in RB (f, t)
* ``U_i_j_k_f_t`` = X and Y (implied integer)
* ``V_j_m_t``    j decodes m in slot t (implied integer)
* ``W_j_m_t``    first decoding of m at j (implied integer)
* ``Q_j_m_t``    cumulative receptions of m at j up to slot t
* ``Z_i_j``, ``ETA``, ``A_i_j_t``, ``ZA_i_j``, ``TAU_j_m``, ``ZT_i_j``

Only variables that can ever be nonzero are created; the rest are
constant zero and simply absent from the model.
"""

from __future__ import annotations

import numpy as np

from ..milp import EQ, GE, LE, MAXIMIZE, LinExpr, MilpModel, ModelError, encode_and, encode_min_select, encode_or
from ..model import Scenario, gamma_bar, link_feasible
from .spec import AoIMetric, FormulationSpec, Objective, PowerOnly, SchedulingOnly


class FormulatedModel(MilpModel):
    """A MilpModel that remembers the scenario and index structure it encodes."""

    def __init__(self, scenario: Scenario, spec: FormulationSpec, packets: list):
        super().__init__("v2v")
        self.scenario = scenario
        self.spec = spec
        self.packets = packets
        self.packet_msg = {p: m for m, ps in enumerate(packets) for p in ps}
        self.latency_sentinel: dict = {}

    @property
    def n_packets(self) -> int:
        return len(self.packet_msg)

    def X(self, i, k, f, t):
        return self.var("X", i, k, f, t)

    def P(self, i, f, t):
        return self.var("P", i, f, t)

    def Y(self, i, j, f, t):
        return self.var("Y", i, j, f, t)

    def W(self, j, m, t):
        return self.var("W", j, m, t)

    def Q(self, j, m, t):
        return self.var("Q", j, m, t)

    def received_by(self, j, m, t) -> LinExpr:
        """Number of first receptions of m at j up to local slot t (0 or 1)."""
        if t < 0:
            return LinExpr()
        q = self.Q(j, m, t)
        return LinExpr.of(q) if q is not None else LinExpr()


def packet_map(scenario: Scenario, frag) -> list:
    """Packets of every message; identity when not fragmented."""
    if frag is None:
        return [[m] for m in range(scenario.M)]
    out, seen = [], set()
    for m in range(scenario.M):
        ps = list(frag.get(m, [])) if hasattr(frag, "get") else list(frag[m])
        if not ps:
            raise ModelError(f"message {m} has no packets")
        for p in ps:
            if p in seen:
                raise ModelError(f"packet {p} is assigned to more than one message")
            seen.add(p)
        out.append(ps)
    ids = sorted(seen)
    if ids != list(range(len(ids))):
        raise ModelError("packet ids must be 0..K-1")
    return out


# -- reachability analysis ----------------------------------------------------


def _first_slot_at_or_after(times: np.ndarray, t_abs: float) -> int:
    return int(np.searchsorted(times, t_abs, side="left"))


def reachability(scenario: Scenario, multihop: bool):
    """Earliest local slots in which each VUE can hold and send each message.

    Returns (rx, tx): arrays (N, M) of local slot indices, T meaning never.
    """
    N, M, T = scenario.N, scenario.M, scenario.T
    times = scenario.slot_times
    D = link_feasible(scenario)
    rx = np.full((N, M), T)
    tx = np.full((N, M), T)
    for m in range(M):
        o = scenario.origin(m)
        if scenario.can_transmit[o]:
            tx[o, m] = int(np.flatnonzero(scenario.omega[o, m])[0])
        changed = True
        while changed:
            changed = False
            for i in range(N):
                if tx[i, m] >= T:
                    continue
                for j in np.flatnonzero(D[i]):
                    if j != o and tx[i, m] < rx[j, m]:
                        rx[j, m] = tx[i, m]
                        changed = True
            if multihop:
                for j in range(N):
                    if j == o or rx[j, m] >= T or not scenario.can_transmit[j]:
                        continue
                    t_next = _first_slot_at_or_after(times, times[rx[j, m]] + scenario.t_p)
                    if t_next < tx[j, m]:
                        tx[j, m] = t_next
                        changed = True
    return rx, tx


# -- core ------------------------------------------------------------------------


def build_core(scenario: Scenario, spec: FormulationSpec) -> FormulatedModel:
    """Scheduling, power, SINR, reception and relay constraints."""
    if scenario.t_p < 1:
        raise ModelError("relay delay must be >= 1")
    if not 0 <= spec.window_start < scenario.T:
        raise ModelError(f"window start {spec.window_start} outside 0..{scenario.T - 1}")
    packets = packet_map(scenario, spec.fragmentation)
    m = FormulatedModel(scenario, spec, packets)
    N, M, F, T = scenario.N, scenario.M, scenario.F, scenario.T
    times = scenario.slot_times
    pmax, noise = scenario.p_max, scenario.noise
    gb = gamma_bar(scenario.gamma_t)
    D = link_feasible(scenario)
    rx, tx = reachability(scenario, spec.multihop)
    owner = [scenario.origin(mm) for mm in range(M)]
    keep_all = isinstance(spec.variant, PowerOnly) or spec.window_start > 0 or not spec.prune_useless

    # Who keeps a record of receiving message mm at all.
    intended = np.zeros((N, M), dtype=bool)
    for mm in range(M):
        for j in scenario.receivers[owner[mm]]:
            intended[j, mm] = True
    relay_ok = np.zeros((N, M), dtype=bool)
    if spec.multihop:
        relay_ok = scenario.can_transmit[:, None] & np.ones((N, M), dtype=bool)
        for mm in range(M):
            relay_ok[owner[mm], mm] = False

    def w_exists(j, mm, t):
        if j == owner[mm] or t < rx[j, mm]:
            return False
        if intended[j, mm]:
            return True
        if not relay_ok[j, mm]:
            return False
        # A relay-only reception matters only if a later send is possible.
        return times[t] + scenario.t_p <= times[-1]

    W_ok = np.zeros((N, M, T), dtype=bool)
    for j in range(N):
        for mm in range(M):
            for t in range(T):
                W_ok[j, mm, t] = w_exists(j, mm, t)

    # X variables
    for i in range(N):
        if not scenario.can_transmit[i]:
            continue
        for k, mm in sorted(m.packet_msg.items()):
            for t in range(tx[i, mm], T):
                useful = keep_all or any(W_ok[j, mm, t] for j in np.flatnonzero(D[i]))
                if not useful:
                    continue
                for f in range(F):
                    m.add_var(key=("X", i, k, f, t), boolean=True)

    def x_terms(i, f, t):
        return [v for k in range(m.n_packets) if (v := m.X(i, k, f, t)) is not None]

    # P variables and scheduling/power constraints
    for i in range(N):
        for t in range(T):
            for f in range(F):
                xs = x_terms(i, f, t)
                if not xs:
                    continue
                p = m.add_var(key=("P", i, f, t), lb=0.0, ub=pmax)
                if len(xs) > 1:
                    m.add_constraint(LinExpr.sum(xs), LE, 1.0, family="Xift")
                m.add_constraint(p - pmax * LinExpr.sum(xs), LE, 0.0, family="PConstrainedByX")
            ps = [p for f in range(F) if (p := m.P(i, f, t)) is not None]
            if len(ps) > 1:
                m.add_constraint(LinExpr.sum(ps), LE, pmax, family="power_total")

    # Y variables
    for i in range(N):
        for t in range(T):
            for f in range(F):
                ks = [k for k in range(m.n_packets) if m.X(i, k, f, t) is not None]
                if not ks:
                    continue
                for j in np.flatnonzero(D[i]):
                    if j == i:
                        continue
                    if keep_all or any(W_ok[j, m.packet_msg[k], t] for k in ks):
                        m.add_var(key=("Y", i, int(j), f, t), boolean=True)

    # SINR with a per-row big-M, in units of the noise power
    L = scenario.acir_matrix()
    H = scenario.H
    for t in range(T):
        powered = [(k, f, p) for k in range(N) for f in range(F) if (p := m.P(k, f, t)) is not None]
        for i in range(N):
            for f in range(F):
                for j in range(N):
                    y = m.Y(i, j, f, t)
                    if y is None:
                        continue
                    row = LinExpr()
                    tx_set = set()
                    for k, f2, p in powered:
                        coef = -gb * L[f2, f] * H[k, j] / noise
                        if k == i and f2 == f:
                            coef += H[i, j] / noise
                        if coef != 0.0:
                            row.iadd(p, coef)
                        tx_set.add(k)
                    zeta = gb * (1.0 + sum(pmax * H[k, j] / noise for k in tx_set if k != j))
                    m.add_constraint(row - zeta * y, GE, gb - zeta, family="Yijft")
                    m.add_constraint(y - LinExpr.sum(x_terms(i, f, t)), LE, 0.0, family="Ylink")
                    # Decoding needs the signal alone to clear gamma_T times the noise.
                    m.add_constraint(H[i, j] / noise * m.P(i, f, t) - scenario.gamma_t * y, GE, 0.0, family="Ypower")
                    if spec.half_duplex:
                        busy = [x for f2 in range(F) for x in x_terms(j, f2, t)]
                        if busy:
                            m.add_constraint(y + LinExpr.sum(busy), LE, 1.0, family="half_duplex")

    if spec.link_cuts:
        _add_link_cuts(m, scenario, x_terms, spec.half_duplex)

    build_fragmentation(m, scenario, spec.fragmentation, W_ok=W_ok)
    return m


def pair_conflict(scenario: Scenario, i: int, j: int, f: int, k: int, l: int, f2: int) -> bool:
    """True if links i->j on f and k->l on f2 (same slot) cannot both reach
    gamma_T for any powers within Pmax, even with nobody else transmitting."""
    g, noise, pmax = scenario.gamma_t, scenario.noise, scenario.p_max
    L = scenario.acir_matrix()
    H = scenario.H
    a, c = H[i, j], H[k, l]
    b, d = L[f2, f] * H[k, j], L[f, f2] * H[i, l]
    if g * g * b * d >= a * c * (1.0 - 1e-12):
        return True
    # Smallest powers meeting both targets, from the 2x2 fixed point.
    pi = g * noise * (1.0 + g * b / c) / (a * (1.0 - g * g * b * d / (a * c)))
    pk = g * (noise + pi * d) / c
    slack = 1.0 + 1e-7
    return pi > pmax * slack or pk > pmax * slack


def _add_link_cuts(m: "FormulatedModel", scenario: Scenario, x_terms, half_duplex: bool = True) -> None:
    """Valid inequalities that tighten the SINR big-M relaxation.

    * at one receiver and RB at most one link can succeed (gamma_T > 1),
      and (half-duplex) none while the receiver transmits in that slot;
    * two links of one timeslot that cannot both succeed at any powers
      within Pmax exclude each other.
    """
    N, F, T = scenario.N, scenario.F, scenario.T
    if scenario.gamma_t > 1.0:
        for j in range(N):
            for f in range(F):
                for t in range(T):
                    ys = [y for i in range(N) if (y := m.Y(i, j, f, t)) is not None]
                    if not ys:
                        continue
                    own = [xs for f2 in range(F) if (xs := x_terms(j, f2, t))] if half_duplex else []
                    for xs in own:
                        m.add_constraint(LinExpr.sum(ys) + LinExpr.sum(xs), LE, 1.0, family="Yclique")
                    if not own and len(ys) > 1:
                        m.add_constraint(LinExpr.sum(ys), LE, 1.0, family="Yclique")
    for t in range(T):
        links = [(v.key[1], v.key[2], v.key[3], v) for v in m.family_vars("Y") if v.key[4] == t]
        for a in range(len(links)):
            i, j, f, ya = links[a]
            for b in range(a + 1, len(links)):
                k, l, f2, yb = links[b]
                if i == k or j == l or j == k or l == i:
                    continue  # broadcast, clique or half-duplex cases
                if pair_conflict(scenario, i, j, f, k, l, f2):
                    m.add_constraint(ya + yb, LE, 1.0, family="Yconflict")


def build_fragmentation(m: FormulatedModel, scenario: Scenario, frag=None, *, W_ok=None) -> None:
    """Reception chain: U = X and Y, V, W, Q, and the relay constraint.

    A message counts as decoded in slot t when every one of its packets
    arrives in that slot over some high-SINR link.  Without fragmentation
    each message is its own single packet.
    """
    packets = packet_map(scenario, frag)
    if packets != m.packets:
        raise ModelError("fragmentation map differs from the one the model was built with")
    N, M, F, T = scenario.N, scenario.M, scenario.F, scenario.T
    times = scenario.slot_times
    if W_ok is None:
        W_ok = np.ones((N, M, T), dtype=bool)

    for mm in range(M):
        for j in range(N):
            prev_q = None
            for t in range(T):
                per_packet = []
                if W_ok[j, mm, t]:
                    for k in packets[mm]:
                        us = []
                        for i in range(N):
                            for f in range(F):
                                x, y = m.X(i, k, f, t), m.Y(i, j, f, t)
                                if x is not None and y is not None:
                                    u = encode_and(m, [x, y], boolean=False, family="U", key=("U", i, j, k, f, t))
                                    us.append(u)
                        per_packet.append(us)
                if per_packet and all(per_packet):
                    if len(per_packet) == 1:
                        v = encode_or(m, per_packet[0], boolean=False, family="V", key=("V", j, mm, t))
                    else:
                        ors = [encode_or(m, us, boolean=False, family="V") for us in per_packet]
                        v = encode_and(m, ors, boolean=False, family="V", key=("V", j, mm, t))
                    operands = [v] if prev_q is None else [v, 1 - prev_q]
                    w = encode_and(m, operands, boolean=False, family="Wjmt", key=("W", j, mm, t))
                    q = m.add_var(key=("Q", j, mm, t), lb=0.0, ub=1.0)
                    m.add_constraint(q - w - (prev_q if prev_q is not None else 0.0), EQ, 0.0, family="Q")
                    prev_q = q
                elif prev_q is not None:
                    # Nothing can arrive in this slot: carry the running count.
                    q = m.add_var(key=("Q", j, mm, t), lb=0.0, ub=1.0)
                    m.add_constraint(q - prev_q, EQ, 0.0, family="Q")
                    prev_q = q

    # Relay rule: a non-owner may only send what it decoded t_p slots earlier.
    for (key, v) in list(m._by_key.items()):
        if key[0] != "X":
            continue
        _, i, k, f, t = key
        mm = m.packet_msg[k]
        if scenario.origin(mm) == i and times[t] >= scenario.available_time(mm):
            continue
        t_last = int(np.searchsorted(times, times[t] - scenario.t_p, side="right")) - 1
        m.add_constraint(v - m.received_by(i, mm, t_last), LE, 0.0, family="Ximft")


def build_repetitions(m: FormulatedModel, scenario: Scenario, rho: int) -> None:
    """Count W only at the rho-th high-SINR reception of a message.

    V (one reception in slot t) plays the role of the per-slot indicator;
    W becomes a genuine Boolean tied to the running count of V.
    """
    if int(rho) != rho or rho < 1:
        raise ModelError("rho must be an integer >= 1")
    if rho == 1:
        return
    T = scenario.T
    zeta = float(max(T, rho + 1))
    m.drop_family("Wjmt")
    for w in m.family_vars("W"):
        w.boolean = True
    for w in m.family_vars("W"):
        _, j, mm, t = w.key
        count = LinExpr.sum(v for t2 in range(t + 1) if (v := m.var("V", j, mm, t2)) is not None)
        m.add_constraint(w - (rho + 1) + count + zeta * w, LE, zeta, family="retr")
        m.add_constraint(w - (rho + 1) + count - zeta * w, GE, -zeta, family="retr")
        prev = [v for t2 in range(t) if (v := m.W(j, mm, t2)) is not None]
        if prev:
            m.add_constraint(w + LinExpr.sum(prev), LE, 1.0, family="retr")


# -- objectives ----------------------------------------------------------------


def _pairs(scenario: Scenario):
    for i in range(scenario.N):
        msgs = scenario.messages_of(i)
        if not msgs:
            continue
        for j in sorted(scenario.receivers[i]):
            yield i, j, msgs


def _pair_throughput(m: FormulatedModel, i, j, msgs) -> LinExpr:
    return LinExpr.sum(m.received_by(j, mm, m.scenario.T - 1) for mm in msgs)


def build_objective(m: FormulatedModel, spec: FormulationSpec, scenario: Scenario) -> None:
    obj = spec.objective
    if obj == Objective.THROUGHPUT:
        expr = LinExpr.sum(_pair_throughput(m, i, j, ms) for i, j, ms in _pairs(scenario))
        m.set_objective(expr, MAXIMIZE)
    elif obj == Objective.WORST_THROUGHPUT:
        pairs = list(_pairs(scenario))
        cap = min((len(ms) for _, _, ms in pairs), default=0)
        eta = m.add_var(key=("ETA",), lb=0.0, ub=float(cap))
        for i, j, ms in pairs:
            m.add_constraint(eta - _pair_throughput(m, i, j, ms), LE, 0.0, family="eta")
        m.set_objective(eta, MAXIMIZE)
    elif obj == Objective.CONNECTIVITY:
        zs = []
        for i, j, ms in _pairs(scenario):
            z = m.add_var(key=("Z", i, j), lb=0.0, ub=1.0)
            m.add_constraint(z - _pair_throughput(m, i, j, ms), LE, 0.0, family="Zij")
            zs.append(z)
        m.set_objective(LinExpr.sum(zs), MAXIMIZE)
    elif obj == Objective.CONNECTIVITY_AOI:
        build_aoi(m, scenario, spec)
    elif obj == Objective.CONNECTIVITY_LATENCY:
        build_latency(m, scenario, spec)
    else:
        raise ModelError(f"unknown objective {obj!r}")


def build_latency(m: FormulatedModel, scenario: Scenario, spec: FormulationSpec) -> None:
    """Latency per (receiver, message) and pair indicators for tau <= tau_T.

    A never-decoded message gets a finite stand-in latency one slot beyond
    anything reachable, so the big-M stays small.
    """
    tau_t = spec.tau_t
    if tau_t is None or tau_t < 0:
        raise ModelError("latency threshold must be nonnegative")
    T = scenario.T
    times = scenario.slot_times
    tau_vars = {}
    for i, j, ms in _pairs(scenario):
        for mm in ms:
            if (j, mm) in tau_vars:
                continue
            tg = float(scenario.t_gen[mm])
            sentinel = max(tau_t, times[-1] - tg) + 1.0
            m.latency_sentinel[(j, mm)] = sentinel
            tau = m.add_var(key=("TAU", j, mm), lb=min(0.0, times[0] - tg), ub=sentinel)
            expr = LinExpr.sum((float(times[t]) - tg - sentinel) * w for t in range(T) if (w := m.W(j, mm, t)) is not None)
            m.add_constraint(tau - expr, EQ, sentinel, family="latency")
            tau_vars[(j, mm)] = tau
    zs = []
    for i, j, ms in _pairs(scenario):
        z = m.add_bool(key=("ZT", i, j))
        for mm in ms:
            zeta = m.latency_sentinel[(j, mm)] - tau_t
            m.add_constraint(tau_vars[(j, mm)] + zeta * z, LE, tau_t + zeta, family="tau_req")
        zs.append(z)
    m.set_objective(LinExpr.sum(zs), MAXIMIZE)


def build_aoi(m: FormulatedModel, scenario: Scenario, spec: FormulationSpec) -> None:
    """AoI per pair and slot as a min over the source's messages, plus the
    indicators for mu(A) <= mu_T."""
    mu_t = spec.mu_t
    if mu_t is None or mu_t < 0:
        raise ModelError("AoI threshold must be nonnegative")
    if spec.aoi_metric not in (AoIMetric.TIME_MAX, AoIMetric.TIME_AVERAGE):
        raise ModelError(f"unsupported AoI metric {spec.aoi_metric!r}")
    T = scenario.T
    times = scenario.slot_times
    zs = []
    for i, j, ms in _pairs(scenario):
        a0 = float(scenario.a_init[i, j])
        a_vars = []
        for t in range(T):
            ages = []
            for mm in ms:
                tg = float(scenario.t_gen[mm])
                ages.append((1.0 + times[t] + a0) - (tg + a0) * m.received_by(j, mm, t))
            a = m.add_var(key=("A", i, j, t), lb=-np.inf, ub=np.inf)
            encode_min_select(m, a, ages, exact=True, family="AOIijt")
            a_vars.append(a)
        z = m.add_bool(key=("ZA", i, j))
        a_max = 1.0 + float(times[-1]) + max(a0, 0.0)
        zeta = max(0.0, a_max - mu_t)
        if spec.aoi_metric == AoIMetric.TIME_MAX:
            for a in a_vars:
                m.add_constraint(a + zeta * z, LE, mu_t + zeta, family="aoi_req")
        else:
            m.add_constraint(LinExpr.sum(a_vars) * (1.0 / T) + zeta * z, LE, mu_t + zeta, family="aoi_req")
        zs.append(z)
    m.set_objective(LinExpr.sum(zs), MAXIMIZE)


# -- variants ------------------------------------------------------------------------


def apply_variant(m: FormulatedModel, spec: FormulationSpec) -> None:
    sc = m.scenario
    N, F, T = sc.N, sc.F, sc.T
    v = spec.variant
    if isinstance(v, SchedulingOnly):
        pbar = sc.p_max if v.p_bar is None else v.p_bar
        pbar = np.broadcast_to(np.asarray(pbar, dtype=float), (N, T))
        if np.any(pbar < 0) or np.any(pbar > sc.p_max * (1 + 1e-12)):
            raise ModelError("fixed power must lie in [0, Pmax]")
        m.drop_family("PConstrainedByX")
        for i in range(N):
            for t in range(T):
                for f in range(F):
                    p = m.P(i, f, t)
                    if p is None:
                        continue
                    xs = [x for k in range(m.n_packets) if (x := m.X(i, k, f, t)) is not None]
                    m.add_constraint(p - pbar[i, t] * LinExpr.sum(xs), EQ, 0.0, family="sched_power")
    elif isinstance(v, PowerOnly):
        x = np.asarray(v.x)
        if x.shape != (N, m.n_packets, F, T):
            raise ModelError(f"fixed schedule has shape {x.shape}, expected {(N, m.n_packets, F, T)}")
        _pin_schedule(m, x.astype(bool), range(T))

    if spec.window_start > 0:
        _apply_window(m, spec)


def _pin_schedule(m: FormulatedModel, x: np.ndarray, slots) -> None:
    N, K, F, _ = x.shape
    for i in range(N):
        for k in range(K):
            for f in range(F):
                for t in slots:
                    var = m.X(i, k, f, t)
                    if var is None:
                        if x[i, k, f, t]:
                            raise ModelError(f"X[{i},{k},{f},{t}] = 1 is not allowed in this scenario")
                        continue
                    m.fix(var, float(x[i, k, f, t]))


def _apply_window(m: FormulatedModel, spec: FormulationSpec) -> None:
    """Freeze every decision in slots before the window to the history."""
    h = spec.history
    sc = m.scenario
    slots = range(spec.window_start)
    _pin_schedule(m, np.asarray(h.X).astype(bool), slots)
    for (key, var) in list(m._by_key.items()):
        fam = key[0]
        t = key[-1] if fam in ("P", "Y", "W") else None
        if t is None or t >= spec.window_start:
            continue
        if fam == "P":
            m.fix(var, float(np.clip(h.P[key[1], key[2], t], 0.0, sc.p_max)))
        elif fam == "Y":
            m.fix(var, float(bool(h.Y[key[1], key[2], key[3], t])))
        elif fam == "W":
            m.fix(var, float(bool(h.W[key[1], key[2], t])))


def formulate(scenario: Scenario, spec: FormulationSpec) -> FormulatedModel:
    """Full pipeline: core, repetitions, objective, variant; returns a frozen model."""
    m = build_core(scenario, spec)
    build_repetitions(m, scenario, spec.rho)
    build_objective(m, spec, scenario)
    apply_variant(m, spec)
    return m.freeze()
