"""Monte Carlo runner: drop a convoy, plan groups, schedule, replay, measure."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..cds import CdsParams, MessagePicker, cds_schedule
from ..clustering import GroupPlan, make_plan, reduce_for_group, stitch
from ..formulations import FormulationSpec, aoi_from_receptions, extract_allocation, formulate
from ..milp import save_lp
from ..model import Allocation, AuditOptions, Scenario, audit_allocation, sinr_tensor
from ..solver import SolveOptions, Status, solve
from .config import ExperimentConfig
from .metrics import MetricsTable, TrialRecord
from .scenario import STREAM_RANDOM_SCHEDULE, generate_scenario, rng_for

JOINT = {"joint-connectivity": True, "joint-no-multihop": False}

# Relative slack when replaying decodes, matching the auditor's SINR tolerance.
DECODE_RTOL = 1e-6
# Claimed links are "hard failures" only below this fraction of gamma_T.
HARD_FAIL = 1.0 - 1e-3


def middle_cluster(plan: GroupPlan) -> int:
    return plan.C // 2


def groups_in_scope(plan: GroupPlan, scope: str) -> list:
    if scope == "all":
        return sorted(plan.T_sets)
    mid = middle_cluster(plan)
    return sorted(cg for cg in plan.T_sets if cg[0] == mid)


# -- schedulers --------------------------------------------------------------


@dataclass
class JointOutcome:
    allocation: Allocation
    statuses: Counter = field(default_factory=Counter)
    objective: float = 0.0
    audit_violations: int = 0
    assignments: dict = field(default_factory=dict)  # (c, g) -> solver assignment


def schedule_joint(
    scenario: Scenario,
    plan: GroupPlan,
    groups: list,
    cfg: ExperimentConfig,
    multihop: bool,
    dump_lp: Optional[Path] = None,
    tag: str = "",
    starts: Optional[dict] = None,
) -> JointOutcome:
    """Solve one connectivity MBLP per group and stitch the results.

    ``starts`` maps groups to known solutions used as initial incumbents.
    Without it, the multihop problem is seeded with the single-hop optimum,
    which is always feasible for it.
    """
    if multihop and starts is None:
        starts = schedule_joint(scenario, plan, groups, cfg, False).assignments
    starts = starts or {}
    out = JointOutcome(Allocation.zeros(scenario))
    pieces = []
    opts = SolveOptions(
        backend=cfg.backend,
        time_limit_s=cfg.time_limit_s,
        mip_gap=cfg.mip_gap,
        mip_abs_gap=1.0 - 1e-6,  # connectivity counts links, so it is integral
    )
    for c, g in groups:
        if not plan.S_sets[g]:
            continue  # more groups than slots: this group stays silent
        piece, spec = reduce_for_group(scenario, plan, c, g, FormulationSpec(multihop=multihop))
        sub = piece.scenario
        if sub.M == 0:
            continue
        model = formulate(sub, spec)
        if dump_lp is not None:
            dump_lp.mkdir(parents=True, exist_ok=True)
            save_lp(model, dump_lp / f"{tag}c{c}g{g}.lp")
        sol = solve(model, opts, start=starts.get((c, g)))
        out.statuses[sol.status] += 1
        if not sol.assignment:
            continue
        alloc = extract_allocation(model, sol)
        out.objective += sol.objective
        out.audit_violations += len(audit_allocation(alloc, sub, AuditOptions(multihop=multihop)))
        out.assignments[(c, g)] = sol.assignment
        pieces.append((piece, alloc))
    out.allocation = stitch(scenario, pieces)
    return out


def schedule_cds(scenario: Scenario, plan: GroupPlan, groups: list, cfg: ExperimentConfig) -> np.ndarray:
    """(N, F, T) RB schedule from the distributed greedy rule."""
    out = np.zeros((scenario.N, scenario.F, scenario.T), dtype=bool)
    for c, g in groups:
        params = CdsParams(
            i_prime=plan.T_sets[(c, g)][0],
            n_tx=plan.n_tx,
            T=scenario.T,
            F=scenario.F,
            G=plan.G,
            beta=cfg.beta,
            acir=tuple(float(a) for a in scenario.acir),
            n_total=scenario.N,
        )
        out |= cds_schedule(params).global_schedule(scenario.N, scenario.T)
    return out


def schedule_random(scenario: Scenario, plan: GroupPlan, groups: list, rng: np.random.Generator) -> np.ndarray:
    """Every RB of a group goes to a uniformly drawn member idle in that slot."""
    out = np.zeros((scenario.N, scenario.F, scenario.T), dtype=bool)
    for c, g in groups:
        members = plan.T_sets[(c, g)]
        for t in plan.S_sets[g]:
            for f in range(scenario.F):
                idle = [i for i in members if not out[i, :, t].any()]
                if idle:
                    out[idle[int(rng.integers(len(idle)))], f, t] = True
    return out


# -- physical replay -----------------------------------------------------------


@dataclass
class Replay:
    W: np.ndarray  # (N, M, T) first decoding
    delivered: np.ndarray  # (N, N, F, T) links that carried a held message above threshold


def replay(
    scenario: Scenario,
    P: np.ndarray,
    choose: Callable[[int, np.ndarray], dict],
    on_receive: Optional[Callable[[int, int, int, int], None]] = None,
) -> Replay:
    """Slot-by-slot decoding with the true SINR of the whole network.

    ``choose(t, first)`` returns {(i, f): message or -1} for slot t, where
    ``first[j, m]`` is the slot of j's first decoding of m so far (-1 if
    none).  A transmission with message -1 only interferes.
    """
    N, M, F, T = scenario.N, scenario.M, scenario.F, scenario.T
    gamma = sinr_tensor(P, scenario)
    first = np.full((N, M), -1, dtype=int)
    W = np.zeros((N, M, T), dtype=bool)
    delivered = np.zeros((N, N, F, T), dtype=bool)
    thr = scenario.gamma_t * (1.0 - DECODE_RTOL)
    source = [scenario.origin(m) for m in range(M)]
    for t in range(T):
        sends = choose(t, first)
        busy = np.zeros(N, dtype=bool)
        for i, _ in sends:
            busy[i] = True
        heard = []
        for (i, f), m in sorted(sends.items()):
            if m < 0:
                continue
            for j in np.flatnonzero(gamma[i, :, f, t] >= thr):
                if j == i or busy[j]:
                    continue
                delivered[i, j, f, t] = True
                if j != source[m]:
                    heard.append((int(j), int(m), int(i)))
        for j, m, i in heard:
            if first[j, m] < 0:
                first[j, m] = t
                W[j, m, t] = True
            if on_receive is not None:
                on_receive(j, m, i, t)
    return Replay(W, delivered)


def _holds(scenario: Scenario, i: int, m: int, t: int, first: np.ndarray) -> bool:
    if scenario.origin(m) == i:
        return scenario.available_time(m) <= t
    return 0 <= first[i, m] <= t - scenario.t_p


def replay_allocation(scenario: Scenario, alloc: Allocation) -> Replay:
    X = np.asarray(alloc.X, dtype=bool)

    def choose(t, first):
        out = {}
        for i, m, f in zip(*np.nonzero(X[:, :, :, t])):
            out[(int(i), int(f))] = int(m) if _holds(scenario, i, m, t, first) else -1
        return out

    return replay(scenario, np.asarray(alloc.P, dtype=float), choose)


def replay_schedule(scenario: Scenario, sched: np.ndarray) -> Replay:
    """Equal full power on every scheduled RB; messages picked online."""
    N = scenario.N
    P = np.where(sched, scenario.p_max, 0.0)
    P = P / np.maximum(sched.sum(axis=1, keepdims=True), 1)
    pickers = {}
    for i in range(N):
        own = scenario.messages_of(i)
        if own:
            pickers[i] = MessagePicker(i, own[0], scenario.t_p)

    def choose(t, first):
        out = {}
        for i in range(N):
            fs = np.flatnonzero(sched[i, :, t])
            if fs.size == 0:
                continue
            m = pickers[i].pick(t) if i in pickers else -1
            for f in fs:
                out[(i, int(f))] = m
        return out

    def on_receive(j, m, i, t):
        if j in pickers:
            pickers[j].hear(m, i, t)

    return replay(scenario, P, choose, on_receive)


# -- measurements ----------------------------------------------------------------


def link_audit(scenario: Scenario, plan: GroupPlan, alloc: Allocation) -> dict:
    """Recheck every claimed link against the true network SINR."""
    P = np.asarray(alloc.P, dtype=float)
    gamma = sinr_tensor(P, scenario)
    L = scenario.acir_matrix()
    limit = plan.delta * scenario.noise
    claimed = below = hard = hard_within = 0
    for i, j, f, t in zip(*np.nonzero(alloc.Y)):
        claimed += 1
        g = gamma[i, j, f, t]
        if g < scenario.gamma_t:
            below += 1
        group = set(plan.T_sets[plan.group_of(int(i))])
        outside = [k for k in range(scenario.N) if k not in group]
        icI = float(np.sum(P[outside, :, t] @ L[:, f] * scenario.H[outside, j]))
        if g < scenario.gamma_t * HARD_FAIL:
            hard += 1
            if icI <= limit:
                hard_within += 1
    return {"claimed": claimed, "below": below, "hard": hard, "hard_within_margin": hard_within}


def measure(scenario: Scenario, plan: GroupPlan, rep: Replay) -> dict:
    mid = middle_cluster(plan)
    vues = [i for (c, g), tx in sorted(plan.T_sets.items()) if c == mid for i in tx]
    first_vue = vues[0]
    got = rep.W.any(axis=2)
    conn, lat, unreachable = [], [], 0
    A = aoi_from_receptions(rep.W, scenario).max(axis=2)
    aoi = []
    t_rx = rep.W.argmax(axis=2)
    for i in vues:
        msgs = scenario.messages_of(i)
        reach = set(plan.D_sets[plan.group_of(i)])
        n = 0
        for j in sorted(scenario.receivers[i]):
            aoi.append(A[i, j])
            unreachable += j not in reach
            hit = [mm for mm in msgs if got[j, mm]]
            if hit:
                n += 1
                lat.append(min(t_rx[j, mm] - scenario.t_gen[mm] for mm in hit))
        conn.append(n)
    return {
        "connectivity": np.array(conn, dtype=float),
        "indices": np.array(vues) - first_vue,
        "latency": float(np.mean(lat)) if lat else float("nan"),
        "aoi": float(np.mean(aoi)) if aoi else float("nan"),
        "unreachable": unreachable,
    }


# -- driver -----------------------------------------------------------------------


def run_trial(
    cfg: ExperimentConfig,
    value: int,
    trial: int,
    value_index: int = 0,
    scope: str = "all",
    dump_lp: Optional[Path] = None,
) -> list:
    """All configured algorithms on one shared convoy drop."""
    c = cfg.at(value)
    scenario = generate_scenario(c, cfg.seed, trial)
    plan = make_plan(scenario, c.delta, c.n_tx)
    groups = groups_in_scope(plan, scope)
    records = []
    single_hop = None
    # The single-hop solve runs first so that it can seed the multihop one.
    for alg in sorted(cfg.algorithms, key=lambda a: a != "joint-no-multihop"):
        extra = {}
        if alg in JOINT:
            tag = f"{alg}_{cfg.sweep_var}{value}_trial{trial}_"
            starts = single_hop.assignments if (JOINT[alg] and single_hop is not None) else None
            out = schedule_joint(scenario, plan, groups, c, JOINT[alg], dump_lp, tag, starts)
            if not JOINT[alg]:
                single_hop = out
            rep = replay_allocation(scenario, out.allocation)
            extra = {
                "statuses": dict(out.statuses),
                "objective": out.objective,
                "audit_violations": out.audit_violations,
                "links": link_audit(scenario, plan, out.allocation),
            }
        elif alg == "cds":
            rep = replay_schedule(scenario, schedule_cds(scenario, plan, groups, c))
        else:
            rng = rng_for(cfg.seed, trial, STREAM_RANDOM_SCHEDULE + value_index)
            rep = replay_schedule(scenario, schedule_random(scenario, plan, groups, rng))
        m = measure(scenario, plan, rep)
        records.append(TrialRecord(alg, value, trial, plan.d_reuse, plan.G, **m, **extra))
    return sorted(records, key=lambda r: cfg.algorithms.index(r.algorithm))


def run_experiment(
    cfg: ExperimentConfig,
    *,
    scope: str = "all",
    dump_lp: Optional[Path] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> MetricsTable:
    """Every (sweep value, trial) pair in a fixed order; see ``run_trial``.

    ``scope="middle"`` schedules only the middle cluster, which is all
    the metrics look at; other clusters then stay silent.
    """
    if scope not in ("all", "middle"):
        raise ValueError("scope must be 'all' or 'middle'")
    table = MetricsTable(cfg.sweep_var, cfg.sweep_values, cfg.algorithms)
    for vi, value in enumerate(cfg.sweep_values):
        for trial in range(cfg.trials):
            for rec in run_trial(cfg, value, trial, vi, scope, dump_lp):
                table.add(rec)
            if progress is not None:
                progress(f"{cfg.sweep_var}={value} trial {trial + 1}/{cfg.trials}")
    return table
