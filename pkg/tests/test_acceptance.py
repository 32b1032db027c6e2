"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``.  The Monte Carlo runs are
shared through module fixtures, so the whole file takes roughly half an
hour on one core.
"""

import itertools
import time

import numpy as np
import pytest

from checks import compare_with_brute_force, encoder_truth_tables, min_select_instance, objectives_agree, random_mblp
from conftest import HIGHS, tiny_scenario
from v2vrrm.cds import CdsParams, cds_schedule, proxy_bound
from v2vrrm.clustering import groups_for, make_plan, reuse_distance
from v2vrrm.formulations import (
    FormulationSpec,
    SchedulingOnly,
    epsilon_req_aoi,
    extract_allocation,
    formulate,
    repetitions_required,
)
from v2vrrm.harness import cli
from v2vrrm.harness.config import ExperimentConfig
from v2vrrm.harness.runner import run_experiment
from v2vrrm.harness.scenario import generate_scenario
from v2vrrm.model import AuditOptions, audit_allocation
from v2vrrm.solver import Status, brute_force_solve, solve

pytestmark = pytest.mark.slow

DESK = ExperimentConfig(n_tx=6, F=2, T=6, sweep_values=(4, 6, 8), trials=30, time_limit_s=4.0, seed=2024)
MARGIN = ExperimentConfig(n_tx=6, F=2, T=4, sweep_values=(4,), trials=100, time_limit_s=4.0, seed=7, algorithms=("joint-no-multihop",))


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{n:>2}] {title}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def desk_table():
    return run_experiment(DESK, scope="middle")


@pytest.fixture(scope="module")
def margin_table():
    return run_experiment(MARGIN, scope="all")


@pytest.fixture(scope="module")
def formulation_corpus():
    """Small generated instances, each solved by brute force and by the MBLP solver."""
    rng = np.random.default_rng(99)
    shapes = [s for s in itertools.product((2, 3), (1, 2), (1, 2, 3), (True, False)) if not (s[0] == 3 and s[1] * s[2] > 3)]
    corpus = []
    while len(corpus) < 40:
        N, F, T, mh = shapes[int(rng.integers(len(shapes)))]
        sc = tiny_scenario(rng, N=N, F=F, T=T)
        spec = FormulationSpec(multihop=mh)
        model = formulate(sc, spec)
        k = int(model.matrix_form().boolean.sum())
        if not 1 <= k <= 20:
            continue
        corpus.append((sc, spec, model, solve(model, HIGHS), brute_force_solve(model)))
    return corpus


def test_encoder_truth_tables(report):
    t0 = time.monotonic()
    bad = encoder_truth_tables(4)
    rng = np.random.default_rng(1)
    wrong = 0
    for _ in range(200):
        model, ref = min_select_instance(rng)
        sol = solve(model)
        wrong += sol.status != Status.OPTIMAL or abs(sol.objective - ref) > 1e-6
    dt = time.monotonic() - t0
    report(1, "encoder truth tables", not bad and wrong == 0 and dt < 10, f"or/and mismatches={len(bad)} min-select wrong={wrong}/200 time={dt:.1f}s")


def test_solver_matches_brute_force(report, formulation_corpus):
    t0 = time.monotonic()
    rng = np.random.default_rng(2)
    n, bad = 0, 0
    for k in range(80):
        model = random_mblp(rng, n_bool=int(rng.integers(2, 17)), n_cont=int(rng.integers(0, 4)), n_rows=int(rng.integers(3, 9)))
        for opts in (None, HIGHS):
            got, ref, ok = compare_with_brute_force(model) if opts is None else compare_with_brute_force(model, opts)
            n += 1
            bad += not ok
    for sc, spec, model, sol, ref in formulation_corpus:
        n += 1
        bad += not objectives_agree(sol, ref)
        bb = solve(model)
        n += 1
        bad += not objectives_agree(bb, ref)
    dt = time.monotonic() - t0
    report(2, "solver matches brute force", bad == 0 and n >= 100 and dt < 300, f"{n} comparisons, {bad} mismatches, {dt:.0f}s")


def test_every_optimal_solution_audits_clean(report, formulation_corpus, desk_table, margin_table):
    checked = violations = 0
    for sc, spec, model, sol, _ in formulation_corpus:
        if sol.status == Status.OPTIMAL:
            alloc = extract_allocation(model, sol)
            violations += len(audit_allocation(alloc, sc, AuditOptions(multihop=spec.multihop)))
            checked += 1
    rng = np.random.default_rng(3)
    for _ in range(20):
        sc = tiny_scenario(rng, N=4, F=2, T=3)
        for spec in (FormulationSpec(), FormulationSpec(multihop=False), FormulationSpec(variant=SchedulingOnly())):
            model = formulate(sc, spec)
            sol = solve(model, HIGHS)
            if sol.status == Status.OPTIMAL:
                violations += len(audit_allocation(extract_allocation(model, sol), sc, AuditOptions(multihop=spec.multihop)))
                checked += 1
    for table in (desk_table, margin_table):
        for recs in table.records.values():
            for r in recs:
                violations += r.audit_violations
                checked += r.statuses.get(Status.OPTIMAL, 0)
    report(3, "formulation audits", violations == 0, f"{checked} optimal solutions, {violations} violations")


def test_orderings(report, desk_table):
    rng = np.random.default_rng(4)
    broken = 0
    for _ in range(20):
        sc = tiny_scenario(rng, N=4, F=2, T=3)
        obj = {}
        for name, spec in (("joint", FormulationSpec()), ("no_mh", FormulationSpec(multihop=False)), ("sched", FormulationSpec(variant=SchedulingOnly()))):
            obj[name] = solve(formulate(sc, spec), HIGHS).objective
        broken += obj["joint"] < obj["no_mh"] - 1e-9 or obj["joint"] < obj["sched"] - 1e-9
    for v in DESK.sweep_values:
        a = {r.trial: r.objective for r in desk_table.records[("joint-connectivity", v)]}
        b = {r.trial: r.objective for r in desk_table.records[("joint-no-multihop", v)]}
        broken += sum(a[t] < b[t] - 1e-9 for t in a)
    m = {alg: desk_table.mean_connectivity(alg, 6) for alg in ("joint-connectivity", "cds", "random")}
    chain = m["joint-connectivity"] >= m["cds"] >= m["random"]
    detail = f"pairwise breaks={broken}; T=6 means joint={m['joint-connectivity']:.3f} cds={m['cds']:.3f} random={m['random']:.3f} over {DESK.trials} trials"
    report(4, "ordering properties", broken == 0 and chain, detail)


def test_connectivity_trend_in_T(report, desk_table):
    mh = [desk_table.mean_connectivity("joint-connectivity", v) for v in (4, 6, 8)]
    nm = [desk_table.mean_connectivity("joint-no-multihop", v) for v in (4, 6, 8)]
    rising = mh[0] < mh[1] < mh[2]
    gain = (nm[2] - nm[1]) / nm[1]
    detail = f"multihop {mh[0]:.3f} < {mh[1]:.3f} < {mh[2]:.3f}: {rising}; no-multihop T6->T8 gain {gain:.1%} (limit 10%)"
    report(5, "trend in T", rising and gain <= 0.10, detail)


def test_reuse_distance_and_groups(report):
    cfg = ExperimentConfig(n_tx=10)
    ds = [reuse_distance(generate_scenario(cfg, seed=31, trial=k), 0.01) for k in range(100)]
    inside = sum(11 <= d <= 13 for d in ds)
    g_ok = all(groups_for(10, d) == 3 and groups_for(20, d) == 2 for d in range(11, 14))
    for k in range(5):
        sc = generate_scenario(cfg, seed=31, trial=k)
        plan10 = make_plan(sc, 0.01, 10)
        if 11 <= plan10.d_reuse <= 13:
            g_ok &= plan10.G == 3 and make_plan(sc, 0.01, 20).G == 2
    hist = {d: ds.count(d) for d in sorted(set(ds))}
    report(6, "clustering numerics", inside >= 95 and g_ok, f"d_reuse in [11,13] for {inside}/100 (histogram {hist}); G rule holds: {g_ok}")


def test_intercluster_margin(report, margin_table):
    links = margin_table.link_stats("joint-no-multihop")
    claimed, below, within = links["claimed"], links["below"], links["hard_within_margin"]
    ok = claimed > 0 and below < 0.01 * claimed and within == 0
    report(7, "intercluster margin", ok, f"{MARGIN.trials} trials: {claimed} claimed links, {below} below threshold, {within} hard failures within margin")


def test_reliability_translations(report):
    rng = np.random.default_rng(8)
    bad_rho = bad_eps = 0
    for _ in range(1000):
        n_tx = int(rng.integers(1, 101))
        eps_hop = float(rng.uniform(0, 0.999)) / n_tx
        eps_req = float(10 ** rng.uniform(-12, np.log10(0.999)))
        rho = repetitions_required(eps_req, n_tx, eps_hop)
        bad_rho += not (n_tx * eps_hop) ** rho <= eps_req
    for _ in range(1000):
        p = float(rng.uniform(1e-6, 1 - 1e-9))
        n = int(rng.integers(1, 1001))
        eps = epsilon_req_aoi(p, n)
        bad_eps += not (0 <= eps < 1 and (1 - eps) ** n >= p)
    report(8, "reliability translations", bad_rho == 0 and bad_eps == 0, f"repetitions failures={bad_rho}/1000, AoI budget failures={bad_eps}/1000")


def test_cds_contract(report):
    rng = np.random.default_rng(9)
    mask = (1.0, 1e-3, 1e-3, 1e-3, 1e-3, 10**-4.5)
    problems = []
    for k in range(300):
        n_tx, T, F, G = (int(rng.integers(1, 13)), int(rng.integers(1, 13)), int(rng.integers(1, 6)), int(rng.integers(1, 5)))
        p = CdsParams(int(rng.integers(0, 200)), n_tx, T, F, G, float(rng.uniform(0.01, 0.9)), mask)
        res = cds_schedule(p)
        n, Tg = len(p.members), len(p.slots)
        placed = [i for i, _, _ in res.stage1_order]
        if len(placed) != len(set(placed)) or len(placed) != min(n, F * Tg):
            problems.append((k, "stage one"))
        if res.proxy_evaluations > proxy_bound(n, F, Tg):
            problems.append((k, "proxy bound"))
        for i in p.members:
            if not np.array_equal(cds_schedule(CdsParams(i, n_tx, T, F, G, p.beta, mask)).X, res.X):
                problems.append((k, "member disagreement"))
                break
        if n >= 2 and Tg >= 2:
            if res.stage1_order[:2] != [(0, 0, 0), (1, 0, 1)] or res.slots[:2] != (p.group, p.group + G):
                problems.append((k, "first placements"))
    report(9, "CDS contract", not problems, f"300 parameter sets, problems={problems[:5]}")


def test_same_seed_same_bytes(report, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(ExperimentConfig(n_tx=4, T=4, clusters=3, trials=2, sweep_values=(3, 4), time_limit_s=60).dump())
    runs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert cli.main(["--config", str(cfg), "--seed", "17", "--out", str(out), "--scope", "middle", "-q"]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    same = runs[0] == runs[1] and len(runs[0]) > 0
    report(10, "determinism", same, f"{len(runs[0])} CSV files compared")
