"""Checks shared by the unit tests and the acceptance suite."""

from __future__ import annotations

import itertools

import numpy as np

from v2vrrm.milp import MAXIMIZE, MINIMIZE, MilpModel, encode_and, encode_min_select, encode_or
from v2vrrm.solver import SolveOptions, Status, brute_force_solve, solve

BNB = SolveOptions()


def forced_output(kind: str, bits) -> tuple:
    """(min y, max y) over feasible points with the inputs fixed to ``bits``."""
    out = []
    for sense in (MINIMIZE, MAXIMIZE):
        m = MilpModel()
        xs = [m.add_bool(f"x{k}") for k in range(len(bits))]
        for x, b in zip(xs, bits):
            m.fix(x, b)
        y = (encode_or if kind == "or" else encode_and)(m, xs, "y")
        m.set_objective(y, sense)
        sol = solve(m.freeze(), BNB)
        assert sol.status == Status.OPTIMAL, sol.status
        out.append(sol["y"])
    return tuple(out)


def encoder_truth_tables(max_arity: int = 4) -> list:
    """Mismatches between the encoders and Boolean OR/AND, all inputs."""
    bad = []
    for n in range(1, max_arity + 1):
        for bits in itertools.product((0, 1), repeat=n):
            for kind, ref in (("or", int(any(bits))), ("and", int(all(bits)))):
                lo, hi = forced_output(kind, bits)
                if abs(lo - ref) > 1e-6 or abs(hi - ref) > 1e-6:
                    bad.append((kind, bits, lo, hi))
    return bad


def min_select_instance(rng) -> tuple:
    """Random bounded z's fixed to random values; minimise y above them."""
    n = int(rng.integers(1, 5))
    lo = rng.uniform(-10, 10, n)
    hi = lo + rng.uniform(0, 20, n)
    vals = lo + rng.uniform(0, 1, n) * (hi - lo)
    m = MilpModel()
    zs = []
    for k in range(n):
        z = m.add_var(f"z{k}", lb=lo[k], ub=hi[k])
        zs.append(z)
        m.add_constraint(z, "=", vals[k])
    y = m.add_var("y", lb=-100, ub=100)
    zeta = float(hi.max() - lo.min())
    encode_min_select(m, y, zs, zeta)
    m.set_objective(y, MINIMIZE)
    return m.freeze(), float(vals.min())


def random_mblp(rng, n_bool: int, n_cont: int = 2, n_rows: int = 6) -> MilpModel:
    """Random bounded mixed model; most are feasible, some are not."""
    m = MilpModel()
    xs = [m.add_bool(f"b{k}") for k in range(n_bool)]
    cs = [m.add_var(f"c{k}", lb=0.0, ub=float(rng.uniform(1, 5))) for k in range(n_cont)]
    allv = xs + cs
    for r in range(n_rows):
        picks = rng.choice(len(allv), size=min(len(allv), int(rng.integers(2, 6))), replace=False)
        expr = sum((float(rng.integers(-5, 6)) * allv[p] for p in picks), start=0.0)
        sense = ("<=", ">=", "=")[int(rng.choice(3, p=[0.6, 0.3, 0.1]))]
        rhs = {"<=": float(rng.integers(0, 9)), ">=": float(rng.integers(-6, 2)), "=": float(rng.integers(0, 3))}[sense]
        try:
            m.add_constraint(expr, sense, rhs)
        except ValueError:
            pass
    obj = sum((float(rng.normal()) * v for v in allv), start=0.0)
    m.set_objective(obj, MAXIMIZE if rng.random() < 0.5 else MINIMIZE)
    return m.freeze()


def objectives_agree(a, b, rtol: float = 1e-6) -> bool:
    if a.status == Status.INFEASIBLE or b.status == Status.INFEASIBLE:
        return a.status == b.status
    return abs(a.objective - b.objective) <= rtol * (1.0 + abs(b.objective))


def compare_with_brute_force(model, opts=BNB):
    got = solve(model, opts)
    ref = brute_force_solve(model)
    return got, ref, objectives_agree(got, ref)


def audit_clean(alloc, scenario, **audit_kw) -> bool:
    from v2vrrm.model import AuditOptions, audit_allocation

    return not audit_allocation(alloc, scenario, AuditOptions(**audit_kw))


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


__all__ = [
    "audit_clean",
    "compare_with_brute_force",
    "encoder_truth_tables",
    "forced_output",
    "min_select_instance",
    "objectives_agree",
    "random_mblp",
    "rel",
    "np",
]
