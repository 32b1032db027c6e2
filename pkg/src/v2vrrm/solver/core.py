"""Solve mixed Boolean linear programs.

Two backends share one interface.  ``"bnb"`` is a depth-first
branch-and-bound driving the in-house bounded simplex.  ``"highs"``
delegates to HiGHS and then polishes the continuous part
with all Booleans fixed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..milp.model import MilpModel, ModelError
from . import highs
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, UnboundedError, simplex_solve

INT_TOL = 1e-6


class Status:
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    TIME_LIMIT = "TimeLimit"


class TooManyBooleans(ValueError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    time_limit_s: float = math.inf
    mip_gap: float = 1e-6
    mip_abs_gap: float = 1e-9  # set just below 1 when the objective only takes integer values
    lp_tolerance: float = 1e-9
    branch_rule: str = "most-fractional"
    seed: int = 0
    backend: str = "bnb"

    def __post_init__(self):
        if not (self.mip_gap > 0 and self.lp_tolerance > 0 and self.mip_abs_gap >= 0):
            raise ValueError("solver tolerances must be positive")
        if self.branch_rule not in ("most-fractional", "first-index"):
            raise ValueError(f"unknown branch rule {self.branch_rule!r}")
        if self.backend not in ("bnb", "highs"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if not self.time_limit_s > 0:
            raise ValueError("time limit must be positive")


@dataclass
class Solution:
    status: str
    objective: float
    assignment: dict = field(default_factory=dict)
    node_count: int = 0
    incumbent_trace: list = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def has_solution(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE) or (self.status == Status.TIME_LIMIT and bool(self.assignment))

    def __getitem__(self, name: str) -> float:
        return self.assignment[name]


def _validate(model: MilpModel):
    if not model.frozen:
        raise ModelError("freeze the model before solving")
    for v in model.vars:
        if v.boolean and (v.lb < 0 or v.ub > 1):
            raise ModelError(f"Boolean variable {v.name} has bounds outside [0, 1]")


def _assignment(model: MilpModel, x: np.ndarray) -> dict:
    out = {}
    for v in model.vars:
        val = float(x[v.index])
        out[v.name] = float(round(val)) if v.boolean else val
    return out


def _snap(model, mf, x):
    x = x.copy()
    x[mf.boolean] = np.round(x[mf.boolean])
    return x


def solve_lp(model: MilpModel, opts: SolveOptions = SolveOptions(), lb=None, ub=None):
    """LP relaxation (all Booleans relaxed to [0, 1]).  Returns (status, x, obj)."""
    mf = model.matrix_form()
    lb = mf.lb if lb is None else lb
    ub = mf.ub if ub is None else ub
    sign = -1.0 if mf.maximize else 1.0
    res = simplex_solve(mf.A, mf.row_lo, mf.row_hi, lb, ub, sign * mf.c, tol=opts.lp_tolerance)
    if res.status == OPTIMAL:
        return res.status, res.x, float(mf.c @ res.x + mf.c0)
    return res.status, res.x, math.nan


def _start_point(model: MilpModel, mf, start, opts: SolveOptions):
    """Complete a partial assignment into a feasible point, or None.

    Booleans are taken from ``start`` (missing names mean 0); the
    continuous variables are re-optimised with those Booleans pinned.
    """
    if not start:
        return None
    guess = np.zeros(len(model.vars))
    for name, val in start.items():
        if model.has_name(name):
            guess[model.by_name(name).index] = val
    bools = np.flatnonzero(mf.boolean)
    lp = highs.load(mf, integral=False, feas_tol=opts.lp_tolerance)
    return _fixed_lp(lp, mf, bools, np.round(guess[bools]))


def _bnb(model: MilpModel, opts: SolveOptions, start=None) -> Solution:
    mf = model.matrix_form()
    start_x = _start_point(model, mf, start, opts)
    start = time.monotonic()
    sign = 1.0 if mf.maximize else -1.0  # work with "larger is better"
    bools = np.flatnonzero(mf.boolean)
    best_x, best_val = None, -math.inf
    trace = []
    if start_x is not None:
        best_x, best_val = start_x, sign * float(mf.c @ start_x + mf.c0)
        trace.append(float(mf.c @ start_x + mf.c0))
    nodes = 0
    timed_out = False
    stack = [(mf.lb.copy(), mf.ub.copy())]
    while stack:
        if time.monotonic() - start > opts.time_limit_s:
            timed_out = True
            break
        lb, ub = stack.pop()
        nodes += 1
        status, x, obj = solve_lp(model, opts, lb, ub)
        if status == UNBOUNDED:
            raise UnboundedError("LP relaxation is unbounded")
        if status == INFEASIBLE:
            continue
        val = sign * obj
        if best_x is not None and val <= best_val + max(opts.mip_gap * max(1.0, abs(best_val)), opts.mip_abs_gap):
            continue
        frac = np.abs(x[bools] - np.round(x[bools]))
        open_ = np.flatnonzero(frac > INT_TOL)
        if open_.size == 0:
            # Re-solve with Booleans snapped so continuous values match exactly.
            xs = _snap(model, mf, x)
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[bools] = ub2[bools] = xs[bools]
            st2, x2, obj2 = solve_lp(model, opts, lb2, ub2)
            if st2 != OPTIMAL:
                continue
            x2[bools] = xs[bools]
            v2 = sign * obj2
            if v2 > best_val:
                best_x, best_val = x2, v2
                trace.append(obj2)
            continue
        if opts.branch_rule == "first-index":
            j = int(bools[open_[0]])
        else:
            # most fractional, lowest id on ties
            score = np.minimum(frac[open_], 1 - frac[open_])
            j = int(bools[open_[np.argmax(score >= score.max() - 1e-12)]])
        down_ub = ub.copy()
        down_ub[j] = 0.0
        up_lb = lb.copy()
        up_lb[j] = 1.0
        stack.append((lb, down_ub))
        stack.append((up_lb, ub))  # explored first
    elapsed = time.monotonic() - start
    if best_x is None:
        st = Status.TIME_LIMIT if timed_out else Status.INFEASIBLE
        return Solution(st, math.nan, {}, nodes, trace, elapsed)
    obj = float(mf.c @ best_x + mf.c0)
    st = Status.TIME_LIMIT if timed_out else Status.OPTIMAL
    return Solution(st, obj, _assignment(model, best_x), nodes, trace, elapsed)


def _fixed_lp(h, mf, bool_idx, values):
    """Re-solve the loaded LP with the Booleans pinned; returns x or None."""
    h.changeColsBounds(len(bool_idx), bool_idx.astype(np.int32), values, values)
    h.run()
    st = highs.status_name(h)
    if st == "unbounded":
        raise UnboundedError("continuous remainder is unbounded")
    if st == "unbounded_or_infeasible":
        h.setOptionValue("presolve", "off")
        h.run()
        h.setOptionValue("presolve", "choose")
        st = highs.status_name(h)
        if st == "unbounded":
            raise UnboundedError("continuous remainder is unbounded")
    if st != "optimal":
        return None
    x = np.clip(highs.primal(h), mf.lb, mf.ub)
    x[bool_idx] = values
    return x


def _highs(model: MilpModel, opts: SolveOptions, start=None) -> Solution:
    mf = model.matrix_form()
    if not model.vars:
        # HiGHS reports an empty model as "model empty", not optimal.
        return Solution(Status.OPTIMAL, float(mf.c0), {}, 0, [float(mf.c0)], 0.0)
    start_x = _start_point(model, mf, start, opts)
    start = time.monotonic()
    h = highs.load(mf, time_limit=opts.time_limit_s, mip_gap=opts.mip_gap, feas_tol=opts.lp_tolerance)
    h.setOptionValue("mip_abs_gap", max(opts.mip_abs_gap, 1e-9))
    if start_x is not None:
        hint = highs.highspy.HighsSolution()
        hint.col_value = list(start_x)
        hint.value_valid = True
        h.setSolution(hint)
    h.run()
    st = highs.status_name(h)
    if st in ("unbounded", "unbounded_or_infeasible"):
        lp_status, _, _ = solve_lp(model, opts)
        if lp_status == UNBOUNDED:
            raise UnboundedError("model is unbounded")
        st = "infeasible"
    info = h.getInfo()
    nodes = int(info.mip_node_count) if info.mip_node_count >= 0 else 0
    has_x = info.primal_solution_status == 2  # kSolutionStatusFeasible
    if st == "infeasible" or not (has_x or start_x is not None):
        status = Status.INFEASIBLE if st == "infeasible" else Status.TIME_LIMIT
        return Solution(status, math.nan, {}, nodes, [], time.monotonic() - start)
    x = highs.primal(h) if has_x else start_x
    bools = np.flatnonzero(mf.boolean)
    if bools.size:
        # Polish: pin the Booleans exactly and re-solve the continuous part.
        lp = highs.load(mf, integral=False, feas_tol=opts.lp_tolerance)
        polished = _fixed_lp(lp, mf, bools, np.round(x[bools]))
        if polished is not None:
            x = polished
        else:
            x = start_x if start_x is not None else _snap(model, mf, x)
    obj = float(mf.c @ x + mf.c0)
    sign = 1.0 if mf.maximize else -1.0
    if start_x is not None and sign * float(mf.c @ start_x + mf.c0) > sign * obj:
        x, obj = start_x, float(mf.c @ start_x + mf.c0)
    status = Status.OPTIMAL if st == "optimal" else Status.TIME_LIMIT
    return Solution(status, obj, _assignment(model, x), nodes, [obj], time.monotonic() - start)


def solve(model: MilpModel, opts: SolveOptions = SolveOptions(), start: dict = None) -> Solution:
    """Solve a frozen model.  Raises UnboundedError for unbounded models.

    ``start`` optionally maps variable names to a known (possibly partial)
    solution; it seeds the incumbent when it can be completed feasibly.
    """
    _validate(model)
    if opts.backend == "highs":
        return _highs(model, opts, start)
    return _bnb(model, opts, start)


# -- exhaustive oracle -----------------------------------------------------


def brute_force_solve(model: MilpModel, limit_bools: int = 24, chunk: int = 1 << 14) -> Solution:
    """Exact optimum by enumerating every Boolean assignment.

    Rows that involve only Booleans, and rows whose continuous part cannot
    reach the required range, are screened in vectorised form.  The
    continuous remainder of each surviving assignment is solved with HiGHS,
    which keeps this oracle independent of the in-house simplex.
    Assignments whose objective cannot beat the incumbent are skipped.
    """
    _validate(model)
    mf = model.matrix_form()
    bools = np.flatnonzero(mf.boolean)
    k = bools.size
    if k > limit_bools:
        raise TooManyBooleans(f"model has {k} Booleans, limit is {limit_bools}")
    start = time.monotonic()
    n = len(model.vars)
    cont = np.flatnonzero(~mf.boolean)
    sign = 1.0 if mf.maximize else -1.0

    A = mf.A.tocsc()
    Ab = A[:, bools].toarray()
    Acd = A[:, cont].toarray()
    clb, cub = mf.lb[cont], mf.ub[cont]
    with np.errstate(invalid="ignore"):
        cont_min = np.where(Acd > 0, Acd * clb, np.where(Acd < 0, Acd * cub, 0.0)).sum(axis=1)
        cont_max = np.where(Acd > 0, Acd * cub, np.where(Acd < 0, Acd * clb, 0.0)).sum(axis=1)
        cc = sign * mf.c[cont]
        cont_obj_max = float(np.where(cc > 0, cc * cub, np.where(cc < 0, cc * clb, 0.0)).sum())
    cb = sign * mf.c[bools]
    fixed_lo, fixed_hi = mf.lb[bools], mf.ub[bools]
    tol = 1e-7
    lp = highs.load(mf, integral=False) if cont.size else None

    best_val, best_x = -math.inf, None
    evaluated = 0
    total = 1 << k
    weights = 1 << np.arange(k, dtype=np.int64)
    for base in range(0, total, chunk):
        ids = np.arange(base, min(total, base + chunk), dtype=np.int64)
        B = ((ids[:, None] & weights[None, :]) > 0).astype(float)
        ok = np.all((B >= fixed_lo - tol) & (B <= fixed_hi + tol), axis=1)
        act = B @ Ab.T
        ok &= np.all(act + cont_max >= mf.row_lo - tol, axis=1)
        ok &= np.all(act + cont_min <= mf.row_hi + tol, axis=1)
        if not ok.any():
            continue
        bound = B @ cb + cont_obj_max
        order = np.flatnonzero(ok)
        order = order[np.argsort(-bound[order], kind="stable")]
        for idx in order:
            if bound[idx] <= best_val + 1e-9 * max(1.0, abs(best_val)):
                break
            evaluated += 1
            if lp is None:
                x = np.zeros(n)
                x[bools] = B[idx]
            else:
                x = _fixed_lp(lp, mf, bools, B[idx])
                if x is None:
                    continue
            val = sign * (mf.c @ x)
            if val > best_val + 1e-12:
                best_val, best_x = val, x
    elapsed = time.monotonic() - start
    if best_x is None:
        return Solution(Status.INFEASIBLE, math.nan, {}, evaluated, [], elapsed)
    obj = float(mf.c @ best_x + mf.c0)
    return Solution(Status.OPTIMAL, obj, _assignment(model, best_x), evaluated, [obj], elapsed)
