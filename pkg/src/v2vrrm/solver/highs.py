"""Thin wrapper that loads a MatrixForm into a HiGHS instance."""

from __future__ import annotations

import highspy
import numpy as np

INF = highspy.kHighsInf


def _finite(a):
    a = np.asarray(a, dtype=float).copy()
    a[a == np.inf] = INF
    a[a == -np.inf] = -INF
    return a


def load(mf, *, integral: bool = True, time_limit: float = None, mip_gap: float = 1e-6, feas_tol: float = 1e-9) -> highspy.Highs:
    h = highspy.Highs()
    h.silent()
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("threads", 1)
    h.setOptionValue("primal_feasibility_tolerance", max(feas_tol, 1e-10))
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", max(feas_tol, 1e-10))
    h.setOptionValue("mip_rel_gap", mip_gap)
    h.setOptionValue("mip_abs_gap", 1e-9)
    if time_limit is not None and np.isfinite(time_limit):
        h.setOptionValue("time_limit", float(time_limit))

    lp = highspy.HighsLp()
    n = len(mf.c)
    A = mf.A.tocsc()
    lp.num_col_ = n
    lp.num_row_ = A.shape[0]
    lp.col_cost_ = np.asarray(mf.c, dtype=float)
    lp.col_lower_ = _finite(mf.lb)
    lp.col_upper_ = _finite(mf.ub)
    lp.row_lower_ = _finite(mf.row_lo)
    lp.row_upper_ = _finite(mf.row_hi)
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr.astype(np.int32)
    lp.a_matrix_.index_ = A.indices.astype(np.int32)
    lp.a_matrix_.value_ = A.data.astype(float)
    lp.sense_ = highspy.ObjSense.kMaximize if mf.maximize else highspy.ObjSense.kMinimize
    lp.offset_ = float(mf.c0)
    if integral and mf.boolean.any():
        lp.integrality_ = [highspy.HighsVarType.kInteger if b else highspy.HighsVarType.kContinuous for b in mf.boolean]
    h.passModel(lp)
    return h


def status_name(h: highspy.Highs) -> str:
    st = h.getModelStatus()
    S = highspy.HighsModelStatus
    if st == S.kOptimal:
        return "optimal"
    if st == S.kInfeasible:
        return "infeasible"
    if st in (S.kUnbounded, S.kUnboundedOrInfeasible):
        return "unbounded_or_infeasible" if st == S.kUnboundedOrInfeasible else "unbounded"
    if st in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        return "limit"
    return "other"


def primal(h: highspy.Highs) -> np.ndarray:
    return np.asarray(h.getSolution().col_value, dtype=float)
