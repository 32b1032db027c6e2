"""Linear encodings of OR, AND and min over Boolean/bounded variables."""

from __future__ import annotations

import math
from typing import Optional, Sequence

from ..model import Scenario, gamma_bar
from .model import GE, LE, LinExpr, MilpModel, ModelError, Var


def _bounds(m: MilpModel, x) -> tuple:
    """Interval [lo, hi] an operand can take given its variables' bounds."""
    e = LinExpr.of(x)
    lo = hi = e.const
    for i, c in e.coefs.items():
        v = m.vars[i]
        a, b = c * v.lb, c * v.ub
        lo += min(a, b)
        hi += max(a, b)
    return lo, hi


def _check_boolean_operands(m: MilpModel, xs: Sequence) -> list:
    if len(xs) == 0:
        raise ModelError("Boolean encoder needs at least one operand")
    out = []
    for x in xs:
        lo, hi = _bounds(m, x)
        if lo < -1e-9 or hi > 1 + 1e-9:
            raise ModelError("Boolean encoder operand is not confined to [0, 1]")
        out.append(LinExpr.of(x))
    return out


def encode_or(
    m: MilpModel,
    xs: Sequence,
    name: Optional[str] = None,
    *,
    boolean: bool = True,
    family: str = "or",
    key: Optional[tuple] = None,
) -> Var:
    """y = x_1 or ... or x_n via y >= x_i and y <= sum x_i.

    With ``boolean=False`` y is declared continuous in [0, 1]; its
    integrality is then implied whenever every x_i is integral.
    """
    xs = _check_boolean_operands(m, xs)
    y = m.add_var(name, lb=0.0, ub=1.0, boolean=boolean, key=key, family=key[0] if key else family)
    for x in xs:
        m.add_constraint(y, GE, x, family=family)
    m.add_constraint(y, LE, LinExpr.sum(xs), family=family)
    return y


def encode_and(
    m: MilpModel,
    xs: Sequence,
    name: Optional[str] = None,
    *,
    boolean: bool = True,
    family: str = "and",
    key: Optional[tuple] = None,
) -> Var:
    """y = x_1 and ... and x_n via y <= x_i and y >= sum x_i - (n - 1)."""
    xs = _check_boolean_operands(m, xs)
    y = m.add_var(name, lb=0.0, ub=1.0, boolean=boolean, key=key, family=key[0] if key else family)
    for x in xs:
        m.add_constraint(y, LE, x, family=family)
    m.add_constraint(y, GE, LinExpr.sum(xs) - (len(xs) - 1), family=family)
    return y


def min_select_zeta(m: MilpModel, zs: Sequence) -> float:
    """Smallest big-M valid for ``encode_min_select`` given operand bounds."""
    bnds = [_bounds(m, z) for z in zs]
    return max(b[1] for b in bnds) - min(b[0] for b in bnds)


def encode_min_select(
    m: MilpModel,
    y,
    zs: Sequence,
    zeta: Optional[float] = None,
    *,
    exact: bool = False,
    family: str = "min",
) -> list:
    """Constrain y towards min(z_1..z_n).

    Adds selectors w_i with y >= z_i - zeta (1 - w_i) and sum w_i >= 1, so
    y equals the minimum whenever y is minimised.  ``exact=True`` also adds
    y <= z_i, which pins y to the minimum in every feasible solution.
    Returns the selector variables.
    """
    if len(zs) == 0:
        raise ModelError("min needs at least one operand")
    need = min_select_zeta(m, zs)
    if zeta is None:
        zeta = need
    if not math.isfinite(zeta):
        raise ModelError("big-M for min must be finite")
    if zeta < need - 1e-9:
        raise ModelError(f"big-M {zeta} is below the operand range {need}")
    zs = [LinExpr.of(z) for z in zs]
    if len(zs) == 1:
        m.add_constraint(y, GE, zs[0], family=family)
        if exact:
            m.add_constraint(y, LE, zs[0], family=family)
        return []
    ws = []
    for z in zs:
        w = m.add_var(lb=0.0, ub=1.0, boolean=True, family=family + "_sel", name=None)
        ws.append(w)
        m.add_constraint(LinExpr.of(y) - z - zeta * w, GE, -zeta, family=family)
        if exact:
            m.add_constraint(y, LE, z, family=family)
    m.add_constraint(LinExpr.sum(ws), GE, 1.0, family=family)
    return ws


def big_m_zeta_sinr(scenario: Scenario, *, use_gamma_t: bool = False) -> float:
    """Big-M for the SINR constraint: gamma_bar * (noise + N * Pmax).

    ``use_gamma_t=True`` uses gamma_T in place of gamma_bar, which is never
    smaller.
    """
    g = scenario.gamma_t if use_gamma_t else gamma_bar(scenario.gamma_t)
    return g * (scenario.noise + scenario.N * scenario.p_max)
