"""Mixed Boolean linear program container with a small expression algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy import sparse

LE, GE, EQ = "<=", ">=", "="
SENSES = (LE, GE, EQ)
MAXIMIZE, MINIMIZE = "max", "min"


class ModelError(ValueError):
    """Malformed model: foreign variables, bad bounds, mutation after freeze."""


class Var:
    """A model variable.  Bounds live on the variable and may be tightened
    until the owning model is frozen."""

    __slots__ = ("index", "name", "lb", "ub", "boolean", "key", "family", "_owner")

    def __init__(self, index, name, lb, ub, boolean, key, family, owner):
        self.index = index
        self.name = name
        self.lb = lb
        self.ub = ub
        self.boolean = boolean
        self.key = key
        self.family = family
        self._owner = owner

    def __repr__(self):
        kind = "bool" if self.boolean else "cont"
        return f"Var({self.name}, {kind}, [{self.lb}, {self.ub}])"

    def __hash__(self):
        return id(self)

    # arithmetic delegates to LinExpr
    def _expr(self) -> "LinExpr":
        return LinExpr({self.index: 1.0}, 0.0, self._owner)

    def __add__(self, other):
        return self._expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._expr() - other

    def __rsub__(self, other):
        return (-1.0) * self._expr() + other

    def __mul__(self, k):
        return self._expr() * k

    __rmul__ = __mul__

    def __neg__(self):
        return self._expr() * -1.0


class LinExpr:
    """Sparse affine expression: sum of coef * var plus a constant."""

    __slots__ = ("coefs", "const", "_owner")

    def __init__(self, coefs=None, const=0.0, owner=None):
        self.coefs = dict(coefs or {})
        self.const = float(const)
        self._owner = owner

    @staticmethod
    def of(x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, Var):
            return x._expr()
        if isinstance(x, (int, float, np.integer, np.floating)):
            return LinExpr({}, float(x))
        raise TypeError(f"cannot use {type(x).__name__} in a linear expression")

    @staticmethod
    def sum(items: Iterable) -> "LinExpr":
        out = LinExpr()
        for it in items:
            out.iadd(it)
        return out

    def copy(self) -> "LinExpr":
        return LinExpr(self.coefs, self.const, self._owner)

    def iadd(self, other, k: float = 1.0) -> "LinExpr":
        """In-place self += k * other."""
        if isinstance(other, Var):
            self._adopt(other._owner)
            self.coefs[other.index] = self.coefs.get(other.index, 0.0) + k
            return self
        o = LinExpr.of(other)
        self._adopt(o._owner)
        for i, c in o.coefs.items():
            self.coefs[i] = self.coefs.get(i, 0.0) + k * c
        self.const += k * o.const
        return self

    def _adopt(self, owner) -> None:
        if owner is None:
            return
        if self._owner is not None and self._owner is not owner:
            raise ModelError("expression mixes variables from different models")
        self._owner = owner

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return (self * -1.0).iadd(other)

    def __mul__(self, k):
        if not isinstance(k, (int, float, np.integer, np.floating)):
            raise TypeError("linear expressions can only be scaled by numbers")
        k = float(k)
        return LinExpr({i: c * k for i, c in self.coefs.items()}, self.const * k, self._owner)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        terms = " ".join(f"{c:+g}*v{i}" for i, c in sorted(self.coefs.items()))
        return f"LinExpr({terms} {self.const:+g})"

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(c * x[i] for i, c in self.coefs.items())


Operand = Union[Var, LinExpr, float, int]


@dataclass
class Constraint:
    coefs: dict
    sense: str
    rhs: float
    name: str
    family: str


@dataclass
class MatrixForm:
    """Row-range form: row_lo <= A x <= row_hi, lb <= x <= ub."""

    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    c0: float
    maximize: bool
    boolean: np.ndarray


class MilpModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.vars: list[Var] = []
        self.constraints: list[Constraint] = []
        self.objective = LinExpr()
        self.sense = MAXIMIZE
        self._by_name: dict[str, Var] = {}
        self._by_key: dict[tuple, Var] = {}
        self._frozen = False
        self._matrix: Optional[MatrixForm] = None
        self._cons_counter: dict[str, int] = {}

    # -- building --------------------------------------------------------

    def _check_mutable(self):
        if self._frozen:
            raise ModelError("model is frozen")

    def add_var(
        self,
        name: Optional[str] = None,
        *,
        lb: float = 0.0,
        ub: float = 1.0,
        boolean: bool = False,
        key: Optional[tuple] = None,
        family: Optional[str] = None,
    ) -> Var:
        self._check_mutable()
        if key is not None and name is None:
            name = "_".join(str(k) for k in key)
        if name is None:
            name = f"v{len(self.vars)}"
        if name in self._by_name:
            raise ModelError(f"duplicate variable name {name!r}")
        if boolean:
            lb, ub = max(0.0, float(lb)), min(1.0, float(ub))
        lb, ub = float(lb), float(ub)
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ModelError(f"variable {name} has invalid bounds [{lb}, {ub}]")
        if family is None:
            family = key[0] if key else name.split("_")[0]
        v = Var(len(self.vars), name, lb, ub, boolean, key, family, self)
        self.vars.append(v)
        self._by_name[name] = v
        if key is not None:
            self._by_key[tuple(key)] = v
        return v

    def add_bool(self, name=None, **kw) -> Var:
        return self.add_var(name, lb=0.0, ub=1.0, boolean=True, **kw)

    def add_constraint(self, expr: Operand, sense: str, rhs: Operand = 0.0, name: Optional[str] = None, family: str = "c") -> Optional[Constraint]:
        """Add ``expr sense rhs``.  Both sides may be expressions.

        Constraints without variables are checked immediately: satisfied
        ones are dropped, violated ones raise.
        """
        self._check_mutable()
        if sense not in SENSES:
            raise ModelError(f"unknown constraint sense {sense!r}")
        e = LinExpr.of(expr) - LinExpr.of(rhs)
        if e._owner is not None and e._owner is not self:
            raise ModelError("expression uses variables from another model")
        coefs = {i: c for i, c in e.coefs.items() if c != 0.0}
        bound = -e.const
        for c in coefs.values():
            if not math.isfinite(c):
                raise ModelError("non-finite coefficient")
        if not math.isfinite(bound):
            raise ModelError("non-finite right-hand side")
        if not coefs:
            ok = {LE: 0 <= bound + 1e-9, GE: 0 >= bound - 1e-9, EQ: abs(bound) <= 1e-9}[sense]
            if not ok:
                raise ModelError(f"constant constraint {name or family} is violated")
            return None
        if name is None:
            k = self._cons_counter.get(family, 0)
            self._cons_counter[family] = k + 1
            name = f"{family}.{k}"
        con = Constraint(coefs, sense, bound, name, family)
        self.constraints.append(con)
        return con

    def set_objective(self, expr: Operand, sense: str = MAXIMIZE):
        self._check_mutable()
        if sense not in (MAXIMIZE, MINIMIZE):
            raise ModelError(f"objective sense must be 'max' or 'min', got {sense!r}")
        self.objective = LinExpr.of(expr).copy()
        self.sense = sense

    def fix(self, v: Var, value: float):
        self._check_mutable()
        value = float(value)
        if value < v.lb - 1e-9 or value > v.ub + 1e-9:
            raise ModelError(f"cannot fix {v.name} to {value}: outside [{v.lb}, {v.ub}]")
        v.lb = v.ub = value

    def drop_family(self, family: str) -> int:
        self._check_mutable()
        before = len(self.constraints)
        self.constraints = [c for c in self.constraints if c.family != family]
        return before - len(self.constraints)

    def freeze(self) -> "MilpModel":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    # -- lookup ------------------------------------------------------------

    def var(self, *key) -> Optional[Var]:
        """Variable with the given key tuple, or None if it was pruned."""
        if len(key) == 1 and isinstance(key[0], tuple):
            key = key[0]
        return self._by_key.get(tuple(key))

    def by_name(self, name: str) -> Var:
        return self._by_name[name]

    def has_name(self, name: str) -> bool:
        return name in self._by_name

    def family_vars(self, family: str) -> list:
        return [v for v in self.vars if v.family == family]

    @property
    def n_bools(self) -> int:
        return sum(v.boolean for v in self.vars)

    def families(self) -> set:
        return {c.family for c in self.constraints}

    # -- numeric views ----------------------------------------------------

    def matrix_form(self) -> MatrixForm:
        if self._matrix is not None and self._frozen:
            return self._matrix
        rows, cols, vals = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for r, con in enumerate(self.constraints):
            for i, c in con.coefs.items():
                rows.append(r)
                cols.append(i)
                vals.append(c)
            lo[r] = con.rhs if con.sense in (GE, EQ) else -np.inf
            hi[r] = con.rhs if con.sense in (LE, EQ) else np.inf
        n = len(self.vars)
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), n))
        c = np.zeros(n)
        for i, k in self.objective.coefs.items():
            c[i] += k
        mf = MatrixForm(
            A=A,
            row_lo=lo,
            row_hi=hi,
            lb=np.array([v.lb for v in self.vars]),
            ub=np.array([v.ub for v in self.vars]),
            c=c,
            c0=self.objective.const,
            maximize=self.sense == MAXIMIZE,
            boolean=np.array([v.boolean for v in self.vars], dtype=bool),
        )
        if self._frozen:
            self._matrix = mf
        return mf

    def vector(self, assignment: dict) -> np.ndarray:
        x = np.zeros(len(self.vars))
        for name, val in assignment.items():
            x[self._by_name[name].index] = val
        return x

    def objective_value(self, x) -> float:
        if isinstance(x, dict):
            x = self.vector(x)
        return self.objective.value(x)

    def violations(self, x, tol: float = 1e-6) -> list:
        """Names of violated constraints and bounds at point x (vector or name map)."""
        if isinstance(x, dict):
            x = self.vector(x)
        bad = []
        for v in self.vars:
            val = x[v.index]
            if val < v.lb - tol or val > v.ub + tol:
                bad.append(f"bound:{v.name}")
            elif v.boolean and min(abs(val), abs(val - 1)) > tol:
                bad.append(f"integrality:{v.name}")
        for con in self.constraints:
            lhs = sum(c * x[i] for i, c in con.coefs.items())
            scale = tol * max(1.0, abs(con.rhs))
            if (con.sense == LE and lhs > con.rhs + scale) or (con.sense == GE and lhs < con.rhs - scale) or (
                con.sense == EQ and abs(lhs - con.rhs) > scale
            ):
                bad.append(con.name)
        return bad

    def __repr__(self):
        return f"MilpModel({self.name!r}, vars={len(self.vars)}, bools={self.n_bools}, constraints={len(self.constraints)})"
