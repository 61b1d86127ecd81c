"""Mixed-integer linear model container.

Variables are issued as :class:`Var` handles that support ``+``, ``-`` and
scalar ``*`` so constraints can be written as plain arithmetic::

    m = MilpModel("toy")
    x = m.add_variable("x", 0, 4)
    y = m.add_variable("y", 0, None)
    m.add_constraint(x + y, "<=", 4)
    m.set_objective(3 * x + 2 * y, maximize=True)
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np
import scipy.sparse as sp

INF = math.inf


class ModelError(ValueError):
    """Malformed variable, expression or constraint."""


class VarKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(str, enum.Enum):
    LE = "<="
    EQ = "=="
    GE = ">="

    @classmethod
    def parse(cls, s: Union[str, "Sense"]) -> "Sense":
        if isinstance(s, Sense):
            return s
        aliases = {"<=": cls.LE, "=<": cls.LE, "=": cls.EQ, "==": cls.EQ, ">=": cls.GE, "=>": cls.GE}
        try:
            return aliases[s]
        except KeyError:
            raise ModelError(f"unknown constraint sense {s!r}") from None


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = INF
    kind: VarKind = VarKind.CONTINUOUS

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ModelError(f"variable {self.name!r}: NaN bound")
        if self.lower > self.upper:
            raise ModelError(f"variable {self.name!r}: lower {self.lower} > upper {self.upper}")
        if self.kind is VarKind.BINARY and (self.lower < 0 or self.upper > 1):
            raise ModelError(f"binary variable {self.name!r}: bounds must lie within [0, 1]")


class Var:
    """Handle to a variable of one specific model."""

    __slots__ = ("index", "_owner")

    def __init__(self, index: int, owner: int):
        self.index = index
        self._owner = owner

    def __repr__(self):
        return f"Var({self.index})"

    def __hash__(self):
        return hash((self.index, self._owner))

    def __eq__(self, other):
        return isinstance(other, Var) and other.index == self.index and other._owner == self._owner

    def _expr(self) -> "LinearExpr":
        return LinearExpr({self.index: 1.0}, 0.0, self._owner)

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


class LinearExpr:
    """Sparse affine expression ``sum(coef * var) + constant``."""

    __slots__ = ("terms", "constant", "_owner")

    def __init__(self, terms: Mapping[int, float] | None = None, constant: float = 0.0, owner: int | None = None):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.constant = float(constant)
        self._owner = owner

    @classmethod
    def sum(cls, items: Iterable) -> "LinearExpr":
        out = cls()
        for it in items:
            out.iadd(it)
        return out

    def copy(self) -> "LinearExpr":
        return LinearExpr(self.terms, self.constant, self._owner)

    def _check_owner(self, owner):
        if owner is None:
            return
        if self._owner is None:
            self._owner = owner
        elif self._owner != owner:
            raise ModelError("expression mixes variables from different models")

    def iadd(self, other, k: float = 1.0) -> "LinearExpr":
        """In-place ``self += k * other``."""
        if isinstance(other, Var):
            self._check_owner(other._owner)
            self.terms[other.index] = self.terms.get(other.index, 0.0) + k
        elif isinstance(other, LinearExpr):
            self._check_owner(other._owner)
            for i, c in other.terms.items():
                self.terms[i] = self.terms.get(i, 0.0) + k * c
            self.constant += k * other.constant
        elif isinstance(other, (int, float, np.floating, np.integer)):
            self.constant += k * float(other)
        else:
            return NotImplemented
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return (self * -1.0).iadd(other)

    def __mul__(self, k):
        if not isinstance(k, (int, float, np.floating, np.integer)):
            return NotImplemented
        k = float(k)
        return LinearExpr({i: c * k for i, c in self.terms.items()}, self.constant * k, self._owner)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def normalized(self) -> "LinearExpr":
        return LinearExpr({i: c for i, c in sorted(self.terms.items()) if c != 0.0}, self.constant, self._owner)

    def value(self, x) -> float:
        return self.constant + sum(c * x[i] for i, c in self.terms.items())

    def __repr__(self):
        body = " + ".join(f"{c:g}*x{i}" for i, c in sorted(self.terms.items()))
        return f"LinearExpr({body or '0'} + {self.constant:g})"


Operand = Union[Var, LinearExpr, float, int]


def as_expr(e: Operand) -> LinearExpr:
    if isinstance(e, LinearExpr):
        return e
    if isinstance(e, Var):
        return e._expr()
    return LinearExpr(constant=float(e))


@dataclass
class Constraint:
    expr: LinearExpr
    sense: Sense
    rhs: float
    name: str


@dataclass
class MilpSolution:
    status: Status
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = math.nan
    gap: float = math.nan
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def __getitem__(self, v: Union[Var, LinearExpr]) -> float:
        if isinstance(v, Var):
            return float(self.values[v.index])
        return as_expr(v).value(self.values)


@dataclass
class ArrayForm:
    """Matrix view of a model: ``row_lo <= A x <= row_hi``, ``lb <= x <= ub``.

    ``c`` is already oriented for minimization; ``sign`` recovers the user
    objective as ``sign * (c @ x) + offset``.
    """

    c: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    sign: float
    offset: float


class MilpModel:
    """A MILP built incrementally; treat as immutable once handed to a solver."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective = LinearExpr(owner=id(self))
        self.maximize = True
        self._names: set[str] = set()

    # -- variables ---------------------------------------------------------
    def add_variable(self, name: str, lower: float | None = 0.0, upper: float | None = None,
                     kind: VarKind | str = VarKind.CONTINUOUS) -> Var:
        lower = -INF if lower is None else float(lower)
        upper = INF if upper is None else float(upper)
        kind = VarKind(kind)
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        self.variables.append(Variable(name, lower, upper, kind))
        self._names.add(name)
        return Var(len(self.variables) - 1, id(self))

    def add_binary(self, name: str) -> Var:
        return self.add_variable(name, 0.0, 1.0, VarKind.BINARY)

    def var(self, index: int) -> Var:
        if not 0 <= index < len(self.variables):
            raise ModelError(f"no variable with index {index}")
        return Var(index, id(self))

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind is VarKind.BINARY]

    # -- constraints / objective ------------------------------------------
    def _own(self, e: Operand) -> LinearExpr:
        e = as_expr(e)
        if e._owner not in (None, id(self)):
            raise ModelError("expression uses variables issued by another model")
        for c in e.terms.values():
            if not math.isfinite(c):
                raise ModelError("non-finite coefficient")
        return e

    def add_constraint(self, lhs: Operand, sense: str | Sense, rhs: Operand = 0.0, name: str | None = None) -> int:
        """Add ``lhs sense rhs``; constants on either side are folded into the rhs."""
        e = self._own(lhs) - self._own(rhs)
        e = e.normalized()
        rhs_val = -e.constant
        if not math.isfinite(rhs_val):
            raise ModelError("non-finite right-hand side")
        e.constant = 0.0
        name = name or f"c{len(self.constraints)}"
        self.constraints.append(Constraint(e, Sense.parse(sense), rhs_val, name))
        return len(self.constraints) - 1

    def set_objective(self, expr: Operand, maximize: bool = True) -> None:
        self.objective = self._own(expr).normalized()
        self.maximize = maximize

    # -- views -------------------------------------------------------------
    def to_arrays(self) -> ArrayForm:
        n = self.num_vars
        rows, cols, vals = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for r, con in enumerate(self.constraints):
            for i, c in con.expr.terms.items():
                rows.append(r)
                cols.append(i)
                vals.append(c)
            lo[r] = con.rhs if con.sense is not Sense.LE else -INF
            hi[r] = con.rhs if con.sense is not Sense.GE else INF
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), n))
        sign = -1.0 if self.maximize else 1.0
        c = np.zeros(n)
        for i, k in self.objective.terms.items():
            c[i] = sign * k
        return ArrayForm(
            c=c,
            A=A,
            row_lo=lo,
            row_hi=hi,
            lb=np.array([v.lower for v in self.variables]),
            ub=np.array([v.upper for v in self.variables]),
            binary=np.array([v.kind is VarKind.BINARY for v in self.variables], dtype=bool),
            sign=sign,
            offset=self.objective.constant,
        )

    def max_violation(self, x) -> float:
        """Largest absolute bound or constraint violation of point ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for v, xi in zip(self.variables, x):
            worst = max(worst, v.lower - xi, xi - v.upper)
        for con in self.constraints:
            a = con.expr.value(x)
            if con.sense is Sense.LE:
                worst = max(worst, a - con.rhs)
            elif con.sense is Sense.GE:
                worst = max(worst, con.rhs - a)
            else:
                worst = max(worst, abs(a - con.rhs))
        return worst

    def objective_value(self, x) -> float:
        return self.objective.value(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"MilpModel({self.name!r}, vars={self.num_vars}, cons={len(self.constraints)})"
