"""Exact linear programming over equality polytopes with nonnegative variables.

Problems are minimize/maximize c.x subject to A x = b, x >= 0, with every
coefficient rational.  solve() runs a two-phase simplex under Bland's rule
so the answer is exact and deterministic; enumerate_vertices() brute-forces
all basic feasible solutions, which serves as an independent optimality
oracle for small instances.

Arithmetic uses gmpy2 rationals when available (noticeably faster) and
falls back to fractions.Fraction; all returned values are plain Fractions
either way.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional, Sequence

from .errors import FormatError, SizeError
from .ratio import parse_rational

try:  # gmpy2 is optional; exact results are identical either way
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover - depends on environment
    _Q = Fraction

MAX_VERTEX_VARIABLES = 64
MAX_VERTEX_EQUALITIES = 12
MAX_BASIS_SETS = 2_000_000


def _coerce(value):
    if isinstance(value, str):
        return _Q(Fraction(parse_rational(value)))
    if isinstance(value, int):
        return _Q(value)
    if isinstance(value, Fraction):
        return _Q(value)
    if type(value) is type(_Q(0)):
        return value
    raise FormatError(f"expected an exact rational, got {value!r}")


def _fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(int(value.numerator), int(value.denominator))


@dataclass(frozen=True)
class LinearProgram:
    """min or max objective.x over A x = b, x >= 0, all entries rational."""

    n: int
    equalities: tuple  # of (coefficient row, rhs)
    objective: tuple
    sense: str = "min"

    def __post_init__(self):
        if self.n < 1:
            raise FormatError("at least one variable required")
        if self.sense not in ("min", "max"):
            raise FormatError(f"unknown sense {self.sense!r}")
        if len(self.objective) != self.n:
            raise FormatError("objective length does not match variable count")
        for row, _ in self.equalities:
            if len(row) != self.n:
                raise FormatError("equality row length does not match variable count")


def make_program(n, equalities, objective, sense="min") -> LinearProgram:
    """Coerce arbitrary rational-like entries into a LinearProgram."""
    eqs = tuple(
        (tuple(_coerce(a) for a in row), _coerce(b)) for row, b in equalities
    )
    obj = tuple(_coerce(c) for c in objective)
    return LinearProgram(n=n, equalities=eqs, objective=obj, sense=sense)


@dataclass(frozen=True)
class LPResult:
    status: str  # optimal | infeasible | unbounded
    value: Optional[Fraction]
    witness: Optional[tuple]


def program_to_json(lp: LinearProgram) -> dict:
    return {
        "n": lp.n,
        "eq": [
            {"a": [str(_fraction(a)) for a in row], "b": str(_fraction(b))}
            for row, b in lp.equalities
        ],
        "obj": [str(_fraction(c)) for c in lp.objective],
        "sense": lp.sense,
    }


def program_from_json(payload: dict) -> LinearProgram:
    try:
        return make_program(
            n=int(payload["n"]),
            equalities=[(eq["a"], eq["b"]) for eq in payload["eq"]],
            objective=payload["obj"],
            sense=payload.get("sense", "min"),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed program payload: {exc}") from exc


# ---------------------------------------------------------------------------
# Simplex


class _Tableau:
    """Dense canonical-form tableau over exact rationals."""

    def __init__(self, rows, rhs, basis):
        self.rows = rows  # list of lists
        self.rhs = rhs
        self.basis = basis  # basis[r] = column index basic in row r

    def pivot(self, r, c):
        zero = _Q(0)
        piv = self.rows[r][c]
        inv = 1 / piv
        self.rows[r] = [a * inv for a in self.rows[r]]
        self.rhs[r] = self.rhs[r] * inv
        for i in range(len(self.rows)):
            if i == r:
                continue
            factor = self.rows[i][c]
            if factor == zero:
                continue
            prow = self.rows[r]
            self.rows[i] = [a - factor * b for a, b in zip(self.rows[i], prow)]
            self.rhs[i] = self.rhs[i] - factor * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost):
        zero = _Q(0)
        ncols = len(cost)
        red = list(cost)
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb == zero:
                continue
            row = self.rows[r]
            for j in range(ncols):
                red[j] -= cb * row[j]
        return red

    def optimize(self, cost):
        """Bland-rule minimization; returns 'optimal' or 'unbounded'."""
        zero = _Q(0)
        while True:
            red = self.reduced_costs(cost)
            entering = next((j for j, z in enumerate(red) if z < zero), None)
            if entering is None:
                return "optimal"
            best_r = None
            best_ratio = None
            for r, row in enumerate(self.rows):
                a = row[entering]
                if a > zero:
                    ratio = self.rhs[r] / a
                    if (
                        best_ratio is None
                        or ratio < best_ratio
                        or (ratio == best_ratio and self.basis[r] < self.basis[best_r])
                    ):
                        best_ratio = ratio
                        best_r = r
            if best_r is None:
                return "unbounded"
            self.pivot(best_r, entering)

    def objective_value(self, cost):
        return sum(
            (cost[b] * self.rhs[r] for r, b in enumerate(self.basis)), _Q(0)
        )


def solve(lp: LinearProgram) -> LPResult:
    """Exact two-phase simplex.  Never raises on infeasible/unbounded."""
    zero = _Q(0)
    n = lp.n
    m = len(lp.equalities)
    rows = []
    rhs = []
    for row, b in lp.equalities:
        row = [_coerce(a) for a in row]
        b = _coerce(b)
        if b < zero:
            row = [-a for a in row]
            b = -b
        rows.append(row)
        rhs.append(b)

    # phase 1: artificial variable per row, minimize their sum
    one = _Q(1)
    for r in range(m):
        rows[r] = rows[r] + [one if i == r else zero for i in range(m)]
    basis = [n + r for r in range(m)]
    tab = _Tableau(rows, rhs, basis)
    art_cost = [zero] * n + [one] * m
    tab.optimize(art_cost)
    if tab.objective_value(art_cost) != zero:
        return LPResult(status="infeasible", value=None, witness=None)

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for r in range(len(tab.basis)):
        if tab.basis[r] < n:
            keep.append(r)
            continue
        entering = next(
            (j for j in range(n) if tab.rows[r][j] != zero), None
        )
        if entering is not None:
            tab.pivot(r, entering)
            keep.append(r)
    tab.rows = [tab.rows[r][:n] for r in keep]
    tab.rhs = [tab.rhs[r] for r in keep]
    tab.basis = [tab.basis[r] for r in keep]

    # phase 2
    sign = one if lp.sense == "min" else -one
    cost = [sign * _coerce(c) for c in lp.objective]
    status = tab.optimize(cost)
    if status == "unbounded":
        return LPResult(status="unbounded", value=None, witness=None)
    witness = [Fraction(0)] * n
    for r, b in enumerate(tab.basis):
        witness[b] = _fraction(tab.rhs[r])
    value = _fraction(sign * tab.objective_value(cost))
    return LPResult(status="optimal", value=value, witness=tuple(witness))


# ---------------------------------------------------------------------------
# Vertex enumeration (oracle)


def _rref(matrix):
    """In-place exact reduced row echelon form; returns pivot column list."""
    zero = _Q(0)
    nrows = len(matrix)
    ncols = len(matrix[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot_row = next(
            (i for i in range(r, nrows) if matrix[i][c] != zero), None
        )
        if pivot_row is None:
            continue
        matrix[r], matrix[pivot_row] = matrix[pivot_row], matrix[r]
        inv = 1 / matrix[r][c]
        matrix[r] = [a * inv for a in matrix[r]]
        for i in range(nrows):
            if i != r and matrix[i][c] != zero:
                factor = matrix[i][c]
                matrix[i] = [a - factor * b for a, b in zip(matrix[i], matrix[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return pivots


def enumerate_vertices(equalities, n: int):
    """All basic feasible solutions of {A x = b, x >= 0}, deduplicated.

    Exhaustive over basis column subsets, so only suitable as a small-scale
    oracle; SizeError beyond the documented limits.  Returns a sorted list
    of Fraction tuples; empty when the system is infeasible.
    """
    if n > MAX_VERTEX_VARIABLES:
        raise SizeError(f"vertex enumeration supports at most "
                        f"{MAX_VERTEX_VARIABLES} variables, got {n}")
    if len(equalities) > MAX_VERTEX_EQUALITIES:
        raise SizeError(
            f"vertex enumeration supports at most {MAX_VERTEX_EQUALITIES} "
            f"equalities, got {len(equalities)}"
        )
    zero = _Q(0)
    aug = [
        [_coerce(a) for a in row] + [_coerce(b)] for row, b in equalities
    ]
    for row, _ in equalities:
        if len(row) != n:
            raise FormatError("equality row length does not match variable count")
    pivots = _rref(aug)
    if n in pivots:
        return []  # 0 = 1 after elimination: no solutions at all
    rank = len(pivots)
    rows = [aug[r] for r in range(rank)]
    if comb(n, rank) > MAX_BASIS_SETS:
        raise SizeError(
            f"vertex enumeration would scan {comb(n, rank)} basis sets; "
            f"the supported maximum is {MAX_BASIS_SETS}"
        )
    seen = set()
    for cols in itertools.combinations(range(n), rank):
        square = [[rows[r][c] for c in cols] for r in range(rank)]
        target = [rows[r][n] for r in range(rank)]
        aug2 = [square[r] + [target[r]] for r in range(rank)]
        piv2 = _rref(aug2)
        if len(piv2) < rank or rank in piv2:
            continue  # singular basis or inconsistent
        values = [aug2[r][rank] for r in range(rank)]
        if any(v < zero for v in values):
            continue
        point = [Fraction(0)] * n
        for c, v in zip(cols, values):
            point[c] = _fraction(v)
        seen.add(tuple(point))
    return sorted(seen)


def vertex_optimum(equalities, n, objective, sense="min"):
    """Brute-force optimum over enumerated vertices; None when infeasible."""
    verts = enumerate_vertices(equalities, n)
    if not verts:
        return None
    obj = [_fraction(_coerce(c)) for c in objective]
    best = None
    best_v = None
    for v in verts:
        val = sum(c * x for c, x in zip(obj, v))
        if best is None or (sense == "min" and val < best) or (
            sense == "max" and val > best
        ):
            best = val
            best_v = v
    return best, best_v
