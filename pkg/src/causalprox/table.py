"""Dense discrete probability tables with exact-rational and float modes.

Tables are immutable.  Rational mode keeps every entry a Fraction so LP
inputs and fixture arithmetic stay exact; float mode is what the eigen
pipeline consumes.  Category order inside each variable follows the
declared schema, never the order rows happen to appear in a data file
when a schema is supplied.
"""

from __future__ import annotations

import csv
import io
import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    EmptyDataError,
    FormatError,
    PositivityError,
    SchemaMismatchError,
    UnknownVariableError,
    ZeroConditionalError,
    ZeroMassError,
)
from .ratio import parse_rational

MASS_TOL = Fraction(1, 10**12)


def _validate_schema(schema, allow_empty=False):
    schema = tuple((str(name), tuple(cats)) for name, cats in schema)
    if not schema and not allow_empty:
        raise FormatError("schema declares no variables")
    names = [name for name, _ in schema]
    if len(set(names)) != len(names):
        raise FormatError("duplicate variable names in schema")
    for name, cats in schema:
        if not name or "," in name:
            raise FormatError(f"bad variable name {name!r}")
        if len(cats) < 2:
            raise FormatError(f"variable {name!r} needs at least two categories")
        if len(set(cats)) != len(cats):
            raise FormatError(f"duplicate categories for {name!r}")
        for c in cats:
            if not c or "," in c:
                raise FormatError(f"bad category label {c!r} for {name!r}")
    return schema


@dataclass(frozen=True, eq=False)
class JointTable:
    """Joint distribution over the schema's variables, row-major in probs."""

    schema: tuple
    probs: np.ndarray = field(repr=False)
    mode: str = "rational"

    def __post_init__(self):
        shape = tuple(len(cats) for _, cats in self.schema)
        if self.probs.shape != shape:
            raise SchemaMismatchError(
                f"probs shape {self.probs.shape} does not match schema shape {shape}"
            )
        total = self.probs.sum() if self.probs.size else self.probs[()]
        if self.mode == "rational":
            if any(p < 0 for p in self.probs.flat):
                raise FormatError("negative probability entry")
            if total != 1:
                raise FormatError(f"probabilities sum to {total}, not 1")
        elif self.mode == "float":
            if (self.probs < 0).any():
                raise FormatError("negative probability entry")
            if abs(float(total) - 1.0) > float(MASS_TOL):
                raise FormatError(f"probabilities sum to {float(total)!r}, not 1")
        else:
            raise FormatError(f"unknown table mode {self.mode!r}")

    # -- schema helpers ----------------------------------------------------

    @property
    def variables(self):
        return tuple(name for name, _ in self.schema)

    def categories(self, var):
        for name, cats in self.schema:
            if name == var:
                return cats
        raise UnknownVariableError(f"variable {var!r} not in table")

    def _axis(self, var):
        for i, (name, _) in enumerate(self.schema):
            if name == var:
                return i
        raise UnknownVariableError(f"variable {var!r} not in table")

    def _index_of(self, var, value):
        cats = self.categories(var)
        try:
            return cats.index(value)
        except ValueError:
            raise UnknownVariableError(f"{value!r} is not a category of {var!r}") from None

    # -- queries -----------------------------------------------------------

    def mass(self, assignment):
        """Probability of a partial assignment (dict var -> category)."""
        idx = [slice(None)] * len(self.schema)
        for var, value in assignment.items():
            idx[self._axis(var)] = self._index_of(var, value)
        block = self.probs[tuple(idx)]
        return block.sum() if isinstance(block, np.ndarray) else block

    def prob(self, assignment):
        if set(assignment) != set(self.variables):
            raise UnknownVariableError("prob() needs a full assignment; use mass() otherwise")
        return self.mass(assignment)

    def marginal(self, variables):
        """Marginal table over the given variables, in table order."""
        keep = list(variables)
        for v in keep:
            self._axis(v)
        if len(set(keep)) != len(keep):
            raise UnknownVariableError("duplicate variable in marginal request")
        drop = tuple(i for i, (name, _) in enumerate(self.schema) if name not in keep)
        probs = self.probs.sum(axis=drop) if drop else self.probs
        schema = tuple(entry for entry in self.schema if entry[0] in keep)
        return JointTable(schema, probs, self.mode)

    def condition(self, assignment):
        """Table over the remaining variables given the assignment."""
        idx = [slice(None)] * len(self.schema)
        for var, value in assignment.items():
            idx[self._axis(var)] = self._index_of(var, value)
        block = self.probs[tuple(idx)]
        total = block.sum() if isinstance(block, np.ndarray) else block
        if total == 0:
            raise ZeroMassError(f"conditioning event {assignment!r} has zero probability")
        schema = tuple(e for e in self.schema if e[0] not in assignment)
        if not isinstance(block, np.ndarray):
            probs = np.empty((), dtype=object)
            probs[()] = Fraction(1) if self.mode == "rational" else 1.0
            if self.mode == "float":
                probs = probs.astype(np.float64)
            return JointTable(schema, probs, self.mode)
        return JointTable(schema, block / total, self.mode)

    # -- conversions ---------------------------------------------------------

    def to_float(self):
        if self.mode == "float":
            return self
        return JointTable(self.schema, self.probs.astype(np.float64), "float")

    def to_json(self):
        flat = []
        for p in self.probs.flat:
            if self.mode == "rational":
                f = Fraction(p)
                flat.append(f"{f.numerator}/{f.denominator}")
            else:
                flat.append(float(p))
        return {
            "schema": [[name, list(cats)] for name, cats in self.schema],
            "mode": self.mode,
            "probs": flat,
        }

    @staticmethod
    def from_json(payload):
        try:
            schema = _validate_schema(
                [(name, tuple(cats)) for name, cats in payload["schema"]]
            )
            mode = payload["mode"]
            flat = payload["probs"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad table payload: {exc}") from exc
        shape = tuple(len(cats) for _, cats in schema)
        n = int(np.prod(shape))
        if len(flat) != n:
            raise FormatError(f"expected {n} probabilities, got {len(flat)}")
        if mode == "rational":
            probs = np.empty(n, dtype=object)
            for i, item in enumerate(flat):
                probs[i] = parse_rational(item)
        else:
            probs = np.asarray([float(x) for x in flat], dtype=np.float64)
        return JointTable(schema, probs.reshape(shape), mode)


def make_table(schema, probs, mode="rational"):
    """Build a validated JointTable from nested lists or an ndarray."""
    schema = _validate_schema(schema)
    shape = tuple(len(cats) for _, cats in schema)
    if mode == "rational":
        arr = np.empty(shape, dtype=object)
        flat = arr.reshape(-1)
        src = np.asarray(probs, dtype=object).reshape(-1)
        if src.size != flat.size:
            raise SchemaMismatchError("probability array does not match schema shape")
        for i, p in enumerate(src):
            flat[i] = Fraction(p)
    else:
        arr = np.asarray(probs, dtype=np.float64).reshape(shape)
    return JointTable(schema, arr, mode)


# ---------------------------------------------------------------------------
# CSV ingestion


def load_counts(source, schema=None):
    """Load a delimited cell table into a rational JointTable.

    ``source`` is CSV text or a path-like.  The header names the variables
    followed by a final ``count`` (nonnegative integers) or ``prob``
    (decimal or p/q strings) column.  Missing cells are zero; duplicate
    cells are rejected.  With no explicit schema the category order is
    first appearance per column.
    """
    if isinstance(source, os.PathLike):
        text = os.fspath(source)
        with open(text, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise FormatError("empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[-1] not in ("count", "prob"):
        raise FormatError("header must list variables then a final 'count' or 'prob' column")
    value_kind = header[-1]
    varnames = header[:-1]
    if len(set(varnames)) != len(varnames):
        raise FormatError("duplicate variable names in header")

    if len(rows) == 1:
        raise EmptyDataError("no data rows")
    cells = {}
    seen_cats = {v: [] for v in varnames}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        key = tuple(v.strip() for v in row[:-1])
        raw = row[-1].strip()
        if value_kind == "count":
            if not raw.isdigit():
                raise FormatError(f"line {lineno}: count must be a nonnegative integer, got {raw!r}")
            value = Fraction(int(raw))
        else:
            value = parse_rational(raw)
            if value < 0:
                raise FormatError(f"line {lineno}: negative probability {raw!r}")
        if key in cells:
            raise FormatError(f"line {lineno}: duplicate cell {key!r}")
        cells[key] = value
        for var, cat in zip(varnames, key):
            if not cat:
                raise FormatError(f"line {lineno}: empty category label")
            if cat not in seen_cats[var]:
                seen_cats[var].append(cat)

    if schema is not None:
        schema = _validate_schema(schema)
        if tuple(v for v, _ in schema) != tuple(varnames):
            raise SchemaMismatchError(
                f"file variables {varnames} do not match schema {[v for v, _ in schema]}"
            )
        declared = {v: cats for v, cats in schema}
        for var in varnames:
            for cat in seen_cats[var]:
                if cat not in declared[var]:
                    raise UnknownVariableError(f"{cat!r} is not a declared category of {var!r}")
    else:
        schema = tuple((v, tuple(seen_cats[v])) for v in varnames)
        _validate_schema(schema)

    total = sum(cells.values())
    if total == 0:
        raise EmptyDataError("all cells are zero")
    if value_kind == "prob" and abs(total - 1) > Fraction(1, 10**6):
        raise FormatError(f"prob column sums to {float(total)!r}; expected 1")

    shape = tuple(len(cats) for _, cats in schema)
    probs = np.zeros(shape, dtype=object)
    probs[...] = Fraction(0)
    lookup = [dict((c, i) for i, c in enumerate(cats)) for _, cats in schema]
    for key, value in cells.items():
        idx = tuple(lookup[d][cat] for d, cat in enumerate(key))
        probs[idx] = value / total
    return JointTable(schema, probs, "rational")


# ---------------------------------------------------------------------------
# Interventional quantities on fully observed tables


def _check_pair(table, x, y):
    if not isinstance(x, dict) or len(x) != 1:
        raise UnknownVariableError("the intervention must assign exactly one variable")
    (xvar, xval), = x.items()
    table._index_of(xvar, xval)
    table._axis(y)
    if y == xvar:
        raise UnknownVariableError("exposure and outcome must differ")
    return xvar, xval


def _y_table(table, y, masses):
    cats = table.categories(y)
    if table.mode == "rational":
        probs = np.array([Fraction(masses[c]) for c in cats], dtype=object)
    else:
        probs = np.asarray([float(masses[c]) for c in cats], dtype=np.float64)
    return JointTable(((y, cats),), probs, table.mode)


def intervene_truncated(table, g, x, y):
    """Interventional distribution of y under set(x) by truncated factorization.

    The diagram's vertices must be exactly the table's variables.  Each
    factor f(v | parents) is evaluated in topological order; a 0/0
    conditional on a branch that still has positive interventional mass
    raises ZeroConditionalError instead of being imputed.
    """
    xvar, xval = _check_pair(table, x, y)
    if set(g.vertices) != set(table.variables):
        raise SchemaMismatchError("diagram vertices and table variables differ")
    if g.bidirected:
        raise SchemaMismatchError("truncated factorization needs a fully observed DAG")

    order = []
    remaining = set(g.vertices)
    while remaining:
        free = sorted(v for v in remaining if not (g.parents(v) & remaining))
        order.extend(free)
        remaining -= set(free)

    families = {}
    for v in g.vertices:
        pa = tuple(sorted(g.parents(v)))
        families[v] = (pa, table.marginal([u for u in table.variables if u in (v,) + pa]))

    zero = Fraction(0) if table.mode == "rational" else 0.0
    masses = {c: zero for c in table.categories(y)}
    other = [v for v in table.variables if v != xvar]
    domains = [table.categories(v) for v in other]
    for combo in itertools.product(*domains):
        cell = dict(zip(other, combo))
        cell[xvar] = xval
        weight = Fraction(1) if table.mode == "rational" else 1.0
        for v in order:
            if v == xvar:
                continue
            pa, fam = families[v]
            pa_assign = {u: cell[u] for u in pa}
            denom = fam.mass(pa_assign)
            if denom == 0:
                raise ZeroConditionalError(
                    f"f({v}|{pa_assign}) is 0/0 on a branch reachable under set({xvar}={xval})"
                )
            weight = weight * fam.mass({v: cell[v], **pa_assign}) / denom
            if weight == 0:
                break
        masses[cell[y]] += weight
    return _y_table(table, y, masses)


def backdoor_adjust(table, x, y, zvars):
    """Adjustment formula: sum_z f(y|x,z) f(z)."""
    xvar, xval = _check_pair(table, x, y)
    zvars = list(zvars)
    for v in zvars:
        table._axis(v)
    if xvar in zvars or y in zvars:
        raise UnknownVariableError("adjustment set overlaps the effect pair")

    zero = Fraction(0) if table.mode == "rational" else 0.0
    masses = {c: zero for c in table.categories(y)}
    domains = [table.categories(v) for v in zvars]
    for combo in itertools.product(*domains):
        zassign = dict(zip(zvars, combo))
        pz = table.mass(zassign)
        if pz == 0:
            continue
        pxz = table.mass({xvar: xval, **zassign})
        if pxz == 0:
            raise PositivityError(
                f"f({xvar}={xval}, {zassign}) = 0 on a stratum with positive probability"
            )
        for c in table.categories(y):
            masses[c] += table.mass({y: c, xvar: xval, **zassign}) / pxz * pz
    return _y_table(table, y, masses)


def frontdoor_adjust(table, x, y, zvars):
    """Mediator formula: sum_z f(z|x) sum_x' f(y|x',z) f(x')."""
    xvar, xval = _check_pair(table, x, y)
    zvars = list(zvars)
    for v in zvars:
        table._axis(v)
    if xvar in zvars or y in zvars:
        raise UnknownVariableError("mediator set overlaps the effect pair")

    px = table.mass({xvar: xval})
    if px == 0:
        raise ZeroMassError(f"f({xvar}={xval}) = 0")

    zero = Fraction(0) if table.mode == "rational" else 0.0
    masses = {c: zero for c in table.categories(y)}
    domains = [table.categories(v) for v in zvars]
    for combo in itertools.product(*domains):
        zassign = dict(zip(zvars, combo))
        pzx = table.mass({xvar: xval, **zassign}) / px
        if pzx == 0:
            continue
        for xprime in table.categories(xvar):
            pxp = table.mass({xvar: xprime})
            if pxp == 0:
                continue
            pxpz = table.mass({xvar: xprime, **zassign})
            if pxpz == 0:
                raise PositivityError(
                    f"f({xvar}={xprime}, {zassign}) = 0 but the formula needs f(y|...) there"
                )
            for c in table.categories(y):
                masses[c] += pzx * pxp * table.mass({y: c, xvar: xprime, **zassign}) / pxpz
    return _y_table(table, y, masses)
