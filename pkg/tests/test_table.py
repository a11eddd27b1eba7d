import random
from fractions import Fraction
from pathlib import Path

import pytest

from causalprox import (
    EmptyDataError,
    FormatError,
    JointTable,
    PositivityError,
    SchemaMismatchError,
    UnknownVariableError,
    backdoor_adjust,
    build_diagram,
    frontdoor_adjust,
    intervene_truncated,
    load_counts,
    make_table,
)
from causalprox.fixtures import education_table, education_table_csv

F = Fraction


def table_from_cells(schema, cells):
    """Build a rational JointTable from {category-tuple: mass} cells."""
    import numpy as np

    shape = tuple(len(cats) for _, cats in schema)
    arr = np.empty(shape, dtype=object)
    arr[...] = F(0)
    lookup = [{c: i for i, c in enumerate(cats)} for _, cats in schema]
    for key, mass in cells.items():
        idx = tuple(lk[c] for lk, c in zip(lookup, key))
        arr[idx] = F(mass)
    return make_table(schema, arr)


def test_education_table_margins_exact():
    t = education_table()
    assert t.mode == "rational"
    assert sum(t.prob({"X": x, "S": s, "T": v})
               for x in t.categories("X")
               for s in t.categories("S")
               for v in t.categories("T")) == 1
    assert t.mass({"X": "x1"}) == F(3, 10)
    assert t.mass({"T": "t1"}) == F(47, 100)
    assert t.mass({"S": "s1"}) == F(93, 200)
    assert t.mass({"S": "s1", "T": "t1"}) == F(87, 500)


def test_education_table_conditional_cells_frozen():
    t = education_table()
    # conditional cell masses f(t, s | x), indexed t, s, arm
    got = {}
    for k, x in enumerate(("x0", "x1")):
        cond = t.condition({"X": x})
        for i, tv in enumerate(("t0", "t1")):
            for j, sv in enumerate(("s0", "s1")):
                got[(i, j, k)] = cond.mass({"T": tv, "S": sv})
    want = {
        (0, 0, 1): F(176, 1000), (0, 1, 1): F(144, 1000),
        (1, 0, 1): F(464, 1000), (1, 1, 1): F(216, 1000),
        (0, 0, 0): F(266, 1000), (0, 1, 0): F(354, 1000),
        (1, 0, 0): F(224, 1000), (1, 1, 0): F(156, 1000),
    }
    assert got == want


def test_load_counts_round_trips_education_csv():
    t = load_counts(education_table_csv())
    assert t.variables == ("X", "S", "T")
    assert t.mass({"X": "x1", "S": "s1", "T": "t1"}) == F(648, 10000)


def test_load_counts_prob_column_accepts_rationals_and_decimals():
    t = load_counts("A,prob\na0,1/4\na1,0.75\n")
    assert t.prob({"A": "a0"}) == F(1, 4)
    assert t.prob({"A": "a1"}) == F(3, 4)


def test_load_counts_rejects_bad_headers_and_cells():
    with pytest.raises(FormatError):
        load_counts("A,B\n1,2\n")  # no count/prob column
    with pytest.raises(FormatError):
        load_counts("A,count\na0,2\na0,3\n")  # duplicate cell
    with pytest.raises(FormatError):
        load_counts("A,count\na0,-1\n")
    with pytest.raises(EmptyDataError):
        load_counts("A,count\n")
    with pytest.raises(FormatError):
        load_counts("")


def test_make_table_validates_mass():
    schema = [("A", ("a0", "a1"))]
    with pytest.raises(FormatError):
        make_table(schema, [F(1, 2), F(1, 3)])
    t = make_table(schema, [F(1, 2), F(1, 2)])
    assert t.prob({"A": "a1"}) == F(1, 2)


def test_marginal_condition_and_float_mode():
    t = education_table()
    m = t.marginal(["X"])
    assert m.variables == ("X",)
    assert m.prob({"X": "x0"}) == F(7, 10)
    c = t.condition({"X": "x1"})
    assert c.mass({"S": "s1", "T": "t1"}) == F(648, 3000)
    ft = t.to_float()
    assert ft.mode == "float"
    assert ft.mass({"X": "x1"}) == pytest.approx(0.3, abs=1e-12)


def test_unknown_variable_and_category_errors():
    t = education_table()
    with pytest.raises(UnknownVariableError):
        t.marginal(["Q"])
    with pytest.raises(UnknownVariableError):
        t.mass({"X": "nope"})


def test_json_round_trip_preserves_exact_values():
    t = education_table()
    back = JointTable.from_json(t.to_json())
    assert back.variables == t.variables
    for x in t.categories("X"):
        for s in t.categories("S"):
            for v in t.categories("T"):
                a = {"X": x, "S": s, "T": v}
                assert back.prob(a) == t.prob(a)


def _random_confounded_scm(rng):
    """Z -> X, Z -> Y, X -> Y with random rational CPTs over denominator 60."""
    def dist(n, lo=1):
        cuts = sorted(rng.sample(range(lo, 60 - lo * (n - 1) + 1), n - 1)) if n > 1 else []
        parts = []
        prev = 0
        for c in cuts + [60]:
            parts.append(c - prev)
            prev = c
        rng.shuffle(parts)
        return [F(p, 60) for p in parts]

    pz = dist(2)
    px_z = {z: dist(2) for z in range(2)}
    py_xz = {(x, z): dist(2) for x in range(2) for z in range(2)}
    schema = [("Z", ("z0", "z1")), ("X", ("x0", "x1")), ("Y", ("y0", "y1"))]
    probs = {}
    for z in range(2):
        for x in range(2):
            for y in range(2):
                probs[(f"z{z}", f"x{x}", f"y{y}")] = (
                    pz[z] * px_z[z][x] * py_xz[(x, z)][y]
                )
    table = table_from_cells(schema, probs)
    return table, pz, py_xz


def test_backdoor_adjust_matches_truncated_factorization():
    rng = random.Random(5150)
    g = build_diagram("ZXY", [("Z", "X"), ("Z", "Y"), ("X", "Y")])
    for _ in range(120):
        table, pz, py_xz = _random_confounded_scm(rng)
        for xv in ("x0", "x1"):
            want = intervene_truncated(table, g, {"X": xv}, "Y")
            got = backdoor_adjust(table, {"X": xv}, "Y", ["Z"])
            x = int(xv[1])
            structural = sum(pz[z] * py_xz[(x, z)][1] for z in range(2))
            assert got.prob({"Y": "y1"}) == structural
            assert want.prob({"Y": "y1"}) == structural


def test_backdoor_positivity_violation_raises():
    schema = [("Z", ("z0", "z1")), ("X", ("x0", "x1")), ("Y", ("y0", "y1"))]
    probs = {
        ("z0", "x0", "y0"): F(1, 2),
        ("z1", "x1", "y1"): F(1, 2),
    }
    t = table_from_cells(schema, probs)
    with pytest.raises(PositivityError):
        backdoor_adjust(t, {"X": "x0"}, "Y", ["Z"])


def test_frontdoor_adjust_matches_structural_truth():
    rng = random.Random(77)

    def dist(n):
        cuts = sorted(rng.sample(range(1, 60), n - 1)) if n > 1 else []
        parts = []
        prev = 0
        for c in cuts + [60]:
            parts.append(c - prev)
            prev = c
        return [F(p, 60) for p in parts]

    for _ in range(80):
        pu = dist(2)
        px_u = {u: dist(2) for u in range(2)}
        pm_x = {x: dist(2) for x in range(2)}
        py_mu = {(m, u): dist(2) for m in range(2) for u in range(2)}
        schema = [
            ("U", ("u0", "u1")), ("X", ("x0", "x1")),
            ("M", ("m0", "m1")), ("Y", ("y0", "y1")),
        ]
        probs = {}
        for u in range(2):
            for x in range(2):
                for m in range(2):
                    for y in range(2):
                        probs[(f"u{u}", f"x{x}", f"m{m}", f"y{y}")] = (
                            pu[u] * px_u[u][x] * pm_x[x][m] * py_mu[(m, u)][y]
                        )
        full = table_from_cells(schema, probs)
        observable = full.marginal(["X", "M", "Y"])
        for xv in (0, 1):
            structural = sum(
                pm_x[xv][m] * pu[u] * py_mu[(m, u)][1]
                for m in range(2)
                for u in range(2)
            )
            got = frontdoor_adjust(observable, {"X": f"x{xv}"}, "Y", ["M"])
            assert got.prob({"Y": "y1"}) == structural


def test_intervene_truncated_rejects_bidirected_and_schema_mismatch():
    t = education_table()
    g_bad = build_diagram("XSTQ", [("X", "S"), ("S", "T"), ("T", "Q")])
    with pytest.raises(SchemaMismatchError):
        intervene_truncated(t, g_bad, {"X": "x1"}, "T")
    g_bi = build_diagram("XST", [("X", "S"), ("S", "T")], bidirected=[("X", "T")])
    with pytest.raises(SchemaMismatchError):
        intervene_truncated(t, g_bi, {"X": "x1"}, "T")
