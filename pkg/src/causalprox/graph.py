"""Causal diagrams, d-separation, and graphical adjustment criteria.

A diagram is a DAG over named vertices plus optional bidirected edges
standing for unmeasured common causes.  Every query first replaces each
bidirected edge a <-> b with a fresh latent parent a <- L -> b, so the
separation semantics are those of the fully directed expansion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import (
    CycleError,
    FormatError,
    PreconditionError,
    SizeError,
    UnknownVertexError,
)

MAX_ADJUSTMENT_CANDIDATES = 20


def _as_vertex_set(g: "CausalDiagram", arg, what: str) -> frozenset:
    if isinstance(arg, str):
        arg = (arg,)
    out = frozenset(arg)
    for v in out:
        if v not in g.vertex_set:
            raise UnknownVertexError(f"{what} references unknown vertex {v!r}")
    return out


@dataclass(frozen=True)
class CausalDiagram:
    """Immutable mixed graph: directed edges plus bidirected confounding arcs."""

    vertices: tuple
    directed: tuple
    bidirected: tuple

    @property
    def vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    def parents(self, v: str) -> set:
        return {a for a, b in self.directed if b == v}

    def children(self, v: str) -> set:
        return {b for a, b in self.directed if a == v}

    def descendants(self, v: str) -> set:
        """Proper descendants of v (v itself excluded)."""
        seen = set()
        stack = [v]
        while stack:
            cur = stack.pop()
            for child in self.children(cur):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return seen

    def ancestors_inclusive(self, vs: Iterable[str]) -> set:
        seen = set(vs)
        stack = list(seen)
        while stack:
            cur = stack.pop()
            for p in self.parents(cur):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen


def build_diagram(vertices, directed=(), bidirected=()) -> CausalDiagram:
    """Validate and construct a diagram.

    Raises UnknownVertexError for edges touching undeclared vertices,
    FormatError for bad vertex names or duplicate declarations, and
    CycleError when the directed part is cyclic (self-loops included).
    """
    verts = tuple(vertices)
    if not verts:
        raise FormatError("a diagram needs at least one vertex")
    seen = set()
    for v in verts:
        if not isinstance(v, str) or not v:
            raise FormatError(f"vertex names must be non-empty strings, got {v!r}")
        if "," in v:
            raise FormatError(f"vertex name may not contain a comma: {v!r}")
        if v in seen:
            raise FormatError(f"duplicate vertex {v!r}")
        seen.add(v)

    dir_edges = []
    for edge in directed:
        a, b = edge
        for v in (a, b):
            if v not in seen:
                raise UnknownVertexError(f"directed edge {a!r}->{b!r} uses unknown vertex {v!r}")
        if a == b:
            raise CycleError(f"self-loop on {a!r}")
        if (a, b) not in dir_edges:
            dir_edges.append((a, b))

    bi_edges = []
    for edge in bidirected:
        a, b = edge
        for v in (a, b):
            if v not in seen:
                raise UnknownVertexError(f"bidirected edge {a!r}<->{b!r} uses unknown vertex {v!r}")
        if a == b:
            raise CycleError(f"bidirected self-loop on {a!r}")
        key = (a, b) if a <= b else (b, a)
        if key not in bi_edges:
            bi_edges.append(key)

    g = CausalDiagram(verts, tuple(dir_edges), tuple(sorted(bi_edges)))
    _check_acyclic(g)
    return g


def _check_acyclic(g: CausalDiagram) -> None:
    # Kahn's algorithm; leftovers mean a directed cycle.
    indeg = {v: 0 for v in g.vertices}
    for _, b in g.directed:
        indeg[b] += 1
    queue = [v for v in g.vertices if indeg[v] == 0]
    done = 0
    while queue:
        v = queue.pop()
        done += 1
        for c in g.children(v):
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if done != len(g.vertices):
        cyclic = sorted(v for v in g.vertices if indeg[v] > 0)
        raise CycleError(f"directed part is cyclic (involves {', '.join(cyclic)})")


def expand_bidirected(g: CausalDiagram) -> CausalDiagram:
    """Replace every a <-> b with a <- L -> b for a fresh latent vertex L."""
    if not g.bidirected:
        return g
    verts = list(g.vertices)
    edges = list(g.directed)
    taken = set(verts)
    counter = 0
    for a, b in g.bidirected:
        name = f"~u{counter}"
        while name in taken:
            counter += 1
            name = f"~u{counter}"
        counter += 1
        taken.add(name)
        verts.append(name)
        edges.append((name, a))
        edges.append((name, b))
    return CausalDiagram(tuple(verts), tuple(edges), ())


def d_separated(g: CausalDiagram, a, b, c=()) -> bool:
    """True when every path between a and b is blocked given c.

    a, b, c may be vertex names or iterables of names; a, b, c must be
    pairwise disjoint.  Runs on the latent expansion of the diagram via
    the ancestral moral graph, which is equivalent to path blocking.
    """
    aset = _as_vertex_set(g, a, "first argument")
    bset = _as_vertex_set(g, b, "second argument")
    cset = _as_vertex_set(g, c, "conditioning set")
    if aset & bset or aset & cset or bset & cset:
        raise PreconditionError("d-separation arguments must be pairwise disjoint")
    if not aset or not bset:
        return True

    gx = expand_bidirected(g)
    anc = gx.ancestors_inclusive(aset | bset | cset)

    # Moralize the induced ancestral subgraph.
    moral = {v: set() for v in anc}
    for u, v in gx.directed:
        if u in anc and v in anc:
            moral[u].add(v)
            moral[v].add(u)
    for v in anc:
        ps = [p for p in gx.parents(v) if p in anc]
        for p1, p2 in itertools.combinations(ps, 2):
            moral[p1].add(p2)
            moral[p2].add(p1)

    # Connectivity from a to b avoiding c.
    stack = [v for v in aset]
    seen = set(aset)
    while stack:
        cur = stack.pop()
        for nxt in moral[cur]:
            if nxt in cset or nxt in seen:
                continue
            if nxt in bset:
                return False
            seen.add(nxt)
            stack.append(nxt)
    return True


# ---------------------------------------------------------------------------
# Path machinery used by the criterion checks and by witness reporting.
# Exponential in the worst case, which is fine at the scale these graphs
# have; d_separated above is the fast path.


def _path_blocked(gx: CausalDiagram, path, cset) -> bool:
    for m in range(1, len(path) - 1):
        prev, v, nxt = path[m - 1], path[m], path[m + 1]
        into_from_prev = (prev, v) in gx.directed
        into_from_next = (nxt, v) in gx.directed
        if into_from_prev and into_from_next:
            opened = v in cset or (gx.descendants(v) & cset)
            if not opened:
                return True
        elif v in cset:
            return True
    return False


def _iter_simple_paths(gx: CausalDiagram, start, targets):
    adj = {v: set() for v in gx.vertices}
    for u, v in gx.directed:
        adj[u].add(v)
        adj[v].add(u)
    path = [start]
    on_path = {start}

    def walk(v):
        for nxt in sorted(adj[v]):
            if nxt in on_path:
                continue
            path.append(nxt)
            if nxt in targets:
                yield tuple(path)
            else:
                on_path.add(nxt)
                yield from walk(nxt)
                on_path.discard(nxt)
            path.pop()

    yield from walk(start)


def find_open_path(
    g: CausalDiagram,
    a,
    b,
    c=(),
    require_arrow_into_start: bool = False,
) -> Optional[tuple]:
    """Return one unblocked path from a to b given c, or None.

    With require_arrow_into_start, only paths whose first edge points at
    the start vertex count (back-door paths).  Latent expansion vertices
    may appear inside the returned path; they are part of the witness.
    """
    aset = _as_vertex_set(g, a, "first argument")
    bset = _as_vertex_set(g, b, "second argument")
    cset = _as_vertex_set(g, c, "conditioning set")
    gx = expand_bidirected(g)
    for start in sorted(aset):
        for path in _iter_simple_paths(gx, start, bset):
            if require_arrow_into_start and (path[1], path[0]) not in gx.directed:
                continue
            if not _path_blocked(gx, path, cset):
                return path
    return None


def _directed_paths(gx: CausalDiagram, x, y):
    path = [x]

    def walk(v):
        for nxt in sorted(gx.children(v)):
            if nxt in path:
                continue
            path.append(nxt)
            if nxt == y:
                yield tuple(path)
            else:
                yield from walk(nxt)
            path.pop()

    yield from walk(x)


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of a back-door or front-door check, with a witness on failure."""

    criterion: str
    x: str
    y: str
    given: tuple
    holds: bool
    failing_clause: Optional[str] = None
    failing_path: Optional[tuple] = None
    detail: str = ""


def _criterion_pre(g: CausalDiagram, x: str, y: str, z) -> frozenset:
    zset = _as_vertex_set(g, z, "adjustment set")
    _as_vertex_set(g, (x, y), "effect pair")
    if x == y or x in zset or y in zset:
        raise PreconditionError("x, y, and the adjustment set must be distinct")
    if x in g.descendants(y):
        raise PreconditionError(f"{x!r} is a descendant of {y!r}; effect direction is wrong")
    return zset


def satisfies_backdoor(g: CausalDiagram, x: str, y: str, z=()) -> CriterionReport:
    """Check the back-door criterion for z relative to (x, y).

    Two requirements: no member of z descends from x, and z blocks every
    path from x to y that starts with an arrow into x.
    """
    zset = _criterion_pre(g, x, y, z)
    desc = g.descendants(x)
    bad = sorted(zset & desc)
    if bad:
        return CriterionReport(
            "backdoor", x, y, tuple(sorted(zset)), False,
            failing_clause="no-descendants",
            detail=f"{bad[0]!r} is a descendant of {x!r}",
        )
    witness = find_open_path(g, x, y, zset, require_arrow_into_start=True)
    if witness is not None:
        return CriterionReport(
            "backdoor", x, y, tuple(sorted(zset)), False,
            failing_clause="blocks-spurious-paths", failing_path=witness,
            detail="unblocked path with an arrow into the exposure",
        )
    return CriterionReport("backdoor", x, y, tuple(sorted(zset)), True)


def satisfies_frontdoor(g: CausalDiagram, x: str, y: str, z=()) -> CriterionReport:
    """Check the front-door criterion for the mediator set z relative to (x, y).

    Three requirements: z intercepts every directed path from x to y; no
    unblocked path from x into z starts with an arrow into x; and every
    path from a member of z to y that starts with an arrow into that
    member is blocked by {x} alone.
    """
    zset = _criterion_pre(g, x, y, z)
    gx = expand_bidirected(g)

    for path in _directed_paths(gx, x, y):
        if not (set(path[1:-1]) & zset):
            return CriterionReport(
                "frontdoor", x, y, tuple(sorted(zset)), False,
                failing_clause="intercepts-directed-paths", failing_path=path,
                detail="directed path avoids the mediator set",
            )

    if zset:
        witness = find_open_path(g, x, sorted(zset), (), require_arrow_into_start=True)
        if witness is not None:
            return CriterionReport(
                "frontdoor", x, y, tuple(sorted(zset)), False,
                failing_clause="exposure-mediator-unconfounded", failing_path=witness,
                detail="unblocked back-door path from the exposure into the mediator set",
            )
        for zv in sorted(zset):
            witness = find_open_path(g, zv, y, (x,), require_arrow_into_start=True)
            if witness is not None:
                return CriterionReport(
                    "frontdoor", x, y, tuple(sorted(zset)), False,
                    failing_clause="mediator-outcome-unconfounded", failing_path=witness,
                    detail="back-door path from the mediator to the outcome survives conditioning on the exposure",
                )
    return CriterionReport("frontdoor", x, y, tuple(sorted(zset)), True)


def find_adjustment_set(g: CausalDiagram, x: str, y: str, candidates, criterion: str = "backdoor"):
    """Smallest candidate subset satisfying the chosen criterion, or None.

    Subsets are tried in order of size, ties broken lexicographically, so
    the result is deterministic.  At most 20 candidates are accepted; the
    search is exhaustive over all subsets.
    """
    cands = sorted(_as_vertex_set(g, candidates, "candidates"))
    if x in cands or y in cands:
        raise PreconditionError("candidates must not contain x or y")
    if len(cands) > MAX_ADJUSTMENT_CANDIDATES:
        raise SizeError(
            f"{len(cands)} candidates exceed the exhaustive-search cap of {MAX_ADJUSTMENT_CANDIDATES}"
        )
    if criterion == "backdoor":
        check = satisfies_backdoor
    elif criterion == "frontdoor":
        check = satisfies_frontdoor
    else:
        raise PreconditionError(f"unknown criterion {criterion!r}")
    for size in range(len(cands) + 1):
        for subset in itertools.combinations(cands, size):
            if check(g, x, y, subset).holds:
                return subset
    return None


# ---------------------------------------------------------------------------
# JSON interchange


def diagram_to_json(g: CausalDiagram) -> dict:
    return {
        "vertices": list(g.vertices),
        "directed": [list(e) for e in g.directed],
        "bidirected": [list(e) for e in g.bidirected],
    }


def diagram_from_json(payload) -> CausalDiagram:
    if not isinstance(payload, dict):
        raise FormatError("diagram payload must be a JSON object")
    try:
        vertices = payload["vertices"]
    except KeyError:
        raise FormatError("diagram payload lacks a 'vertices' list") from None
    directed = payload.get("directed", [])
    bidirected = payload.get("bidirected", [])
    for name, edges in (("directed", directed), ("bidirected", bidirected)):
        if not isinstance(edges, list) or any(
            not isinstance(e, list) or len(e) != 2 for e in edges
        ):
            raise FormatError(f"'{name}' must be a list of two-element lists")
    return build_diagram(vertices, [tuple(e) for e in directed], [tuple(e) for e in bidirected])
