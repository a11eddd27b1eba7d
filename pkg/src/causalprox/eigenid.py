"""Latent-joint identification from two proxies and an anchor.

Given an observable table over proxies S and T, an anchor W, and optional
strata Z, the latent joint f(u, w, z) is recovered per stratum from two
cross-moment matrices built over selected proxy events.  Their generalized
eigenproblem has the anchor conditionals f(w|u, z) as eigenvalues; the
eigenvector bases, fixed by a known-row normalization, yield the proxy
emission rows and the latent prior.  Every algebraic step is checked
against an explicit tolerance and fails with a coded error instead of
returning a silently bad reconstruction.

Eigenvalue order carries no category labels by itself.  When the latent
prior is known to be strictly increasing, sorting the recovered prior
entries pins the labeling (identify_joint).  Without that, only quantities
invariant to relabeling are available (order_free_bounds).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ComplexEigenvalueError,
    DegenerateSpectrumError,
    DesignError,
    NoCriterionError,
    NonDiagonalError,
    NonPositiveEigenvalueError,
    OrderAmbiguityError,
    PatternError,
    PivotError,
    PositivityError,
    RangeError,
    SingularMatrixError,
    ZeroMassError,
)
from .graph import CausalDiagram, find_adjustment_set
from .table import JointTable, backdoor_adjust, frontdoor_adjust, make_table

MAX_LATENT_CATEGORIES = 16


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds for the identification pipeline."""

    singular: float = 1e-10
    gap: float = 1e-6
    residual: float = 1e-8
    pivot: float = 1e-10
    prob: float = 1e-6
    diag: float = 1e-6
    order: float = 1e-6
    recon: float = 1e-6


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class ProxyDesign:
    """Role assignment and event selection for one identification run.

    s_select and t_select each list k-1 value vectors (over s_vars and
    t_vars respectively); together with the constant row/column they make
    the cross-moment matrices square.  w_value is the anchor assignment
    that defines the pencil's second matrix.
    """

    latent_name: str
    latent_categories: tuple
    s_vars: tuple
    t_vars: tuple
    w_vars: tuple
    z_vars: tuple
    s_select: tuple
    t_select: tuple
    w_value: tuple
    order_known: bool = True

    @property
    def k(self):
        return len(self.latent_categories)

    def __post_init__(self):
        k = self.k
        if k < 2:
            raise DesignError("latent variable needs at least two categories")
        if k > MAX_LATENT_CATEGORIES:
            raise DesignError(
                f"latent variable has {k} categories; the supported maximum "
                f"is {MAX_LATENT_CATEGORIES}"
            )
        if len(set(self.latent_categories)) != k:
            raise DesignError("latent categories must be distinct")
        roles = {
            "S": self.s_vars,
            "T": self.t_vars,
            "W": self.w_vars,
            "Z": self.z_vars,
        }
        seen = {}
        for role, vars_ in roles.items():
            if role != "Z" and not vars_:
                raise DesignError(f"role {role} needs at least one variable")
            if len(set(vars_)) != len(vars_):
                raise DesignError(f"role {role} lists a variable twice")
            for v in vars_:
                if v == self.latent_name:
                    raise DesignError(
                        f"latent variable {v!r} cannot also play role {role}"
                    )
                if v in seen:
                    raise DesignError(
                        f"variable {v!r} assigned to both {seen[v]} and {role}"
                    )
                seen[v] = role
        for label, select, vars_ in (
            ("s", self.s_select, self.s_vars),
            ("t", self.t_select, self.t_vars),
        ):
            if len(select) != k - 1:
                raise DesignError(
                    f"{label}_select needs exactly {k - 1} value vectors, "
                    f"got {len(select)}"
                )
            for vec in select:
                if len(vec) != len(vars_):
                    raise DesignError(
                        f"{label}_select vector {vec!r} does not match "
                        f"variables {vars_!r}"
                    )
            if len(set(select)) != len(select):
                raise DesignError(f"{label}_select lists a vector twice")
        if len(self.w_value) != len(self.w_vars):
            raise DesignError("w_value does not match the anchor variables")

    def to_json(self) -> dict:
        return {
            "latent": {
                "name": self.latent_name,
                "categories": list(self.latent_categories),
                "order_known": self.order_known,
            },
            "roles": {
                "S": list(self.s_vars),
                "T": list(self.t_vars),
                "W": list(self.w_vars),
                "Z": list(self.z_vars),
            },
            "select": {
                "s": [list(v) for v in self.s_select],
                "t": [list(v) for v in self.t_select],
                "w": list(self.w_value),
            },
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ProxyDesign":
        try:
            latent = payload["latent"]
            roles = payload["roles"]
            select = payload["select"]
            return cls(
                latent_name=latent["name"],
                latent_categories=tuple(latent["categories"]),
                order_known=bool(latent.get("order_known", True)),
                s_vars=tuple(roles["S"]),
                t_vars=tuple(roles["T"]),
                w_vars=tuple(roles["W"]),
                z_vars=tuple(roles.get("Z", ())),
                s_select=tuple(tuple(v) for v in select["s"]),
                t_select=tuple(tuple(v) for v in select["t"]),
                w_value=tuple(select["w"]),
            )
        except (KeyError, TypeError) as exc:
            raise DesignError(f"malformed design payload: {exc}") from exc


def check_design(table: JointTable, design: ProxyDesign) -> None:
    """Validate a design against the observable table it will be run on."""
    if design.latent_name in table.variables:
        raise DesignError(
            f"latent variable {design.latent_name!r} appears in the "
            "observable table; identification expects it hidden"
        )
    for role, vars_ in (
        ("S", design.s_vars),
        ("T", design.t_vars),
        ("W", design.w_vars),
        ("Z", design.z_vars),
    ):
        for v in vars_:
            if v not in table.variables:
                raise DesignError(f"role {role} variable {v!r} not in the table")
    for label, select, vars_ in (
        ("s", design.s_select, design.s_vars),
        ("t", design.t_select, design.t_vars),
        ("w", (design.w_value,), design.w_vars),
    ):
        for vec in select:
            for var, val in zip(vars_, vec):
                if val not in table.categories(var):
                    raise DesignError(
                        f"{label} selection value {val!r} is not a category "
                        f"of {var!r}"
                    )


# ---------------------------------------------------------------------------
# Cross moments


@dataclass(frozen=True)
class StratumMatrices:
    """Square cross-moment matrices for one stratum.

    p[i][j] holds the conditional mass of (s event i AND t event j) given
    the stratum, with index 0 meaning "no constraint"; q additionally
    intersects the anchor event.  Entries keep the table's arithmetic mode.
    """

    stratum: tuple
    w_value: tuple
    p: np.ndarray
    q: np.ndarray

    @property
    def k(self):
        return self.p.shape[0]


def stratum_assignments(design: ProxyDesign, table: JointTable):
    """All strata as dicts, in category order; a single empty dict without Z."""
    if not design.z_vars:
        return [{}]
    axes = [table.categories(v) for v in design.z_vars]
    return [dict(zip(design.z_vars, combo)) for combo in itertools.product(*axes)]


def cross_moment_matrices(
    table: JointTable,
    design: ProxyDesign,
    stratum: Optional[dict] = None,
    w_value: Optional[tuple] = None,
) -> StratumMatrices:
    """Build the pencil matrices for one stratum.

    Rows follow the s events, columns the t events, both prefixed by the
    unconstrained event; q uses w_value (the design's anchor value unless
    overridden).  Raises ZeroMassError when the stratum itself has no mass.
    """
    stratum = dict(stratum or {})
    if w_value is None:
        w_value = design.w_value
    zmass = table.mass(stratum)
    if zmass == 0:
        raise ZeroMassError(f"stratum {stratum!r} has zero mass")
    w_assign = dict(zip(design.w_vars, w_value))

    def cond(assign):
        merged = dict(stratum)
        merged.update(assign)
        return table.mass(merged) / zmass

    k = design.k
    s_events = [{}] + [dict(zip(design.s_vars, vec)) for vec in design.s_select]
    t_events = [{}] + [dict(zip(design.t_vars, vec)) for vec in design.t_select]
    dtype = object if table.mode == "rational" else float
    p = np.empty((k, k), dtype=dtype)
    q = np.empty((k, k), dtype=dtype)
    for i, s_ev in enumerate(s_events):
        for j, t_ev in enumerate(t_events):
            joint = dict(s_ev)
            joint.update(t_ev)
            p[i, j] = cond(joint)
            joint_w = dict(joint)
            joint_w.update(w_assign)
            q[i, j] = cond(joint_w)
    return StratumMatrices(
        stratum=tuple(sorted(stratum.items())),
        w_value=tuple(w_value),
        p=p,
        q=q,
    )


# ---------------------------------------------------------------------------
# Pencil solve


@dataclass(frozen=True)
class PencilEigensystem:
    """Sorted real spectrum of the pencil plus right/left eigenvector bases."""

    values: tuple
    right: np.ndarray
    left: np.ndarray
    residual: float


def _as_float(matrix: np.ndarray) -> np.ndarray:
    return np.array(
        [[float(x) for x in row] for row in matrix], dtype=float
    )


def _check_invertible(matrix: np.ndarray, name: str, tol: Tolerances) -> None:
    k = matrix.shape[0]
    scale = max(1.0, float(np.abs(matrix).max()))
    det = float(np.linalg.det(matrix))
    if abs(det) <= tol.singular * scale**k:
        raise SingularMatrixError(
            f"cross-moment matrix {name} is numerically singular "
            f"(|det| = {abs(det):.3e})"
        )


def solve_pencil(
    p: np.ndarray, q: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES
) -> PencilEigensystem:
    """Solve (q - lambda p) x = 0 for a square pencil with real simple spectrum.

    Checks, in order: both matrices invertible; spectrum real; strictly
    positive; pairwise separated; right and left eigenvector residuals
    within tolerance.  Eigenvalues are returned ascending with matching
    right (columns) and left (columns, for the transposed pencil) vectors.
    """
    p = _as_float(p)
    q = _as_float(q)
    if p.shape != q.shape or p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DesignError("pencil matrices must be square and equal-shaped")
    k = p.shape[0]
    _check_invertible(p, "P", tol)
    _check_invertible(q, "Q", tol)

    def real_spectrum(a, b):
        """Eigen-decompose solve(a, b); returns ascending (values, vectors)."""
        values, vectors = np.linalg.eig(np.linalg.solve(a, b))
        worst = float(np.abs(values.imag).max()) if k else 0.0
        if worst > tol.gap:
            raise ComplexEigenvalueError(
                f"pencil spectrum is not real (max |imag| = {worst:.3e})"
            )
        values = values.real
        order = np.argsort(values, kind="stable")
        return values[order], vectors[:, order].real

    values, right = real_spectrum(p, q)
    if values[0] <= tol.gap:
        raise NonPositiveEigenvalueError(
            f"pencil eigenvalue {values[0]:.3e} is not strictly positive"
        )
    gaps = np.diff(values)
    if k > 1 and float(gaps.min()) <= tol.gap:
        raise DegenerateSpectrumError(
            f"pencil eigenvalues are not separated (min gap = "
            f"{float(gaps.min()):.3e})"
        )
    left_values, left = real_spectrum(p.T, q.T)
    if float(np.abs(left_values - values).max()) > tol.gap:
        raise DegenerateSpectrumError(
            "left and right pencil spectra disagree beyond tolerance"
        )

    worst = 0.0
    for i, lam in enumerate(values):
        denom = max(1.0, float(np.abs(q).max()) + abs(lam) * float(np.abs(p).max()))
        r_res = float(np.abs((q - lam * p) @ right[:, i]).max())
        l_res = float(np.abs((q.T - lam * p.T) @ left[:, i]).max())
        worst = max(worst, r_res / denom, l_res / denom)
    if worst > tol.residual:
        raise DegenerateSpectrumError(
            f"pencil eigenvector residual {worst:.3e} exceeds tolerance"
        )
    return PencilEigensystem(
        values=tuple(float(v) for v in values),
        right=right,
        left=left,
        residual=worst,
    )


# ---------------------------------------------------------------------------
# Factor recovery


@dataclass(frozen=True)
class LatentFactors:
    """Per-stratum latent factorization, aligned by pencil index.

    Row/entry i of every field refers to the same latent category; the
    labeling of i is meaningful only after prior-based reordering.
    anchor holds f(w|u) for the design's anchor value, prior holds f(u),
    t_rows[i] the selected-t conditionals [1, f(t_1|u_i), ...], s_rows[i]
    likewise for s.
    """

    stratum: tuple
    anchor: tuple
    prior: tuple
    t_rows: np.ndarray
    s_rows: np.ndarray
    t_normalizer: tuple
    s_normalizer: tuple
    diag_residual: float
    eigen_residual: float


def _normalized_inverse(vectors: np.ndarray, what: str, tol: Tolerances):
    """Invert an eigenvector basis and rescale rows to leading entry 1.

    Returns (rows, normalizer): rows is the rescaled inverse, normalizer
    the diagonal of scale factors applied (one per row).
    """
    try:
        inv = np.linalg.inv(vectors)
    except np.linalg.LinAlgError as exc:
        raise PivotError(f"{what} eigenvector basis is singular") from exc
    scale = float(np.abs(inv).max())
    rows = []
    normalizer = []
    for i in range(inv.shape[0]):
        pivot = inv[i, 0]
        if abs(pivot) <= tol.pivot * max(1.0, scale):
            raise PivotError(
                f"{what} basis row {i} has a vanishing leading entry; the "
                "unit-row normalization is undefined"
            )
        rows.append(inv[i] / pivot)
        normalizer.append(1.0 / float(pivot))
    return np.array(rows), tuple(normalizer)


def _check_probability(values, what, tol: Tolerances):
    out = []
    for v in np.atleast_1d(np.asarray(values, dtype=float)).ravel():
        if v < -tol.prob or v > 1 + tol.prob:
            raise RangeError(f"recovered {what} entry {v:.6g} is outside [0, 1]")
        out.append(min(1.0, max(0.0, float(v))))
    return out


def recover_factors(
    system: PencilEigensystem,
    p: np.ndarray,
    tol: Tolerances = DEFAULT_TOLERANCES,
    stratum: tuple = (),
) -> LatentFactors:
    """Turn a solved pencil plus its P matrix into latent factors.

    The inverted right basis, rows scaled to leading entry 1, gives the
    t-conditional rows; the left basis gives the s rows; conjugating P by
    those inverses must leave a diagonal matrix whose entries are the
    latent prior.
    """
    p = _as_float(p)
    t_rows, t_normalizer = _normalized_inverse(system.right, "right", tol)
    s_rows, s_normalizer = _normalized_inverse(system.left, "left", tol)
    # p factors as s_rows.T @ diag(prior) @ t_rows, so conjugating by the
    # inverses must leave a diagonal matrix
    mixed = np.linalg.inv(s_rows).T @ p @ np.linalg.inv(t_rows)
    diag = np.diag(mixed).copy()
    off = mixed - np.diag(diag)
    scale = max(1.0, float(np.abs(diag).max()))
    diag_residual = float(np.abs(off).max()) / scale
    if diag_residual > tol.diag:
        raise NonDiagonalError(
            f"prior recovery is not diagonal (off-diagonal residual "
            f"{diag_residual:.3e}); left/right eigenvector pairing failed"
        )
    prior = _check_probability(diag, "prior", tol)
    for i, m in enumerate(prior):
        if m <= 0.0:
            raise RangeError(f"recovered prior entry {i} vanishes")
    anchor = _check_probability(system.values, "anchor conditional", tol)
    t_checked = np.array(
        [_check_probability(row[1:], "t conditional", tol) for row in t_rows]
    )
    s_checked = np.array(
        [_check_probability(row[1:], "s conditional", tol) for row in s_rows]
    )
    k = len(prior)
    t_full = np.hstack([np.ones((k, 1)), t_checked])
    s_full = np.hstack([np.ones((k, 1)), s_checked])
    return LatentFactors(
        stratum=tuple(stratum),
        anchor=tuple(anchor),
        prior=tuple(prior),
        t_rows=t_full,
        s_rows=s_full,
        t_normalizer=t_normalizer,
        s_normalizer=s_normalizer,
        diag_residual=diag_residual,
        eigen_residual=system.residual,
    )


# ---------------------------------------------------------------------------
# Full reconstruction


@dataclass(frozen=True)
class ReconstructedJoint:
    """Recovered latent joint plus the evidence backing it.

    table is a float-mode joint over (latent, W vars, Z vars) with latent
    categories in design order.  factors holds the per-stratum recovery
    (already reordered to match); replay records, per stratum, the worst
    gap between observed cross moments and the ones the factorization
    implies, plus how far the anchor conditionals are from summing to 1.
    """

    table: JointTable
    design: ProxyDesign
    factors: tuple
    replay: dict


def _anchor_profile(table, design, stratum, factors, tol):
    """Recover f(w'|u, z) for every anchor value, given fixed factors.

    Returns (w_values, delta matrix indexed [anchor value][latent i],
    max off-diagonal residual, max replay residual over Q matrices).
    """
    axes = [table.categories(v) for v in design.w_vars]
    w_values = [tuple(combo) for combo in itertools.product(*axes)]
    s_inv_t = np.linalg.inv(factors.s_rows).T
    t_inv = np.linalg.inv(factors.t_rows)
    prior = np.array(factors.prior)
    deltas = np.empty((len(w_values), len(prior)))
    worst_off = 0.0
    worst_replay = 0.0
    for a, w_value in enumerate(w_values):
        sm = cross_moment_matrices(table, design, stratum, w_value=w_value)
        q = _as_float(sm.q)
        mixed = s_inv_t @ q @ t_inv
        diag = np.diag(mixed)
        scale = max(1.0, float(np.abs(prior).max()))
        off = float(np.abs(mixed - np.diag(diag)).max()) / scale
        if off > tol.diag:
            raise NonDiagonalError(
                f"anchor recovery for w={w_value!r} is not diagonal "
                f"(off-diagonal residual {off:.3e})"
            )
        worst_off = max(worst_off, off)
        delta = diag / prior
        deltas[a] = _check_probability(delta, f"anchor conditional {w_value!r}", tol)
        replay = factors.s_rows.T @ np.diag(prior * deltas[a]) @ factors.t_rows
        worst_replay = max(worst_replay, float(np.abs(replay - q).max()))
    return w_values, deltas, worst_off, worst_replay


def identify_joint(
    table: JointTable,
    design: ProxyDesign,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ReconstructedJoint:
    """Recover the joint of (latent, anchor, strata) from the observable table.

    Requires design.order_known: the recovered latent prior must be
    strictly increasing (margin tol.order) in every stratum, which pins
    the category labels.  Raises OrderAmbiguityError otherwise.
    """
    check_design(table, design)
    if not design.order_known:
        raise OrderAmbiguityError(
            "latent category order is declared unknown; the labeled joint is "
            "not identified (order-free bounds remain available)"
        )
    k = design.k
    w_axes = [table.categories(v) for v in design.w_vars]
    z_axes = [table.categories(v) for v in design.z_vars]
    latent_cats = design.latent_categories
    schema = [(design.latent_name, latent_cats)]
    schema += [(v, table.categories(v)) for v in design.w_vars]
    schema += [(v, table.categories(v)) for v in design.z_vars]
    shape = tuple(len(cats) for _, cats in schema)
    probs = np.zeros(shape, dtype=float)

    factors_out = []
    replay = {
        "cross_moment": 0.0,
        "anchor_diag": 0.0,
        "anchor_total": 0.0,
    }
    for stratum in stratum_assignments(design, table):
        zmass = float(table.mass(stratum))
        if zmass == 0.0:
            raise ZeroMassError(f"stratum {stratum!r} has zero mass")
        sm = cross_moment_matrices(table, design, stratum)
        system = solve_pencil(sm.p, sm.q, tol)
        raw = recover_factors(system, sm.p, tol, stratum=sm.stratum)

        order = np.argsort(raw.prior, kind="stable")
        sorted_prior = [raw.prior[i] for i in order]
        gaps = [b - a for a, b in zip(sorted_prior, sorted_prior[1:])]
        if gaps and min(gaps) <= tol.order:
            raise OrderAmbiguityError(
                f"latent prior entries are not separated in stratum "
                f"{dict(sm.stratum) or '{}'} (min gap {min(gaps):.3e}); the "
                "increasing-prior labeling is ambiguous"
            )
        factors = LatentFactors(
            stratum=raw.stratum,
            anchor=tuple(raw.anchor[i] for i in order),
            prior=tuple(sorted_prior),
            t_rows=raw.t_rows[order],
            s_rows=raw.s_rows[order],
            t_normalizer=tuple(raw.t_normalizer[i] for i in order),
            s_normalizer=tuple(raw.s_normalizer[i] for i in order),
            diag_residual=raw.diag_residual,
            eigen_residual=raw.eigen_residual,
        )
        factors_out.append(factors)

        p_replay = factors.s_rows.T @ np.diag(factors.prior) @ factors.t_rows
        p_gap = float(np.abs(p_replay - _as_float(sm.p)).max())
        w_values, deltas, off, q_gap = _anchor_profile(
            table, design, stratum, factors, tol
        )
        totals = deltas.sum(axis=0)
        total_gap = float(np.abs(totals - 1.0).max())
        replay["cross_moment"] = max(replay["cross_moment"], p_gap, q_gap)
        replay["anchor_diag"] = max(replay["anchor_diag"], off)
        replay["anchor_total"] = max(replay["anchor_total"], total_gap)

        z_index = tuple(
            z_axes[n].index(dict(sm.stratum)[v])
            for n, v in enumerate(design.z_vars)
        )
        for a, w_value in enumerate(w_values):
            w_index = tuple(w_axes[n].index(val) for n, val in enumerate(w_value))
            for i in range(k):
                probs[(i,) + w_index + z_index] = deltas[a][i] * factors.prior[i] * zmass

    total = float(probs.sum())
    if abs(total - 1.0) > tol.prob:
        raise RangeError(
            f"reconstructed joint has total mass {total:.8f}; recovery is "
            "inconsistent with a probability table"
        )
    probs /= total
    return ReconstructedJoint(
        table=make_table(schema, probs, "float"),
        design=design,
        factors=tuple(factors_out),
        replay=replay,
    )


# ---------------------------------------------------------------------------
# Causal queries on the reconstruction


@dataclass(frozen=True)
class EffectResult:
    """Interventional distribution plus the criterion that licensed it."""

    distribution: JointTable
    criterion: str
    adjustment: tuple
    reconstruction: ReconstructedJoint


def identify_causal_effect(
    table: JointTable,
    graph: CausalDiagram,
    design: ProxyDesign,
    x: dict,
    y: str,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> EffectResult:
    """Estimate f(y | set(x)) through the recovered latent joint.

    Exactly one of the exposure and the outcome must be the latent
    variable; the other, and any adjustment variables, must be recovered
    alongside it (anchor or strata).  The adjustment set is searched over
    those recovered variables, back-door first, then front-door.
    """
    if len(x) != 1:
        raise PatternError("exposure must be a single variable assignment")
    (xvar, _), = x.items()
    latent = design.latent_name
    if (xvar == latent) == (y == latent):
        raise PatternError(
            "exactly one of exposure and outcome must be the latent variable"
        )
    observed = set(design.w_vars) | set(design.z_vars)
    other = y if xvar == latent else xvar
    if other not in observed:
        raise PatternError(
            f"{other!r} is not recovered by this design (not an anchor or "
            "stratum variable)"
        )
    recon = identify_joint(table, design, tol)
    candidates = sorted(observed - {xvar, y})
    adjustment = find_adjustment_set(graph, xvar, y, candidates, "backdoor")
    criterion = "backdoor"
    if adjustment is None:
        adjustment = find_adjustment_set(graph, xvar, y, candidates, "frontdoor")
        criterion = "frontdoor"
    if adjustment is None:
        raise NoCriterionError(
            f"no subset of {candidates!r} satisfies the back-door or "
            f"front-door criterion for {xvar!r} -> {y!r}"
        )
    if criterion == "backdoor":
        dist = backdoor_adjust(recon.table, x, y, adjustment)
    else:
        dist = frontdoor_adjust(recon.table, x, y, adjustment)
    return EffectResult(
        distribution=dist,
        criterion=criterion,
        adjustment=tuple(adjustment),
        reconstruction=recon,
    )


# ---------------------------------------------------------------------------
# Order-free bounds


@dataclass(frozen=True)
class OrderFreeBounds:
    """Bounds on the latent posterior that need no category labeling.

    For the queried anchor value x, lower <= f(u | x-stratum ...) summed
    the extremal way <= upper; concretely the bounds sandwich every mixture
    component's posterior weight min/max over latent categories, averaged
    over strata.  per_stratum holds (stratum, anchor-given-latent,
    prior) triples in pencil order.
    """

    lower: float
    upper: float
    per_stratum: tuple


def order_free_bounds(
    table: JointTable,
    design: ProxyDesign,
    x: dict,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> OrderFreeBounds:
    """Bound min/max over u of f(u | x, z), averaged over strata.

    Works without knowing which eigenvalue belongs to which latent
    category: the set of (anchor conditional, prior) pairs is label-free.
    The queried x must assign exactly the anchor variables.
    """
    check_design(table, design)
    if set(x) != set(design.w_vars):
        raise PatternError(
            "order-free bounds require the query to assign exactly the "
            f"anchor variables {design.w_vars!r}"
        )
    x_value = tuple(x[v] for v in design.w_vars)
    for var, val in zip(design.w_vars, x_value):
        if val not in table.categories(var):
            raise PatternError(f"{val!r} is not a category of {var!r}")
    lower = 0.0
    upper = 0.0
    per_stratum = []
    for stratum in stratum_assignments(design, table):
        zmass = float(table.mass(stratum))
        if zmass == 0.0:
            raise ZeroMassError(f"stratum {stratum!r} has zero mass")
        merged = dict(stratum)
        merged.update(x)
        x_cond = float(table.mass(merged)) / zmass
        if x_cond <= 0.0:
            raise PositivityError(
                f"anchor value {x!r} has zero mass in stratum {stratum!r}"
            )
        sm = cross_moment_matrices(table, design, stratum)
        system = solve_pencil(sm.p, sm.q, tol)
        factors = recover_factors(system, sm.p, tol, stratum=sm.stratum)
        if x_value == tuple(design.w_value):
            deltas = np.array(factors.anchor)
        else:
            w_values, profile, _, _ = _anchor_profile(
                table, design, stratum, factors, tol
            )
            deltas = profile[w_values.index(x_value)]
        posterior = deltas * np.array(factors.prior) / x_cond
        lower += zmass * float(posterior.min())
        upper += zmass * float(posterior.max())
        per_stratum.append((sm.stratum, tuple(float(d) for d in deltas), factors.prior))
    return OrderFreeBounds(
        lower=min(1.0, max(0.0, lower)),
        upper=min(1.0, max(0.0, upper)),
        per_stratum=tuple(per_stratum),
    )
