"""Facets of the bounded-dimension classical polytope and their symmetry classes.

Facets come from an exact double-description conversion over integer data. The
symmetry group relabels preparations, relabels measurements and swaps the two
outcomes of any measurement; it acts on coefficient matrices as
``W'[x, y] = flip[y] * W[perm_x[x], perm_y[y]]`` and leaves every polytope of
the family invariant, so facets map to facets.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _exact
from .errors import ResourceGuardError, ValidationError
from .polytope import DEFAULT_VERTEX_CAP, DeterministicVertex, vertex_array, vertex_count
from .scenario import Scenario
from .witness import Witness, build_IN

log = logging.getLogger(__name__)

MAX_ENTRIES = 8
MAX_VERTICES = 10 ** 4

FACET = "facet"
VALID_NOT_TIGHT = "valid-not-tight"
NOT_VALID = "not-valid"


# -- double description ----------------------------------------------------------------------

def _int_matmul(a, b):
    return _exact._matmul_exact(a, b)


def extreme_rays(rows) -> np.ndarray:
    """Extreme rays of the pointed cone ``{y : rows @ y >= 0}`` as primitive integer rows.

    ``rows`` is an integer matrix of full column rank. Constraints are added one
    at a time; a positive and a negative ray are combined only when they are
    adjacent, which is decided combinatorially from their zero sets.
    """
    rows = np.asarray(rows, dtype=np.int64)
    n_rows, dim = rows.shape
    init = _exact.independent_rows(rows)
    if len(init) != dim:
        raise ValidationError("cone is not pointed: constraint matrix lacks full column rank")
    inv_cols = []
    for i in range(dim):
        # column i of the inverse solves rows[init] @ y = e_i
        e = [0] * dim
        e[i] = 1
        aug = [list(map(int, rows[r])) + [e[k]] for k, r in enumerate(init)]
        red, piv = _exact.rref(aug)
        sol = [Fraction(0)] * dim
        for r, p in zip(red, piv):
            sol[p] = r[-1]
        den = 1
        for v in sol:
            den = den * v.denominator // np.gcd(den, v.denominator)
        inv_cols.append(_exact.primitive(v * den for v in sol))
    rays = np.array(inv_cols, dtype=np.int64)
    processed = list(init)
    done = set(init)
    order = [i for i in range(n_rows) if i not in done]

    for step, h in enumerate(order):
        log.debug("constraint %d/%d: %d rays", step + 1, len(order), len(rays))
        s = _int_matmul(rays, rows[h])
        pos = np.flatnonzero(s > 0)
        neg = np.flatnonzero(s < 0)
        zero = np.flatnonzero(s == 0)
        if len(neg) == 0:
            processed.append(h)
            continue
        new = []
        if len(pos):
            zmat = _int_matmul(rays, rows[processed].T) == 0
            counts = zmat[pos].astype(np.int32) @ zmat[neg].T.astype(np.int32)
            pi, ni = np.nonzero(counts >= dim - 2)
            if len(pi):
                zf = zmat.astype(np.float32)
                for start in range(0, len(pi), 4096):
                    p = pos[pi[start:start + 4096]]
                    q = neg[ni[start:start + 4096]]
                    common = zmat[p] & zmat[q]
                    sizes = common.sum(axis=1)
                    contain = (zf @ common.T.astype(np.float32)) == sizes[None, :]
                    adjacent = contain.sum(axis=0) == 2
                    for a, b in zip(p[adjacent], q[adjacent]):
                        combo = s[a] * rays[b] - s[b] * rays[a]
                        new.append(_exact.primitive(combo))
        keep = np.concatenate([pos, zero])
        rays = np.array([tuple(r) for r in rays[keep]] + new, dtype=np.int64).reshape(-1, dim)
        processed.append(h)
    rays = np.unique(rays, axis=0)
    return rays


def _affine_coordinates(points: np.ndarray):
    """Coordinates spanning the affine hull of ``points`` and the hull's equations.

    Returns ``(cols, equations)`` where the projection onto ``cols`` is injective
    on the hull and each equation ``(a, b)`` means ``a @ z == b`` on the hull.
    """
    base = points[0].astype(np.int64)
    diffs = points.astype(np.int64) - base
    n = points.shape[1]
    idx = _exact.independent_rows(diffs) if len(points) > 1 else []
    _, pivots = _exact.rref(diffs[idx].tolist()) if idx else ([], [])
    eqs = [(np.array(a, dtype=np.int64), int(np.dot(a, base)))
           for a in _exact.nullspace(diffs[idx].tolist(), n)] if idx else \
          [(np.eye(n, dtype=np.int64)[i], int(base[i])) for i in range(n)]
    return list(pivots), eqs


def hull_facets(points: np.ndarray):
    """Facets of conv(points) for integer points (rows).

    Returns ``(facets, equations, relative)``: ``facets`` is a sorted list of
    ``(a, b)`` with ``a @ z <= b``; when the points are not full-dimensional the
    facets are relative to the affine hull described by ``equations``.
    """
    points = np.asarray(points, dtype=np.int64)
    n = points.shape[1]
    cols, eqs = _affine_coordinates(points)
    relative = len(cols) < n
    proj = points[:, cols]
    k = len(cols)
    if k == 0:
        return [], eqs, relative
    cone_rows = np.hstack([-proj, np.ones((len(proj), 1), dtype=np.int64)])
    rays = extreme_rays(cone_rows)
    facets = []
    for r in rays:
        a = np.zeros(n, dtype=np.int64)
        a[cols] = r[:k]
        facets.append((a, int(r[k])))
    facets.sort(key=lambda f: (tuple(f[0]), f[1]))
    return facets, eqs, relative


def vertices_from_inequalities(facets, equations=()) -> np.ndarray:
    """Vertices of ``{z : a @ z <= b for facets, a @ z == b for equations}`` (exact).

    Vertices must be integral for the integer array return; non-integral vertices
    raise ``ValueError``.
    """
    rows = [[b] + [-int(x) for x in a] for a, b in facets]
    for a, b in equations:
        rows.append([b] + [-int(x) for x in a])
        rows.append([-b] + [int(x) for x in a])
    dim = len(rows[0])
    rows.append([1] + [0] * (dim - 1))
    rays = extreme_rays(np.array(rows, dtype=np.int64))
    out = []
    for r in rays:
        t = int(r[0])
        if t <= 0:
            raise ValueError("inequality system is unbounded")
        if any(int(x) % t for x in r[1:]):
            raise ValueError("inequality system has a non-integral vertex")
        out.append([int(x) // t for x in r[1:]])
    return np.array(sorted(out), dtype=np.int64)


# -- facets of the classical polytope --------------------------------------------------------

@dataclass(frozen=True)
class Facet:
    """Valid inequality ``witness . E <= bound`` with its saturating vertices."""

    witness: Witness
    bound: Fraction
    d: int
    saturating_vertices: list = field(repr=False, compare=False)
    affine_rank: int
    relative: bool = False

    @property
    def saturating_count(self) -> int:
        return len(self.saturating_vertices)


@dataclass
class FacetCheck:
    status: str
    facet: Facet | None = None
    # a vertex exceeding the bound when the inequality is not valid
    violating_vertex: DeterministicVertex | None = None
    max_value: Fraction | None = None
    affine_rank: int | None = None

    def __bool__(self):
        return self.status == FACET


@dataclass
class FacetEnumeration:
    scenario: Scenario
    d: int
    facets: list
    equations: list
    relative: bool

    def __iter__(self):
        return iter(self.facets)

    def __len__(self):
        return len(self.facets)


def _guard(scenario: Scenario, d: int, max_entries: int, max_vertices: int):
    if scenario.n_entries > max_entries:
        raise ResourceGuardError(f"facet enumeration needs N*m <= {max_entries}, "
                                 f"got {scenario.n_entries}", limit=max_entries,
                                 requested=scenario.n_entries)
    count = vertex_count(scenario, d)
    if count > max_vertices:
        raise ResourceGuardError(f"facet enumeration needs at most {max_vertices} vertices, "
                                 f"got {count}", limit=max_vertices, requested=count)


def _make_facet(scenario, d, verts, a, b, dim_p, relative):
    w = Witness(scenario, tuple(map(tuple, np.asarray(a).reshape(scenario.shape).tolist())),
                {d: (Fraction(b), None)})
    flat = verts.reshape(len(verts), -1).astype(np.int64)
    sat = flat[flat @ np.asarray(a, dtype=np.int64) == b]
    return Facet(w, Fraction(b), d,
                 [DeterministicVertex(scenario, v.reshape(scenario.shape)) for v in sat],
                 _exact.affine_rank(sat), relative)


def enumerate_facets(scenario: Scenario, d: int, max_entries: int = MAX_ENTRIES,
                     max_vertices: int = MAX_VERTICES) -> FacetEnumeration:
    """Complete facet list of the dimension-d polytope, in exact arithmetic."""
    _guard(scenario, d, max_entries, max_vertices)
    verts = vertex_array(scenario, d, max(max_vertices, 1))
    flat = verts.reshape(len(verts), -1)
    facets, eqs, relative = hull_facets(flat)
    dim_p = len(_affine_coordinates(flat.astype(np.int64))[0])
    out = [_make_facet(scenario, d, verts, a, b, dim_p, relative) for a, b in facets]
    return FacetEnumeration(scenario, d, out, eqs, relative)


def is_facet(w: Witness, d: int, bound=None, vertex_cap: int = DEFAULT_VERTEX_CAP) -> FacetCheck:
    """Check that ``w . E <= bound`` is valid on the dimension-d polytope and defines a facet.

    ``bound`` defaults to the classical bound stored on the witness for ``d``,
    then to the exact maximum over the vertices. Validity and the affine rank of
    the saturating vertices are both checked exactly.
    """
    if bound is None:
        bound = w.classical_bound(d)
    verts = vertex_array(w.scenario, d, vertex_cap)
    k, s = w.integer_form()
    flat = verts.reshape(len(verts), -1).astype(np.int64)
    values = _exact._matmul_exact(flat, np.asarray(k).reshape(-1))
    top = Fraction(int(values.max()), s)
    if bound is None:
        bound = top
    bound = Fraction(bound)
    if top > bound:
        i = int(np.argmax(values))
        return FacetCheck(NOT_VALID, violating_vertex=DeterministicVertex(w.scenario, verts[i]),
                          max_value=top)
    scaled = bound * s
    if scaled.denominator != 1:
        return FacetCheck(VALID_NOT_TIGHT, max_value=top, affine_rank=-1)
    sat = flat[values == int(scaled)]
    cols, _ = _affine_coordinates(flat)
    dim_p = len(cols)
    rank = _exact.affine_rank(sat) if len(sat) else -1
    if len(sat) == 0 or rank != dim_p - 1 or all(v == 0 for r in w.coeffs for v in r):
        return FacetCheck(VALID_NOT_TIGHT, max_value=top, affine_rank=rank)
    facet = Facet(w.with_bound(d, classical=bound), bound, d,
                  [DeterministicVertex(w.scenario, v.reshape(w.scenario.shape)) for v in sat],
                  rank, dim_p < w.scenario.n_entries)
    return FacetCheck(FACET, facet=facet, max_value=top, affine_rank=rank)


# -- symmetry ----------------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryElement:
    """Relabelling of preparations and measurements plus per-measurement outcome swaps."""

    preparation_permutation: tuple[int, ...]
    measurement_permutation: tuple[int, ...]
    column_sign_flips: tuple[int, ...]

    def __post_init__(self):
        n = len(self.preparation_permutation)
        m = len(self.measurement_permutation)
        if sorted(self.preparation_permutation) != list(range(n)):
            raise ValidationError("preparation_permutation must permute 0..N-1")
        if sorted(self.measurement_permutation) != list(range(m)):
            raise ValidationError("measurement_permutation must permute 0..m-1")
        if len(self.column_sign_flips) != m or any(f not in (1, -1) for f in self.column_sign_flips):
            raise ValidationError("column_sign_flips must be m entries of +-1")

    def apply(self, mat):
        a = np.asarray(mat)
        out = a[np.ix_(self.preparation_permutation, self.measurement_permutation)]
        return out * np.asarray(self.column_sign_flips, dtype=out.dtype if out.dtype != object else object)

    def apply_witness(self, w: Witness) -> Witness:
        return Witness(w.scenario, tuple(map(tuple, self.apply(w.rational).tolist())), w.bounds)


def symmetry_group(scenario: Scenario):
    n, m = scenario.shape
    for px in itertools.permutations(range(n)):
        for py in itertools.permutations(range(m)):
            for flips in itertools.product((1, -1), repeat=m):
                yield SymmetryElement(px, py, flips)


def _orbit_array(k: np.ndarray) -> np.ndarray:
    """All images of an integer matrix under the group, shape (|G|, N, m)."""
    n, m = k.shape
    px = np.array(list(itertools.permutations(range(n))))
    py = np.array(list(itertools.permutations(range(m))))
    flips = np.array(list(itertools.product((1, -1), repeat=m)), dtype=np.int64)
    rows = k[px]                                         # (n!, n, m)
    both = rows[:, :, py].transpose(0, 2, 1, 3)          # (n!, m!, n, m)
    imgs = both[:, :, None, :, :] * flips[None, None, :, None, :]
    return imgs.reshape(-1, n, m)


def symmetry_orbit(w: Witness) -> list[Witness]:
    """Distinct images of ``w`` under the full relabelling group, in lexicographic order."""
    k, s = w.integer_form()
    if k.dtype == object:
        images = {tuple(e.apply(k).reshape(-1).tolist()) for e in symmetry_group(w.scenario)}
        uniq = sorted(images)
    else:
        imgs = _orbit_array(k).reshape(-1, k.size)
        uniq = [tuple(r) for r in np.unique(imgs, axis=0).tolist()]
    n, m = w.scenario.shape
    return [Witness(w.scenario, tuple(tuple(Fraction(v, s) for v in row[i * m:(i + 1) * m])
                                      for i in range(n)), w.bounds) for row in uniq]


def canonical_form(w: Witness, bound) -> tuple[tuple[int, ...], Fraction]:
    """Lexicographically smallest primitive integer coefficient vector over the orbit."""
    k, s = w.integer_form()
    flat = [int(v) for v in np.asarray(k).reshape(-1)]
    g = np.gcd.reduce(np.abs(flat)) if any(flat) else 1
    g = int(g) or 1
    k = (np.asarray(k, dtype=np.int64) // g)
    scaled_bound = Fraction(bound) * s / g
    imgs = _orbit_array(k).reshape(-1, k.size)
    best = min(map(tuple, imgs.tolist()))
    return best, scaled_bound


@dataclass
class FacetClass:
    representative: Witness
    bound: Fraction
    size: int
    label: str
    members: list = field(repr=False, default_factory=list)


def _label(coeffs: tuple[int, ...], bound: Fraction, scenario: Scenario) -> str:
    nonzero = [v for v in coeffs if v != 0]
    if len(nonzero) == 1:
        return "positivity"
    n, m = scenario.shape
    if m == n - 1 and n >= 3:
        ref, ref_bound = canonical_form(build_IN(n), 0)
        if coeffs == ref:
            return f"I_{n}"
    return "non-trivial"


def classify_facets(facets) -> list[FacetClass]:
    """Group facets into symmetry orbits; one canonical representative per orbit."""
    classes: dict = {}
    for f in facets:
        key = canonical_form(f.witness, f.bound)
        classes.setdefault(key, []).append(f)
    out = []
    for (coeffs, bound), members in sorted(classes.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        scenario = members[0].witness.scenario
        n, m = scenario.shape
        d = members[0].d
        rep = Witness(scenario, tuple(tuple(coeffs[i * m:(i + 1) * m]) for i in range(n)),
                      {d: (bound, None)})
        out.append(FacetClass(rep, bound, len(members), _label(coeffs, bound, scenario), members))
    # positivity first, then by size of the class
    out.sort(key=lambda c: (c.label != "positivity", -c.size, [int(v) for r in c.representative.coeffs for v in r]))
    return out
