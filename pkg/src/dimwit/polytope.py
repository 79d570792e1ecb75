"""Deterministic vertices of the bounded-dimension classical polytope and LP membership.

A classical strategy with messages of dimension d reproduces, deterministically,
a sign matrix whose rows take at most d distinct values. The realisable set is
the convex hull of those sign matrices. Membership is decided by a linear
program whose dual yields a separating witness when the point is outside.
Every certificate is re-checked in exact arithmetic before it is returned.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ResourceGuardError, SolverError, ValidationError
from .scenario import CorrelationMatrix, Scenario
from .simplex import OPTIMAL, solve_lp
from .witness import Witness

log = logging.getLogger(__name__)

DEFAULT_VERTEX_CAP = 10 ** 6
FEAS_TOL = 1e-9
CHECK_TOL = Fraction(1, 10 ** 9)
RATIONAL_DENOMINATOR = 64

INSIDE = "Inside"
OUTSIDE = "Outside"


@dataclass(frozen=True, eq=False)
class DeterministicVertex:
    scenario: Scenario
    signs: np.ndarray

    def __post_init__(self):
        s = np.array(self.signs, dtype=np.int8)
        if s.shape != self.scenario.shape or not np.all(np.abs(s) == 1):
            raise ValidationError("a deterministic vertex is an N x m matrix of +-1 entries")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @property
    def n_distinct_rows(self) -> int:
        return len(np.unique(self.signs, axis=0))

    def __eq__(self, other):
        return (isinstance(other, DeterministicVertex) and self.scenario == other.scenario
                and np.array_equal(self.signs, other.signs))

    def __hash__(self):
        return hash(self.signs.tobytes())

    def __repr__(self):
        return f"DeterministicVertex({self.signs.tolist()})"


@dataclass(frozen=True)
class MembershipCertificate:
    verdict: str
    d: int
    # list of (vertex, weight); present for Inside
    convex_weights: list | None = None
    # present for Outside
    separating_witness: Witness | None = None
    achieved_value: Fraction | None = None
    classical_max: Fraction | None = None
    # l1 distance from the polytope reported by the LP
    distance: float = 0.0

    @property
    def inside(self) -> bool:
        return self.verdict == INSIDE


def _row_cap(scenario: Scenario, d: int) -> int:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValidationError(f"dimension d must be a positive integer, got {d!r}")
    n, m = scenario.shape
    return min(d, 2 ** m, n)


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Number of partitions of an n-set into k non-empty blocks."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def vertex_count(scenario: Scenario, d: int) -> int:
    n, m = scenario.shape
    rows = 2 ** m
    return sum(stirling2(n, j) * math.perm(rows, j) for j in range(1, _row_cap(scenario, d) + 1))


def _restricted_growth_strings(n: int, k: int):
    """Set partitions of range(n) into exactly k blocks, as block labels per element."""
    def rec(prefix, used):
        if len(prefix) == n:
            if used == k:
                yield tuple(prefix)
            return
        if used + (n - len(prefix)) < k:
            return
        for label in range(min(used + 1, k)):
            yield from rec(prefix + [label], max(used, label + 1))
    yield from rec([], 0)


def _all_rows(m: int) -> np.ndarray:
    """All +-1 rows of length m in lexicographic order (-1 before +1)."""
    bits = (np.arange(2 ** m)[:, None] >> np.arange(m - 1, -1, -1)) & 1
    return (2 * bits - 1).astype(np.int8)


def vertex_array(scenario: Scenario, d: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> np.ndarray:
    """Vertices as an int8 array of shape (K, N, m), lexicographically sorted."""
    count = vertex_count(scenario, d)
    if count > vertex_cap:
        raise ResourceGuardError(f"{count} vertices for {scenario.shape} at d={d} exceed the cap "
                                 f"of {vertex_cap}", limit=vertex_cap, requested=count)
    return _vertex_array_cached(scenario, _row_cap(scenario, d))


@lru_cache(maxsize=16)
def _vertex_array_cached(scenario: Scenario, cap: int) -> np.ndarray:
    n, m = scenario.shape
    rows = _all_rows(m)
    blocks = []
    for j in range(1, cap + 1):
        rgs = np.array(list(_restricted_growth_strings(n, j)), dtype=np.intp)
        picks = np.array(list(itertools.permutations(range(len(rows)), j)), dtype=np.intp)
        # picks[:, rgs] -> (n_picks, n_partitions, n) row indices
        idx = picks[:, rgs].reshape(-1, n)
        blocks.append(idx)
    idx = np.concatenate(blocks)
    # lexicographic key: row indices are already lexicographic, combine most-significant first
    key = np.zeros(len(idx), dtype=np.int64)
    for col in range(n):
        key = key * (2 ** m) + idx[:, col]
    idx = idx[np.argsort(key, kind="stable")]
    out = rows[idx]
    out.setflags(write=False)
    return out


def enumerate_vertices(scenario: Scenario, d: int,
                       vertex_cap: int = DEFAULT_VERTEX_CAP) -> list[DeterministicVertex]:
    return [DeterministicVertex(scenario, v) for v in vertex_array(scenario, d, vertex_cap)]


def _witness_max_over(verts: np.ndarray, w: Witness) -> Fraction:
    k, s = w.integer_form()
    flat = verts.reshape(len(verts), -1)
    if k.dtype == object:
        best = max(sum(int(a) * int(b) for a, b in zip(k.flat, v)) for v in flat)
    else:
        best = int((flat.astype(np.int64) @ k.reshape(-1)).max())
    return Fraction(best, s)


def classical_max(w: Witness, d: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Fraction:
    """Exact maximum of the witness over every vertex of the dimension-d polytope."""
    return _witness_max_over(vertex_array(w.scenario, d, vertex_cap), w)


def classical_max_partitions(w: Witness, d: int) -> Fraction:
    """Same maximum computed without listing vertices.

    Each block of preparations sharing a message contributes
    sum_y |sum_{x in block} w_xy|, so the maximum runs over set partitions only.
    """
    n, m = w.scenario.shape
    cap = min(d, n)
    coeffs = w.rational
    best = None
    for j in range(1, cap + 1):
        for rgs in _restricted_growth_strings(n, j):
            total = Fraction(0)
            for b in range(j):
                members = [x for x in range(n) if rgs[x] == b]
                total += sum(abs(sum(coeffs[x, y] for x in members)) for y in range(m))
            if best is None or total > best:
                best = total
    return best


def _cube_decomposition(e: np.ndarray) -> list[tuple[np.ndarray, Fraction]]:
    """Exact convex decomposition of a point of [-1, 1]^n into at most n + 1 sign vectors."""
    flat = [Fraction(v) for v in e.reshape(-1)]
    t = [(1 + v) / 2 for v in flat]
    levels = sorted(set(t) | {Fraction(0), Fraction(1)})
    out = []
    for lo, hi in zip(levels, levels[1:]):
        # on (lo, hi] the entries with t >= hi are +1
        signs = np.array([1 if ti >= hi else -1 for ti in t], dtype=np.int8).reshape(e.shape)
        out.append((signs, hi - lo))
    return out


def _verify_inside(cm: CorrelationMatrix, pairs) -> bool:
    target = cm.rational()
    weights = [Fraction(float(wt)) for _, wt in pairs]
    if any(wt < 0 for wt in weights) or abs(sum(weights) - 1) > CHECK_TOL:
        return False
    recon = np.zeros(target.shape, dtype=object)
    recon[...] = Fraction(0)
    for (v, _), wt in zip(pairs, weights):
        recon = recon + wt * v.astype(object)
    return all(abs(a - b) <= CHECK_TOL for a, b in zip(recon.flat, target.flat))


def _separation(verts: np.ndarray, w: Witness, cm: CorrelationMatrix):
    bound = _witness_max_over(verts, w)
    value = sum((a * b for a, b in zip(w.rational.flat, cm.rational().flat)), Fraction(0))
    return value, bound, value > bound + CHECK_TOL


def _rationalize(coeffs: np.ndarray, scenario: Scenario) -> Witness:
    rows = [[Fraction(float(v)).limit_denominator(RATIONAL_DENOMINATOR) for v in r] for r in coeffs]
    return Witness(scenario, tuple(map(tuple, rows)))


def _solve_membership(verts: np.ndarray, cm: CorrelationMatrix, rule: str, tol: float):
    n_vert = len(verts)
    n = cm.scenario.n_entries
    vt = verts.reshape(n_vert, n).T.astype(float)
    eye = np.eye(n)
    a = np.block([[vt, eye, -eye],
                  [np.ones((1, n_vert)), np.zeros((1, 2 * n))]])
    b = np.concatenate([cm.e.reshape(-1), [1.0]])
    c = np.concatenate([np.zeros(n_vert), np.ones(2 * n)])
    res = solve_lp(c, a, b, tol=tol, rule=rule)
    if res.status != OPTIMAL:
        raise SolverError(f"membership LP ended with status {res.status}")
    return res


def membership(cm: CorrelationMatrix, d: int,
               vertex_cap: int = DEFAULT_VERTEX_CAP) -> MembershipCertificate:
    """Decide whether ``cm`` lies in the convex hull of dimension-d deterministic vertices.

    The LP minimises the l1 distance from ``cm`` to the hull. Zero distance gives
    convex weights; a positive distance gives, through the LP dual, a witness
    with coefficients in [-1, 1] that separates ``cm`` from every vertex.

    Raises
    ------
    ResourceGuardError
        The vertex count exceeds ``vertex_cap``.
    SolverError
        Neither floating attempt produced a certificate that survives the exact check.
    """
    scenario = cm.scenario
    cap = _row_cap(scenario, d)
    if cap == min(scenario.n_preparations, 2 ** scenario.n_measurements):
        # every sign matrix is a vertex, so the full cube is the polytope
        pairs = _cube_decomposition(cm.rational())
        return MembershipCertificate(INSIDE, d, [(DeterministicVertex(scenario, s), float(wt))
                                                 for s, wt in pairs])

    verts = vertex_array(scenario, d, vertex_cap)
    attempts = [("dantzig", 1e-11), ("bland", 1e-13)]
    for rule, tol in attempts:
        res = _solve_membership(verts, cm, rule, tol)
        n_vert = len(verts)
        if res.objective <= FEAS_TOL:
            lam = res.x[:n_vert]
            support = np.flatnonzero(lam > 0)
            pairs = [(verts[i], lam[i]) for i in support]
            if _verify_inside(cm, pairs):
                return MembershipCertificate(
                    INSIDE, d, [(DeterministicVertex(scenario, v), float(wt)) for v, wt in pairs],
                    distance=res.objective)
        else:
            y = res.duals[:scenario.n_entries]
            scale = np.abs(y).max()
            if scale > 0:
                coeffs = (y / scale).reshape(scenario.shape)
                candidates = [_rationalize(coeffs, scenario),
                              Witness.from_array(coeffs)]
                for w in candidates:
                    value, bound, ok = _separation(verts, w, cm)
                    if ok:
                        return MembershipCertificate(
                            OUTSIDE, d, separating_witness=w.with_bound(d, classical=bound),
                            achieved_value=value, classical_max=bound, distance=res.objective)
        log.info("membership certificate failed exact check with rule=%s; retrying", rule)
    raise SolverError(f"could not certify membership of the point at d={d}")


def classical_dimension(cm: CorrelationMatrix, vertex_cap: int = DEFAULT_VERTEX_CAP,
                        return_certificates: bool = False):
    """Smallest d whose polytope contains ``cm``.

    With ``return_certificates`` a pair ``(d, certificates)`` is returned, one
    certificate per tested dimension (all Outside except the last).
    """
    n, m = cm.scenario.shape
    certs = []
    for d in range(1, min(n, 2 ** m) + 1):
        cert = membership(cm, d, vertex_cap)
        certs.append(cert)
        if cert.inside:
            return (d, certs) if return_certificates else d
    raise SolverError("no dimension up to min(N, 2^m) contains the point")  # unreachable
