import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from conftest import brute_force_vertices
from dimwit.errors import ResourceGuardError, ValidationError
from dimwit.polytope import (INSIDE, OUTSIDE, classical_dimension, classical_max,
                             classical_max_partitions, enumerate_vertices, membership, stirling2,
                             vertex_array, vertex_count)
from dimwit.scenario import CorrelationMatrix, Scenario, zeros
from dimwit.witness import Witness, build_IN


def test_stirling_numbers():
    assert [stirling2(4, k) for k in range(5)] == [0, 1, 7, 6, 1]
    assert stirling2(0, 0) == 1


@pytest.mark.parametrize("n,m,d,count", [(3, 2, 2, 40), (4, 3, 2, 400), (4, 3, 3, 2416),
                                         (5, 4, 4, 524416), (2, 2, 2, 16), (3, 2, 1, 4)])
def test_vertex_count_values(n, m, d, count):
    assert vertex_count(Scenario(n, m), d) == count


@pytest.mark.parametrize("n,m,d", [(n, m, d) for n in range(1, 5) for m in range(1, 4)
                                   for d in range(1, 5)])
def test_enumeration_matches_brute_force(n, m, d):
    sc = Scenario(n, m)
    ours = vertex_array(sc, d)
    oracle = brute_force_vertices(n, m, d)
    assert len(ours) == len(oracle) == vertex_count(sc, d)
    assert {o.tobytes() for o in ours.astype(np.int64)} == {o.astype(np.int64).tobytes() for o in oracle}
    # lexicographic and duplicate free
    flat = [tuple(v.reshape(-1)) for v in ours]
    assert flat == sorted(flat, reverse=True) or flat == sorted(flat)


def test_enumerate_vertices_objects():
    verts = enumerate_vertices(Scenario(3, 2), 2)
    assert len(verts) == 40 and all(v.n_distinct_rows <= 2 for v in verts)


def test_vertex_cap_guard():
    with pytest.raises(ResourceGuardError):
        vertex_array(Scenario(4, 3), 3, vertex_cap=1000)
    with pytest.raises(ValidationError):
        vertex_count(Scenario(3, 2), 0)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_classical_max_two_routes(N):
    w = build_IN(N)
    for d in range(1, N + 1):
        # (5, 4) at d = 5 is the full cube of 2^20 sign matrices, just above the default cap
        enum = classical_max(w, d, vertex_cap=2 ** 20)
        assert enum == classical_max_partitions(w, d) == N * (N - 3) // 2 + 2 * d - 1


def test_classical_max_random_witnesses_two_routes():
    rng = np.random.default_rng(5)
    for _ in range(40):
        n, m = rng.integers(2, 5), rng.integers(1, 4)
        w = Witness.from_array(rng.integers(-3, 4, size=(n, m)))
        for d in range(1, n + 1):
            assert classical_max(w, d) == classical_max_partitions(w, d)


def test_classical_max_is_exact_fraction():
    w = Witness.from_array([[Fraction(1, 3), Fraction(-1, 7)], [Fraction(2, 3), 0]])
    assert classical_max(w, 1) == Fraction(1) + Fraction(1, 7)
    assert isinstance(classical_max(w, 2), Fraction)
    assert classical_max(w, 2) == Fraction(1, 3) + Fraction(1, 7) + Fraction(2, 3)


def _random_mixture(rng, n, m, d, k=None):
    verts = vertex_array(Scenario(n, m), d)
    k = k or int(rng.integers(1, 6))
    idx = rng.integers(0, len(verts), size=k)
    wts = rng.dirichlet(np.ones(k))
    # a float convex combination of +-1 entries can land one ulp outside [-1, 1]
    e = np.clip(np.tensordot(wts, verts[idx].astype(float), axes=1), -1, 1)
    return CorrelationMatrix(Scenario(n, m), e)


def _reconstruction_residual(cm, cert):
    recon = sum(wt * v.signs.astype(float) for v, wt in cert.convex_weights)
    return np.abs(recon - cm.e).max(), sum(wt for _, wt in cert.convex_weights)


def _scipy_member(cm, d):
    verts = vertex_array(cm.scenario, d).reshape(-1, cm.scenario.n_entries).astype(float)
    a = np.vstack([verts.T, np.ones(len(verts))])
    b = np.concatenate([cm.e.reshape(-1), [1]])
    return linprog(np.zeros(len(verts)), A_eq=a, b_eq=b, bounds=(0, None), method="highs").status == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_mixtures_are_inside(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 4))
    d = int(rng.integers(1, n))
    cm = _random_mixture(rng, n, m, d)
    cert = membership(cm, d)
    assert cert.verdict == INSIDE
    resid, total = _reconstruction_residual(cm, cert)
    assert resid <= 1e-9 and abs(total - 1) <= 1e-9
    assert all(v.n_distinct_rows <= d for v, _ in cert.convex_weights)


def test_verdicts_agree_with_scipy_oracle():
    rng = np.random.default_rng(2)
    for _ in range(40):
        n, m = int(rng.integers(3, 5)), int(rng.integers(2, 4))
        d = int(rng.integers(1, n))
        cm = CorrelationMatrix(Scenario(n, m), rng.uniform(-1, 1, size=(n, m)) * rng.uniform(0.2, 1))
        cert = membership(cm, d)
        assert cert.inside == _scipy_member(cm, d)
        if not cert.inside:
            _check_outside(cm, cert)


def _check_outside(cm, cert):
    """Re-verify an Outside certificate against the vertex list with exact arithmetic."""
    w = cert.separating_witness
    verts = vertex_array(cm.scenario, cert.d)
    coeffs = w.rational
    best = max(sum((coeffs * v.astype(object)).flat, Fraction(0)) for v in verts)
    value = sum((coeffs * cm.rational()).flat, Fraction(0))
    assert best == cert.classical_max
    assert value == cert.achieved_value
    assert value > best


def test_I3_qubit_matrix(i3_qubit_matrix):
    c1, c2, c3 = (membership(i3_qubit_matrix, d) for d in (1, 2, 3))
    assert c1.verdict == OUTSIDE and c2.verdict == OUTSIDE and c3.verdict == INSIDE
    _check_outside(i3_qubit_matrix, c2)
    assert c2.separating_witness.rational.tolist() == build_IN(3).rational.tolist()
    assert c2.classical_max == 3
    assert float(c2.achieved_value) == pytest.approx(1 + 2 * np.sqrt(2))
    assert classical_dimension(i3_qubit_matrix) == 3


def test_trivial_dimensions():
    assert classical_dimension(zeros(Scenario(3, 2))) == 1
    assert classical_dimension(CorrelationMatrix(Scenario(3, 2), np.ones((3, 2)))) == 1
    two_rows = CorrelationMatrix(Scenario(3, 2), [[1, 1], [-1, 1], [-1, 1]])
    d, certs = classical_dimension(two_rows, return_certificates=True)
    assert d == 2 and certs[0].verdict == OUTSIDE
    _check_outside(two_rows, certs[0])


def test_cube_shortcut_when_d_is_large():
    rng = np.random.default_rng(9)
    cm = CorrelationMatrix(Scenario(3, 2), rng.uniform(-1, 1, size=(3, 2)))
    cert = membership(cm, 3)
    resid, total = _reconstruction_residual(cm, cert)
    assert cert.inside and resid <= 1e-12


def test_membership_guard():
    with pytest.raises(ResourceGuardError):
        membership(zeros(Scenario(4, 3)), 2, vertex_cap=10)
