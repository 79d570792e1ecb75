"""The nine acceptance criteria, each at its stated tolerance.

A pass/fail line per criterion is printed in the terminal summary.
"""
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import record
from dimwit.cli import TABLE1, cmd_table1, main
from dimwit.errors import ValidationError
from dimwit.facets import FACET, classify_facets, enumerate_facets, is_facet
from dimwit.polytope import (INSIDE, OUTSIDE, classical_max, classical_max_partitions, membership,
                             vertex_array)
from dimwit.quantum import (J3_BOUND, bloch_correlations, j3_search, optimal_qubit_I3_strategy,
                            seesaw_maximize, verify_orthogonality_at_algebraic_max)
from dimwit.scenario import (CorrelationMatrix, ProbabilityTable, Scenario, load_data,
                             correlations_from_probabilities, probabilities_from_correlations)
from dimwit.witness import Witness, algebraic_max, bound_LN, build_IN


def _exact_max(w, verts):
    c = w.rational
    return max(sum((c * v.astype(object)).flat, Fraction(0)) for v in verts)


def test_1_table1():
    t0 = time.perf_counter()
    code, report, _ = cmd_table1({"seed": 0, "restarts": 50, "tol": 1e-10, "vertex_cap": 10 ** 6})
    elapsed = time.perf_counter() - t0
    cells = report.results["cells"]
    failed = [f"{c['witness']} {c['cell']}={c['computed']}" for c in cells if not c["pass"]]
    # independent check of the tolerances, not just the harness's own flag
    for c in cells:
        if c["tolerance"] is None:
            assert c["computed"] == c["expected"] and isinstance(c["computed"], int)
        else:
            assert abs(c["computed"] - c["expected"]) <= c["tolerance"]
    ok = code == 0 and not failed and len(cells) == 10 and elapsed < 120
    record(1, ok, f"10 cells, failures {failed or 'none'}, {elapsed:.1f} s")
    assert ok


def test_2_facet_recovery():
    t0 = time.perf_counter()
    fe = enumerate_facets(Scenario(3, 2), 2)
    classes = classify_facets(fe.facets)
    elapsed = time.perf_counter() - t0
    labels = sorted(c.label for c in classes)
    i3 = [c for c in classes if c.label == "I_3"]
    positivity = [c for c in classes if c.label == "positivity"]
    ok = (len(classes) == 2 and labels == ["I_3", "positivity"] and i3[0].bound == 3
          and all(isinstance(f.bound, Fraction) for f in fe) and elapsed < 10)
    # every facet is re-checked as a valid inequality with the vertex list
    verts = vertex_array(Scenario(3, 2), 2)
    ok = ok and all(_exact_max(f.witness, verts) == f.bound for f in fe)
    ok = ok and positivity[0].bound == 1
    record(2, ok, f"{len(fe)} facets in {len(classes)} classes {labels}, {elapsed:.2f} s")
    assert ok


def test_3_tightness_range():
    statuses = {}
    for n in (3, 4, 5):
        check = is_facet(build_IN(n), n - 1, bound_LN(n, n - 1))
        statuses[n] = check.status
    ok = all(s == FACET for s in statuses.values())
    record(3, ok, f"is_facet(I_N, L_(N-1), d=N-1): {statuses}")
    assert ok


def test_4_classical_bound_formula():
    mismatches = []
    for n in range(3, 6):
        w = build_IN(n)
        for d in range(2, n + 1):
            expected = n * (n - 3) // 2 + 2 * d - 1
            # (5, 4) at d = 5 has 2^20 vertices; raise the default cap for this exhaustive check
            enum = classical_max(w, d, vertex_cap=2 ** 20)
            part = classical_max_partitions(w, d)
            if not (enum == part == expected):
                mismatches.append((n, d, enum, part, expected))
    record(4, not mismatches, f"2 <= d <= N <= 5 by vertex enumeration and by partitions, "
                              f"mismatches {mismatches or 'none'}")
    assert not mismatches


def test_5_membership_soundness(i3_qubit_matrix):
    rng = np.random.default_rng(20240601)
    worst = 0.0
    verdicts = []
    for _ in range(200):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        d = int(rng.integers(1, n))
        verts = vertex_array(Scenario(n, m), d)
        k = int(rng.integers(1, 8))
        wts = rng.dirichlet(np.ones(k))
        e = np.clip(np.tensordot(wts, verts[rng.integers(0, len(verts), size=k)].astype(float), axes=1), -1, 1)
        cm = CorrelationMatrix(Scenario(n, m), e)
        cert = membership(cm, d)
        verdicts.append(cert.verdict)
        if cert.inside:
            recon = sum(wt * v.signs.astype(float) for v, wt in cert.convex_weights)
            worst = max(worst, float(np.abs(recon - e).max()),
                        abs(sum(wt for _, wt in cert.convex_weights) - 1))
    mixtures_ok = all(v == INSIDE for v in verdicts) and worst <= 1e-9

    c2 = membership(i3_qubit_matrix, 2)
    c3 = membership(i3_qubit_matrix, 3)
    exact_ok = False
    if c2.verdict == OUTSIDE:
        verts = vertex_array(Scenario(3, 2), 2)
        bound = _exact_max(c2.separating_witness, verts)
        value = sum((c2.separating_witness.rational * i3_qubit_matrix.rational()).flat, Fraction(0))
        exact_ok = bound == c2.classical_max and value > bound
    ok = mixtures_ok and exact_ok and c3.verdict == INSIDE
    record(5, ok, f"200 mixtures Inside={verdicts.count(INSIDE)}, max residual {worst:.1e}; "
                  f"I_3 qubit d=2 {c2.verdict} (exact check {exact_ok}), d=3 {c3.verdict}")
    assert ok


def test_6_seesaw_properties():
    problems = []
    values = {}
    for n in (3, 4):
        w = build_IN(n)
        top = float(algebraic_max(w))
        prev = None
        for d in (2, 3, 4):
            warm = [prev.strategy.embed(d)] if prev is not None else []
            res = seesaw_maximize(w, d, restarts=50, seed=0, warm_starts=warm)
            for entry in res.trace:
                steps = np.diff(entry.values)
                if len(steps) and steps.min() < -1e-12:
                    problems.append(f"I_{n} d={d} restart {entry.index} decreased by {-steps.min():.1e}")
                if max(entry.values) > top + 1e-9:
                    problems.append(f"I_{n} d={d} above the algebraic maximum")
            if res.value > top + 1e-9:
                problems.append(f"I_{n} d={d} final value above the algebraic maximum")
            if prev is not None and res.value < prev.value - 1e-12:
                problems.append(f"I_{n}: Q_{d} < Q_{d - 1}")
            if res.failures:
                problems.append(f"I_{n} d={d}: {len(res.failures)} failed restarts")
            values[(n, d)] = round(res.value, 6)
            prev = res
    record(6, not problems, f"values {values}; problems {problems or 'none'}")
    assert not problems


def test_7_j3_probe():
    t0 = time.perf_counter()
    res = j3_search(restarts=100, seed=0)
    elapsed = time.perf_counter() - t0
    never_exceeds = max(res.restart_values) <= J3_BOUND + 1e-6 and not res.exceeded
    found = abs(res.max_found - J3_BOUND) <= 1e-6
    ok = never_exceeds and found
    record(7, ok, f"max J_3 = {res.max_found:.12f}, 3 pi/2 = {J3_BOUND:.12f}, "
                  f"exceeded: {res.exceeded}, {elapsed:.1f} s")
    # an exceedance would contradict the conjectured qubit bound: fail loudly
    assert never_exceeds, f"J_3 search exceeded 3 pi/2: {res.max_found!r}"
    assert found


def test_8_orthogonality_at_algebraic_max():
    details = {}
    ok = True
    for n in (3, 4):
        w = build_IN(n)
        res = seesaw_maximize(w, n, restarts=50, seed=0)
        target = bound_LN(n, n)
        reached = abs(res.value - target) <= 1e-6
        overlaps = [abs(np.trace(a @ b)) for i, a in enumerate(res.strategy.states)
                    for b in res.strategy.states[i + 1:]]
        orth = reached and verify_orthogonality_at_algebraic_max(w, res.strategy, tol=1e-5,
                                                                 value_tol=1e-6)
        ok &= reached and orth and max(overlaps) <= 1e-5
        details[n] = f"value {res.value:.9f} vs L_{n} = {target}, max overlap {max(overlaps):.1e}"
    record(8, ok, "; ".join(f"N={k}: {v}" for k, v in details.items()))
    assert ok


MALFORMED = [
    None, 3, "E", [],
    {"E": [[0, 0]]},
    {"scenario": {"N": 1, "m": 2}},
    {"scenario": {"N": "3", "m": 2}, "E": [[0, 0]] * 3},
    {"scenario": {"N": 0, "m": 2}, "E": []},
    {"scenario": {"N": 2, "m": 2}, "E": [[0, 0], [0]]},
    {"scenario": {"N": 2, "m": 2}, "E": [[0, 0], [0, 1.0000001]]},
    {"scenario": {"N": 2, "m": 2}, "E": [[0, 0], [0, None]]},
    {"scenario": {"N": 2, "m": 2}, "E": [[0, 0], [0, "nan"]]},
    {"scenario": {"N": 2, "m": 2}, "E": [[0, 0, 0], [0, 0, 0]]},
    {"scenario": {"N": 1, "m": 1}, "P": [[[0.5, 0.4]]]},
    {"scenario": {"N": 1, "m": 1}, "P": [[[1.5, -0.5]]]},
    {"scenario": {"N": 1, "m": 1}, "P": [[[0.5, 0.5, 0.0]]]},
    {"scenario": {"N": 1, "m": 1}, "P": [[0.5, 0.5]]},
    {"scenario": {"N": 1, "m": 1}, "E": [[0]], "P": [[[0.5, 0.5]]]},
    {"scenario": {"N": 1, "m": 1, "outcomes": 3}, "E": [[0]]},
]


def test_9_round_trip_and_validation(tmp_path):
    rng = np.random.default_rng(7)
    failures = 0
    for i in range(1000):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        plus = rng.random((n, m))
        # include exact endpoints and values that are not dyadic
        plus[rng.random((n, m)) < 0.1] = 0.0
        plus[rng.random((n, m)) < 0.1] = 1.0
        pt = ProbabilityTable(Scenario(n, m), np.stack([plus, 1 - plus], axis=-1))
        cm = correlations_from_probabilities(pt)
        back = probabilities_from_correlations(cm)
        if back != pt or not np.array_equal(back.p[..., 0], plus):
            failures += 1
        if correlations_from_probabilities(back) != cm:
            failures += 1
    structured = 0
    wrong = []
    for obj in MALFORMED:
        try:
            load_data(obj)
        except ValidationError:
            structured += 1
        except Exception as exc:  # anything else is a crash
            wrong.append(f"{obj!r}: {type(exc).__name__}")
        else:
            wrong.append(f"{obj!r}: accepted")
    cli_codes = []
    for i, obj in enumerate(MALFORMED):
        p = tmp_path / f"bad{i}.json"
        p.write_text(json.dumps(obj))
        cli_codes.append(main(["member", str(p), "--d", "1"]))
    (tmp_path / "trunc.json").write_text('{"scenario": {"N": 1')
    cli_codes.append(main(["member", str(tmp_path / "trunc.json"), "--d", "1"]))
    ok = failures == 0 and not wrong and all(c == 1 for c in cli_codes)
    record(9, ok, f"1000 tables, {failures} round-trip failures; {structured}/{len(MALFORMED)} "
                  f"malformed inputs raised ValidationError; CLI exit codes {sorted(set(cli_codes))}")
    assert ok, wrong
