import math

import numpy as np
import pytest

from dimwit.errors import ValidationError
from dimwit.quantum import (BlochStrategy, J3_BOUND, PreconditionError, QuantumStrategy,
                            bloch_correlations, correlations_from_quantum, j3_bloch, j3_search,
                            optimal_qubit_I3_strategy, seesaw_maximize,
                            verify_orthogonality_at_algebraic_max)
from dimwit.witness import algebraic_max, build_IN, evaluate, evaluate_J3

SQRT2 = math.sqrt(2)


def test_qubit_I3_strategy_values():
    bs = optimal_qubit_I3_strategy()
    cm = bloch_correlations(bs)
    assert evaluate(build_IN(3), cm) == pytest.approx(1 + 2 * SQRT2, abs=1e-12)
    assert j3_bloch(bs) == pytest.approx(J3_BOUND, abs=1e-12)
    # the lifted density-matrix route agrees with the dot products
    np.testing.assert_allclose(correlations_from_quantum(bs.lift()).e, cm.e, atol=1e-15)


def test_j3_of_aligned_vectors():
    z = np.array([0.0, 0.0, 1.0])
    bs = BlochStrategy(np.array([z, z, z]), np.array([z, z]))
    assert j3_bloch(bs) == pytest.approx(math.pi / 2)
    assert evaluate_J3(bloch_correlations(bs)) == pytest.approx(math.pi / 2)


def test_strategy_validation():
    with pytest.raises(ValidationError):
        QuantumStrategy(2, (np.eye(2),), (np.diag([1, -1]),))  # trace 2
    with pytest.raises(ValidationError):
        QuantumStrategy(2, (np.diag([1.5, -0.5]),), (np.diag([1, -1]),))  # not PSD
    with pytest.raises(ValidationError):
        QuantumStrategy(2, (np.diag([1, 0]),), (np.diag([1, 0.5]),))  # not an involution
    with pytest.raises(ValidationError):
        QuantumStrategy(2, (np.diag([1, 0]),), (np.eye(3),))
    with pytest.raises(ValidationError):
        BlochStrategy([[0, 0, 2]], [[0, 0, 1]])
    with pytest.raises(ValidationError):
        BlochStrategy([[0, 0, 1]], [[0, 0, 0.5]])


def test_json_round_trips():
    bs = optimal_qubit_I3_strategy()
    assert np.array_equal(BlochStrategy.from_json(bs.to_json()).state_vectors, bs.state_vectors)
    qs = bs.lift()
    again = QuantumStrategy.from_json(qs.to_json())
    np.testing.assert_array_equal(correlations_from_quantum(again).e, correlations_from_quantum(qs).e)
    with pytest.raises(ValidationError):
        QuantumStrategy.from_json({"dimension": 2, "states": [[1, 0]], "observables": []})
    with pytest.raises(ValidationError):
        BlochStrategy.from_json({"states": [[0, 0, 1]]})


def test_embed_preserves_correlations():
    qs = optimal_qubit_I3_strategy().lift()
    big = qs.embed(4)
    np.testing.assert_allclose(correlations_from_quantum(big).e, correlations_from_quantum(qs).e,
                               atol=1e-15)
    with pytest.raises(ValidationError):
        big.embed(2)


def test_seesaw_I3_qubit():
    res = seesaw_maximize(build_IN(3), 2, restarts=20, seed=0)
    assert res.value == pytest.approx(1 + 2 * SQRT2, abs=1e-6)
    assert not res.failures
    assert evaluate(build_IN(3), correlations_from_quantum(res.strategy)) == pytest.approx(res.value)


def test_seesaw_is_deterministic_in_seed():
    a = seesaw_maximize(build_IN(3), 2, restarts=5, seed=3)
    b = seesaw_maximize(build_IN(3), 2, restarts=5, seed=3)
    assert a.value == b.value and [r.values for r in a.trace] == [r.values for r in b.trace]


def test_seesaw_traces_are_monotone_and_bounded():
    w = build_IN(4)
    res = seesaw_maximize(w, 2, restarts=10, seed=1)
    for entry in res.trace:
        assert np.all(np.diff(entry.values) >= -1e-12)
        assert max(entry.values) <= float(algebraic_max(w)) + 1e-9


def test_seesaw_d1_reaches_classical_one_dimensional_bound():
    # a one-dimensional quantum system is a deterministic strategy with one row pattern
    res = seesaw_maximize(build_IN(3), 1, restarts=5)
    assert res.value == pytest.approx(1.0)


def test_seesaw_warm_start():
    start = optimal_qubit_I3_strategy().lift()
    res = seesaw_maximize(build_IN(3), 2, restarts=1, warm_starts=[start])
    assert res.value >= 1 + 2 * SQRT2 - 1e-12
    with pytest.raises(ValidationError):
        seesaw_maximize(build_IN(3), 3, restarts=1, warm_starts=[start])


def test_seesaw_argument_checks():
    with pytest.raises(ValidationError):
        seesaw_maximize(build_IN(3), 2, restarts=0)
    with pytest.raises(ValidationError):
        seesaw_maximize(build_IN(3), 0)
    with pytest.raises(ValidationError):
        seesaw_maximize(build_IN(3), 2, tol=0)


def test_orthogonality_precondition():
    w = build_IN(3)
    with pytest.raises(PreconditionError):
        verify_orthogonality_at_algebraic_max(w, optimal_qubit_I3_strategy().lift())
    res = seesaw_maximize(w, 3, restarts=10)
    assert verify_orthogonality_at_algebraic_max(w, res.strategy, tol=1e-5)


def test_j3_search_small():
    res = j3_search(restarts=5, seed=0)
    assert res.max_found <= J3_BOUND + 1e-6 and not res.exceeded
    assert len(res.restart_values) == 5
    assert j3_bloch(res.strategy) == res.max_found


def test_j3_search_from_known_optimum():
    res = j3_search(restarts=1, initial=[optimal_qubit_I3_strategy()])
    assert res.max_found == pytest.approx(J3_BOUND, abs=1e-12)
