"""Fixed-dimension quantum strategies and see-saw maximisation of linear witnesses.

A strategy is N states rho_x and m observables O_y with spectrum in {+1, -1};
the correlators are E_xy = tr(rho_x O_y). For a linear witness the optimum over
states for fixed observables is a pure top eigenvector of sum_y w_xy O_y, and
the optimum over observables for fixed states is the spectral sign of
sum_x w_xy rho_x. Alternating the two exact half-steps never decreases the value.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimwitError, SolverError, ValidationError
from .linalg import eigh_jacobi, matrix_sign, top_eigenvector
from .scenario import CorrelationMatrix, Scenario
from .witness import Witness, algebraic_max, evaluate_J3

log = logging.getLogger(__name__)

STATE_TOL = 1e-10
OBSERVABLE_TOL = 1e-8
BLOCH_TOL = 1e-12

PAULI = np.array([[[0, 1], [1, 0]],
                  [[0, -1j], [1j, 0]],
                  [[1, 0], [0, -1]]], dtype=complex)


class PreconditionError(DimwitError):
    """A check was requested away from the regime where it is meaningful."""


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    dimension: int
    states: tuple
    observables: tuple

    def __post_init__(self):
        d = self.dimension
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise ValidationError(f"dimension must be a positive integer, got {d!r}")
        states = tuple(np.array(r, dtype=complex) for r in self.states)
        obs = tuple(np.array(o, dtype=complex) for o in self.observables)
        if not states or not obs:
            raise ValidationError("a strategy needs at least one state and one observable")
        for i, rho in enumerate(states):
            if rho.shape != (d, d):
                raise ValidationError(f"state {i + 1} has shape {rho.shape}, expected {(d, d)}", ("state", i + 1))
            if np.abs(rho - rho.conj().T).max() > STATE_TOL:
                raise ValidationError(f"state {i + 1} is not Hermitian", ("state", i + 1))
            if abs(np.trace(rho) - 1) > STATE_TOL:
                raise ValidationError(f"state {i + 1} does not have unit trace", ("state", i + 1))
            if eigh_jacobi(rho)[0][0] < -STATE_TOL:
                raise ValidationError(f"state {i + 1} is not positive semidefinite", ("state", i + 1))
        for j, o in enumerate(obs):
            if o.shape != (d, d):
                raise ValidationError(f"observable {j + 1} has shape {o.shape}, expected {(d, d)}",
                                      ("observable", j + 1))
            if np.abs(o - o.conj().T).max() > STATE_TOL:
                raise ValidationError(f"observable {j + 1} is not Hermitian", ("observable", j + 1))
            if np.abs(o @ o - np.eye(d)).max() > OBSERVABLE_TOL:
                raise ValidationError(f"observable {j + 1} does not square to the identity",
                                      ("observable", j + 1))
        for arr in states + obs:
            arr.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "observables", obs)

    @property
    def scenario(self) -> Scenario:
        return Scenario(len(self.states), len(self.observables))

    def embed(self, dimension: int) -> QuantumStrategy:
        """Same correlations in a larger space: states padded with zeros, observables with +1."""
        d = self.dimension
        if dimension < d:
            raise ValidationError("can only embed into a larger dimension")
        pad = dimension - d
        states = [np.pad(r, ((0, pad), (0, pad))) for r in self.states]
        obs = []
        for o in self.observables:
            big = np.eye(dimension, dtype=complex)
            big[:d, :d] = o
            obs.append(big)
        return QuantumStrategy(dimension, tuple(states), tuple(obs))

    def to_json(self) -> dict:
        def enc(mat):
            return [[[float(z.real), float(z.imag)] for z in row] for row in mat]
        return {"kind": "quantum", "dimension": self.dimension,
                "states": [enc(r) for r in self.states],
                "observables": [enc(o) for o in self.observables]}

    @classmethod
    def from_json(cls, obj: dict) -> QuantumStrategy:
        def dec(mat, what):
            arr = np.asarray(mat, dtype=float)
            if arr.ndim != 3 or arr.shape[-1] != 2:
                raise ValidationError(f"{what} must be a matrix of [re, im] pairs", what)
            return arr[..., 0] + 1j * arr[..., 1]
        try:
            return cls(int(obj["dimension"]),
                       tuple(dec(r, f"state {i + 1}") for i, r in enumerate(obj["states"])),
                       tuple(dec(o, f"observable {j + 1}") for j, o in enumerate(obj["observables"])))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed quantum strategy: {exc}") from exc


@dataclass(frozen=True, eq=False)
class BlochStrategy:
    """Qubit strategy: rho_x = (1 + r_x . sigma)/2 and O_y = s_y . sigma."""

    state_vectors: np.ndarray
    measurement_vectors: np.ndarray

    def __post_init__(self):
        r = np.array(self.state_vectors, dtype=float).reshape(-1, 3)
        s = np.array(self.measurement_vectors, dtype=float).reshape(-1, 3)
        if len(r) == 0 or len(s) == 0:
            raise ValidationError("need at least one state vector and one measurement vector")
        if np.any(np.linalg.norm(r, axis=1) > 1 + BLOCH_TOL):
            raise ValidationError("state Bloch vectors must have norm at most 1")
        if np.any(np.abs(np.linalg.norm(s, axis=1) - 1) > BLOCH_TOL):
            raise ValidationError("measurement Bloch vectors must have unit norm")
        r.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "state_vectors", r)
        object.__setattr__(self, "measurement_vectors", s)

    def lift(self) -> QuantumStrategy:
        eye = np.eye(2, dtype=complex)
        states = tuple((eye + np.tensordot(r, PAULI, axes=1)) / 2 for r in self.state_vectors)
        obs = tuple(np.tensordot(s, PAULI, axes=1) for s in self.measurement_vectors)
        return QuantumStrategy(2, states, obs)

    def to_json(self) -> dict:
        return {"kind": "bloch", "states": self.state_vectors.tolist(),
                "measurements": self.measurement_vectors.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> BlochStrategy:
        try:
            return cls(obj["states"], obj["measurements"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed Bloch strategy: {exc}") from exc


def correlations_from_quantum(qs: QuantumStrategy) -> CorrelationMatrix:
    e = np.array([[np.trace(rho @ o) for o in qs.observables] for rho in qs.states])
    if np.abs(e.imag).max() > 1e-10:
        raise ValidationError("tr(rho O) has a non-negligible imaginary part")
    return CorrelationMatrix(qs.scenario, np.clip(e.real, -1.0, 1.0))


def bloch_correlations(bs: BlochStrategy) -> CorrelationMatrix:
    e = bs.state_vectors @ bs.measurement_vectors.T
    return CorrelationMatrix(Scenario(*e.shape), np.clip(e, -1.0, 1.0))


def optimal_qubit_I3_strategy() -> BlochStrategy:
    """Qubit strategy reaching 1 + 2 sqrt 2 on I_3, built on orthonormal r_1, r_2.

    The third state is taken as r_3 = -(r_1 + r_2)/sqrt 2, anti-parallel to s_1.
    """
    r1 = np.array([1.0, 0.0, 0.0])
    r2 = np.array([0.0, 0.0, 1.0])
    s1 = (r1 + r2) / math.sqrt(2)
    s2 = (r1 - r2) / math.sqrt(2)
    r3 = -(r1 + r2) / math.sqrt(2)
    return BlochStrategy(np.array([r1, r2, r3]), np.array([s1, s2]))


# -- see-saw ------------------------------------------------------------------------------------

@dataclass
class RestartLog:
    index: int
    values: list = field(default_factory=list)
    converged: bool = False
    error: str | None = None


@dataclass
class SeesawResult:
    """Best value over restarts. The value is a lower bound on the quantum maximum."""

    value: float
    strategy: QuantumStrategy
    trace: list
    best_restart: int

    @property
    def failures(self) -> list:
        return [r for r in self.trace if r.error is not None]


def _random_state_vector(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def _random_observable(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return matrix_sign(x + x.conj().T)


def _value(w, vecs, obs):
    return float(sum(w[x, y] * np.vdot(vecs[x], obs[y] @ vecs[x]).real
                     for x in range(w.shape[0]) for y in range(w.shape[1])))


def _state_step(w, obs):
    vecs = []
    for x in range(w.shape[0]):
        g = sum(w[x, y] * obs[y] for y in range(w.shape[1]))
        vecs.append(top_eigenvector(g)[1])
    return vecs


def _observable_step(w, vecs):
    d = len(vecs[0])
    obs = []
    for y in range(w.shape[1]):
        h = sum(w[x, y] * np.outer(vecs[x], vecs[x].conj()) for x in range(w.shape[0]))
        if not np.any(h):
            obs.append(np.eye(d, dtype=complex))
        else:
            obs.append(matrix_sign(h))
    return obs


def _one_restart(w, d, rng_or_start, tol, max_iter, log_entry):
    if isinstance(rng_or_start, QuantumStrategy):
        start = rng_or_start
        obs = [np.array(o) for o in start.observables]
        vecs = [eigh_jacobi(r)[1][:, -1] for r in start.states]
        value = _value(w, vecs, obs)
        log_entry.values.append(value)
    else:
        rng = rng_or_start
        vecs = [_random_state_vector(rng, d) for _ in range(w.shape[0])]
        obs = [_random_observable(rng, d) for _ in range(w.shape[1])]
        value = _value(w, vecs, obs)
        log_entry.values.append(value)
    for _ in range(max_iter):
        vecs = _state_step(w, obs)
        mid = _value(w, vecs, obs)
        log_entry.values.append(mid)
        obs = _observable_step(w, vecs)
        new = _value(w, vecs, obs)
        log_entry.values.append(new)
        if new - value < tol:
            log_entry.converged = True
            value = new
            break
        value = new
    states = tuple(np.outer(v, v.conj()) for v in vecs)
    return value, QuantumStrategy(d, states, tuple(obs))


def seesaw_maximize(w: Witness, d: int, restarts: int = 50, tol: float = 1e-10, seed: int = 0,
                    max_iter: int = 1000, warm_starts=()) -> SeesawResult:
    """Maximise ``w`` over d-dimensional quantum strategies by alternating exact half-steps.

    Each restart draws its own generator from ``(seed, restart_index)``, so the
    result depends only on ``(seed, restarts)``. ``warm_starts`` are extra
    starting strategies run before the random restarts. Restarts whose
    eigensolver fails are logged and skipped.
    """
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValidationError(f"dimension must be a positive integer, got {d!r}")
    coeffs = w.array
    starts = list(warm_starts) + [np.random.default_rng([seed, i]) for i in range(restarts)]
    trace, best = [], None
    for i, start in enumerate(starts):
        if isinstance(start, QuantumStrategy):
            if start.dimension != d or start.scenario.shape != w.scenario.shape:
                raise ValidationError("warm start does not match the witness scenario and dimension")
        entry = RestartLog(i)
        trace.append(entry)
        try:
            value, strat = _one_restart(coeffs, d, start, tol, max_iter, entry)
        except SolverError as exc:
            entry.error = str(exc)
            log.warning("see-saw restart %d failed: %s", i, exc)
            continue
        if best is None or value > best[0]:
            best = (value, strat, i)
    if best is None:
        raise SolverError("every see-saw restart failed")
    value, strat, idx = best
    exact_value = float(np.sum(coeffs * correlations_from_quantum(strat).e))
    return SeesawResult(exact_value, strat, trace, idx)


def verify_orthogonality_at_algebraic_max(w: Witness, strategy: QuantumStrategy, tol: float = 1e-6,
                                          value_tol: float | None = None) -> bool:
    """True iff all pairs of states have overlap tr(rho_s rho_t) at most ``tol``.

    Only meaningful when the strategy reaches the algebraic maximum of ``w``
    (within ``value_tol``, default ``tol``); otherwise PreconditionError.
    """
    value_tol = tol if value_tol is None else value_tol
    value = float(np.sum(w.array * correlations_from_quantum(strategy).e))
    top = float(algebraic_max(w))
    if value < top - value_tol:
        raise PreconditionError(f"strategy value {value:.9f} is below the algebraic maximum {top}")
    states = strategy.states
    for s in range(len(states)):
        for t in range(s + 1, len(states)):
            if abs(np.trace(states[s] @ states[t])) > tol:
                return False
    return True


# -- J_3 search ---------------------------------------------------------------------------------

@dataclass
class J3Result:
    max_found: float
    strategy: BlochStrategy
    restart_values: list
    exceeded: bool


J3_BOUND = 3 * math.pi / 2


def _rotation(axis: int, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    i, j = [(1, 2), (2, 0), (0, 1)][axis]
    r = np.eye(3)
    r[i, i] = r[j, j] = c
    r[i, j], r[j, i] = -s, s
    return r


def _asin_dots(r, s):
    """arcsin(r_x . s_y) for unit vectors, through the angle between them.

    atan2 of the cross and dot products keeps full precision near +-1, where
    arcsin of a rounded dot product loses half the digits.
    """
    dots = r @ s.T
    cross = np.linalg.norm(np.cross(r[:, None, :], s[None, :, :]), axis=-1)
    return np.pi / 2 - np.arctan2(cross, dots)


def _j3_of(vectors):
    a = _asin_dots(vectors[:3], vectors[3:])
    return abs(a[0, 0] + a[0, 1] + a[1, 0] - a[1, 1] - a[2, 0])


def j3_bloch(bs: BlochStrategy) -> float:
    """J_3 of a qubit strategy with pure states, evaluated from the Bloch vectors.

    Falls back to the correlator formula when some state is mixed.
    """
    r, s = bs.state_vectors, bs.measurement_vectors
    if r.shape != (3, 3) or s.shape != (2, 3):
        raise ValidationError("J_3 needs three states and two measurements")
    if np.any(np.abs(np.linalg.norm(r, axis=1) - 1) > BLOCH_TOL):
        return evaluate_J3(bloch_correlations(bs))
    return float(_j3_of(np.vstack([r, s])))


def _rotation_descent(vectors, step=math.pi / 4, min_step=1e-10):
    """Coordinate-wise rotations of each Bloch vector about the three axes, accepting improvements."""
    vectors = vectors.copy()
    best = _j3_of(vectors)
    while step > min_step:
        improved = False
        for k in range(len(vectors)):
            for axis in range(3):
                for sign in (1.0, -1.0):
                    trial = vectors.copy()
                    trial[k] = _rotation(axis, sign * step) @ trial[k]
                    val = _j3_of(trial)
                    if val > best:
                        vectors, best, improved = trial, val, True
        if not improved:
            step /= 2
    return best, vectors


def _random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def j3_search(restarts: int = 100, seed: int = 0, initial=()) -> J3Result:
    """Search qubit strategies for the largest J_3 value.

    Starts from each strategy in ``initial`` and from ``restarts`` random pure
    states and measurement directions. A value above 3 pi / 2 + 1e-6 would
    contradict the conjectured qubit bound and is flagged in ``exceeded`` and
    logged as an error.
    """
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    starts = []
    for bs in initial:
        starts.append(np.vstack([bs.state_vectors, bs.measurement_vectors]))
    for i in range(restarts):
        starts.append(_random_unit(np.random.default_rng([seed, i]), 5))
    values, best = [], None
    for vecs in starts:
        val, vecs = _rotation_descent(vecs)
        values.append(float(val))
        if best is None or val > best[0]:
            best = (float(val), vecs)
    value, vecs = best
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    strategy = BlochStrategy(vecs[:3], vecs[3:])
    value = j3_bloch(strategy)
    exceeded = value > J3_BOUND + 1e-6
    if exceeded:
        log.error("J_3 search found %.12f > 3 pi / 2: the conjectured qubit bound is violated", value)
    return J3Result(value, strategy, values, exceeded)
