"""Scenarios, probability tables, correlation matrices and classical strategies.

Outcomes are the two values +1 and -1 everywhere. Along the outcome axis of a
probability table index 0 holds b=+1 and index 1 holds b=-1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError

NORMALIZATION_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Scenario:
    n_preparations: int
    n_measurements: int
    n_outcomes: int = 2

    def __post_init__(self):
        for name in ("n_preparations", "n_measurements"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if self.n_outcomes != 2:
            raise ValidationError("only binary outcomes are supported (n_outcomes=2)")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_preparations, self.n_measurements)

    @property
    def n_entries(self) -> int:
        return self.n_preparations * self.n_measurements

    def to_json(self) -> dict:
        return {"N": self.n_preparations, "m": self.n_measurements}

    @classmethod
    def from_json(cls, obj) -> Scenario:
        if not isinstance(obj, dict) or "N" not in obj or "m" not in obj:
            raise ValidationError('scenario must be an object with keys "N" and "m"', "scenario")
        extra = sorted(set(obj) - {"N", "m"})
        if extra:
            # outcomes are always binary, so anything else is a malformed claim
            raise ValidationError(f"unknown scenario keys {extra}", "scenario")
        return cls(obj["N"], obj["m"])


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Expectation values E[x, y] of the +-1 outcome; row x is the vector for preparation x.

    ``exact`` optionally carries the entries as Fractions. It is filled in when the
    matrix is derived from a probability table so that the conversion back is
    lossless; ``e`` is always the correctly rounded float image of it.
    """

    scenario: Scenario
    e: np.ndarray
    exact: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.exact is not None:
            exact = np.array(self.exact, dtype=object)
            if exact.shape != self.scenario.shape:
                raise ValidationError(f"correlation matrix has shape {exact.shape}, "
                                      f"scenario requires {self.scenario.shape}")
            e = np.vectorize(float, otypes=[float])(exact)
        else:
            e = np.array(self.e, dtype=float)
        if e.shape != self.scenario.shape:
            raise ValidationError(f"correlation matrix has shape {e.shape}, "
                                  f"scenario requires {self.scenario.shape}")
        bad = np.argwhere(~np.isfinite(e) | (np.abs(e) > 1.0))
        if len(bad):
            x, y = bad[0]
            raise ValidationError(f"E[{x + 1},{y + 1}] = {e[x, y]!r} is outside [-1, 1]",
                                  (int(x) + 1, int(y) + 1))
        if self.exact is not None:
            bad = [(x, y) for (x, y), v in np.ndenumerate(exact) if abs(v) > 1]
            if bad:
                x, y = bad[0]
                raise ValidationError(f"E[{x + 1},{y + 1}] is outside [-1, 1]", (x + 1, y + 1))
            object.__setattr__(self, "exact", _frozen(exact))
        object.__setattr__(self, "e", _frozen(e))

    @classmethod
    def from_array(cls, e) -> CorrelationMatrix:
        e = np.asarray(e, dtype=float)
        if e.ndim != 2:
            raise ValidationError(f"correlation matrix must be 2-dimensional, got shape {e.shape}")
        return cls(Scenario(*e.shape), e)

    def rational(self) -> np.ndarray:
        """Entries as an object array of Fractions (exact image of the stored data)."""
        if self.exact is not None:
            return self.exact
        return np.vectorize(Fraction, otypes=[object])(self.e)

    def __eq__(self, other):
        if not isinstance(other, CorrelationMatrix):
            return NotImplemented
        return self.scenario == other.scenario and np.array_equal(self.e, other.e)

    def __hash__(self):
        return hash((self.scenario, self.e.tobytes()))

    def to_json(self) -> dict:
        return {"scenario": self.scenario.to_json(), "E": self.e.tolist()}


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """Conditional distribution p[x, y, b] with b index 0 for +1 and 1 for -1."""

    scenario: Scenario
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        n, m = self.scenario.shape
        if p.shape != (n, m, 2):
            raise ValidationError(f"probability table has shape {p.shape}, expected {(n, m, 2)}")
        bad = np.argwhere(~np.isfinite(p) | (p < 0.0) | (p > 1.0))
        if len(bad):
            x, y, b = bad[0]
            raise ValidationError(f"P(b={'+1' if b == 0 else '-1'}|x={x + 1},y={y + 1}) = "
                                  f"{p[x, y, b]!r} is outside [0, 1]", (int(x) + 1, int(y) + 1))
        total = p.sum(axis=2)
        bad = np.argwhere(np.abs(total - 1.0) > NORMALIZATION_TOL)
        if len(bad):
            x, y = bad[0]
            raise ValidationError(f"P(.|x={x + 1},y={y + 1}) sums to {total[x, y]!r}, not 1",
                                  (int(x) + 1, int(y) + 1))
        # canonical content is p(+1); p(-1) is its complement, rounded once
        p[..., 1] = 1.0 - p[..., 0]
        object.__setattr__(self, "p", _frozen(p))

    def __eq__(self, other):
        if not isinstance(other, ProbabilityTable):
            return NotImplemented
        return self.scenario == other.scenario and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash((self.scenario, self.p.tobytes()))

    def to_json(self) -> dict:
        return {"scenario": self.scenario.to_json(), "P": self.p.tolist()}


@dataclass(frozen=True)
class StrategyComponent:
    """One deterministic classical strategy.

    ``encoding[x]`` is the message (1..d) sent for preparation x and
    ``decoding[message - 1][y]`` the +-1 outcome produced for measurement y.
    """

    encoding: tuple[int, ...]
    decoding: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ClassicalStrategy:
    scenario: Scenario
    dimension: int
    weights: tuple[float, ...]
    components: tuple[StrategyComponent, ...] = field(default=())

    def __post_init__(self):
        n, m = self.scenario.shape
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise ValidationError(f"dimension must be a positive integer, got {self.dimension!r}")
        comps = tuple(c if isinstance(c, StrategyComponent)
                      else StrategyComponent(tuple(c[0]), tuple(map(tuple, c[1])))
                      for c in self.components)
        weights = tuple(float(w) for w in self.weights)
        if len(comps) == 0 or len(weights) != len(comps):
            raise ValidationError("need one weight per component and at least one component")
        if any(not np.isfinite(w) or w < 0 for w in weights):
            raise ValidationError("shared-randomness weights must be non-negative")
        if abs(sum(weights) - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"shared-randomness weights sum to {sum(weights)!r}, not 1")
        for i, c in enumerate(comps):
            if len(c.encoding) != n:
                raise ValidationError(f"component {i}: encoding needs {n} entries", ("component", i))
            if any(not 1 <= msg <= self.dimension for msg in c.encoding):
                raise ValidationError(f"component {i}: encoding uses messages outside 1..{self.dimension}",
                                      ("component", i))
            if len(c.decoding) != self.dimension or any(len(r) != m for r in c.decoding):
                raise ValidationError(f"component {i}: decoding must be {self.dimension}x{m}",
                                      ("component", i))
            if any(b not in (1, -1) for r in c.decoding for b in r):
                raise ValidationError(f"component {i}: decoded outcomes must be +1 or -1",
                                      ("component", i))
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", weights)

    def component_signs(self) -> np.ndarray:
        """Sign matrices of the components, shape (n_components, N, m)."""
        out = []
        for c in self.components:
            dec = np.asarray(c.decoding, dtype=np.int8)
            out.append(dec[np.asarray(c.encoding) - 1])
        return np.stack(out)

    def to_json(self) -> dict:
        return {
            "kind": "classical",
            "scenario": self.scenario.to_json(),
            "dimension": self.dimension,
            "components": [{"weight": w, "encoding": list(c.encoding),
                            "decoding": [list(r) for r in c.decoding]}
                           for w, c in zip(self.weights, self.components)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> ClassicalStrategy:
        try:
            scenario = Scenario.from_json(obj["scenario"])
            comps = obj["components"]
            return cls(scenario, int(obj["dimension"]),
                       tuple(c["weight"] for c in comps),
                       tuple(StrategyComponent(tuple(c["encoding"]),
                                               tuple(tuple(r) for r in c["decoding"]))
                             for c in comps))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed classical strategy: {exc}") from exc

    @classmethod
    def deterministic(cls, signs, dimension: int | None = None) -> ClassicalStrategy:
        """Single-component strategy reproducing a sign matrix with one message per distinct row."""
        signs = np.asarray(signs, dtype=int)
        rows, encoding = np.unique(signs, axis=0, return_inverse=True)
        d = dimension if dimension is not None else len(rows)
        decoding = [tuple(int(v) for v in r) for r in rows]
        decoding += [decoding[0]] * (d - len(rows))
        comp = StrategyComponent(tuple(int(i) + 1 for i in np.ravel(encoding)), tuple(decoding))
        return cls(Scenario(*signs.shape), d, (1.0,), (comp,))


def correlations_from_probabilities(pt: ProbabilityTable) -> CorrelationMatrix:
    """E[x, y] = p(+1|x,y) - p(-1|x,y), computed exactly.

    p(-1|x,y) is taken as the exact complement of p(+1|x,y), which is what the
    table stores after normalization.
    """
    plus = np.vectorize(Fraction, otypes=[object])(pt.p[..., 0])
    return CorrelationMatrix(pt.scenario, None, exact=2 * plus - 1)


def probabilities_from_correlations(cm: CorrelationMatrix) -> ProbabilityTable:
    """p(+-1|x,y) = (1 +- E[x, y]) / 2, computed exactly then rounded once."""
    exact = cm.rational()
    to_float = np.vectorize(float, otypes=[float])
    plus = to_float((1 + exact) / 2)
    minus = to_float((1 - exact) / 2)
    return ProbabilityTable(cm.scenario, np.stack([plus, minus], axis=-1))


def simulate_classical(strategy: ClassicalStrategy) -> CorrelationMatrix:
    signs = strategy.component_signs().astype(float)
    e = np.tensordot(np.asarray(strategy.weights), signs, axes=1)
    return CorrelationMatrix(strategy.scenario, np.clip(e, -1.0, 1.0))


def apply_white_noise(cm: CorrelationMatrix, visibility: float) -> CorrelationMatrix:
    """Mix with uniformly random outcomes: every correlator is scaled by ``visibility``."""
    if not 0.0 <= visibility <= 1.0:
        raise ValidationError(f"visibility must lie in [0, 1], got {visibility!r}")
    return CorrelationMatrix(cm.scenario, visibility * cm.e + 0.0)


def _require_rectangular(rows, depth: int, what: str):
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what} is not a numeric array: {exc}", what) from exc
    if arr.ndim != depth:
        raise ValidationError(f"{what} must be a {depth}-dimensional array, got shape {arr.shape}", what)
    return arr


def load_data(obj) -> CorrelationMatrix:
    """Parse the JSON ingestion formats into a correlation matrix.

    Accepts either ``{"scenario": ..., "E": [[...]]}`` or
    ``{"scenario": ..., "P": [[[p_plus, p_minus], ...], ...]}``.
    """
    if not isinstance(obj, dict):
        raise ValidationError("input must be a JSON object")
    scenario = Scenario.from_json(obj.get("scenario"))
    if "E" in obj and "P" in obj:
        raise ValidationError('give exactly one of "E" or "P"')
    if "E" in obj:
        return CorrelationMatrix(scenario, _require_rectangular(obj["E"], 2, "E"))
    if "P" in obj:
        return correlations_from_probabilities(
            ProbabilityTable(scenario, _require_rectangular(obj["P"], 3, "P")))
    raise ValidationError('input needs an "E" (correlators) or "P" (probabilities) field')


def load_data_file(path: str | Path) -> CorrelationMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}", str(path)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                              (exc.lineno, exc.colno)) from exc
    return load_data(obj)


def zeros(scenario: Scenario) -> CorrelationMatrix:
    return CorrelationMatrix(scenario, np.zeros(scenario.shape))


def as_correlations(data: CorrelationMatrix | Sequence) -> CorrelationMatrix:
    if isinstance(data, CorrelationMatrix):
        return data
    return CorrelationMatrix.from_array(data)
