"""Linear dimension witnesses, the I_N family, its classical bound and J_3."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import ValidationError
from .scenario import CorrelationMatrix, Scenario

J3_CLAMP_TOL = 1e-9


def _to_fraction(v, where):
    if isinstance(v, bool):
        raise ValidationError(f"coefficient {where} is not a number", where)
    if isinstance(v, (int, np.integer, Fraction)):
        return Fraction(v)
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValidationError(f"coefficient {where} is not finite", where)
        return Fraction(float(v))
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"coefficient {where} = {v!r} is not a rational", where) from exc
    raise ValidationError(f"coefficient {where} has unsupported type {type(v).__name__}", where)


@dataclass(frozen=True)
class Witness:
    """Coefficients w[x][y] of the linear form sum_xy w_xy E_xy.

    Coefficients are kept as exact Fractions. ``bounds`` maps a dimension d to a
    ``(classical_bound, quantum_bound)`` pair; either may be None. The bounds are
    an annotation only, certification code always recomputes them.
    """

    scenario: Scenario
    coeffs: tuple[tuple[Fraction, ...], ...]
    bounds: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        n, m = self.scenario.shape
        rows = tuple(self.coeffs)
        if len(rows) != n or any(len(r) != m for r in rows):
            raise ValidationError(f"witness coefficients must form a {n}x{m} matrix")
        coeffs = tuple(tuple(_to_fraction(v, (x + 1, y + 1)) for y, v in enumerate(r))
                       for x, r in enumerate(rows))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "bounds", dict(self.bounds))

    @classmethod
    def from_array(cls, coeffs, bounds=None) -> Witness:
        arr = np.asarray(coeffs, dtype=object)
        if arr.ndim != 2:
            raise ValidationError("witness coefficients must be a 2-dimensional array")
        return cls(Scenario(*arr.shape), tuple(map(tuple, arr.tolist())), bounds or {})

    @property
    def array(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.coeffs])

    @property
    def rational(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=object)

    def integer_form(self) -> tuple[np.ndarray, int]:
        """Return ``(k, s)`` with integer matrix ``k = s * coeffs`` and ``s > 0`` minimal."""
        s = reduce(math.lcm, (v.denominator for r in self.coeffs for v in r), 1)
        k = np.array([[int(v * s) for v in r] for r in self.coeffs], dtype=object)
        if max((abs(int(v)) for v in k.flat), default=0) < 2 ** 40:
            k = k.astype(np.int64)
        return k, s

    def is_integer(self) -> bool:
        return all(v.denominator == 1 for r in self.coeffs for v in r)

    def with_bound(self, d: int, classical=None, quantum=None) -> Witness:
        bounds = dict(self.bounds)
        old = bounds.get(d, (None, None))
        bounds[d] = (classical if classical is not None else old[0],
                     quantum if quantum is not None else old[1])
        return Witness(self.scenario, self.coeffs, bounds)

    def classical_bound(self, d: int):
        return self.bounds.get(d, (None, None))[0]

    def to_json(self, d: int | None = None, bound=None, kind: str = "classical") -> dict:
        coeffs = [[int(v) if v.denominator == 1 else str(v) for v in r] for r in self.coeffs]
        if bound is None and d is not None:
            pair = self.bounds.get(d, (None, None))
            bound = pair[0] if kind == "classical" else pair[1]
        if isinstance(bound, Fraction):
            bound = int(bound) if bound.denominator == 1 else float(bound)
        return {"coeffs": coeffs, "bound": bound, "d": d, "kind": kind}

    @classmethod
    def from_json(cls, obj) -> Witness:
        if not isinstance(obj, dict) or "coeffs" not in obj:
            raise ValidationError('witness must be an object with a "coeffs" field')
        rows = obj["coeffs"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise ValidationError('"coeffs" must be a non-empty list of rows')
        if len({len(r) for r in rows}) != 1 or not rows[0]:
            raise ValidationError('"coeffs" rows must be non-empty and of equal length')
        w = cls(Scenario(len(rows), len(rows[0])), tuple(map(tuple, rows)))
        d, bound = obj.get("d"), obj.get("bound")
        if d is not None and bound is not None:
            if not isinstance(d, int) or d < 1:
                raise ValidationError('"d" must be a positive integer')
            pair = (_to_fraction(bound, "bound"), None)
            if obj.get("kind", "classical") == "quantum":
                pair = (None, float(bound))
            w = Witness(w.scenario, w.coeffs, {d: pair})
        return w


def build_IN(N: int) -> Witness:
    """The I_N witness for N preparations and N-1 measurements.

    Row 1 is all +1; for row i >= 2 the coefficient of column j is +1 when
    i + j <= N, -1 when i + j == N + 1 and 0 beyond.
    """
    if not isinstance(N, (int, np.integer)) or N < 3:
        raise ValidationError(f"I_N is defined for integer N >= 3, got {N!r}")
    coeffs = np.zeros((N, N - 1), dtype=int)
    coeffs[0, :] = 1
    for i in range(2, N + 1):
        for j in range(1, N + 2 - i):
            coeffs[i - 1, j - 1] = 1 if i + j <= N else -1
    bounds = {d: (Fraction(bound_LN(N, d)), None) for d in range(1, N + 1)}
    return Witness(Scenario(N, N - 1), tuple(map(tuple, coeffs.tolist())), bounds)


def bound_LN(N: int, d: int) -> int:
    """Classical bound of I_N for dimension d <= N: N(N-3)/2 + 2d - 1."""
    if N < 1 or d < 1:
        raise ValidationError("N and d must be positive")
    if d > N:
        raise ValidationError(f"the bound formula holds for d <= N (got d={d}, N={N})")
    return N * (N - 3) // 2 + 2 * d - 1


def _check_match(w: Witness, cm: CorrelationMatrix):
    if w.scenario.shape != cm.scenario.shape:
        raise ValidationError(f"witness is {w.scenario.shape} but data is {cm.scenario.shape}")


def evaluate(w: Witness, cm: CorrelationMatrix) -> float:
    _check_match(w, cm)
    return float(np.sum(w.array * cm.e))


def evaluate_exact(w: Witness, cm: CorrelationMatrix) -> Fraction:
    _check_match(w, cm)
    return sum((a * b for a, b in zip(w.rational.flat, cm.rational().flat)), Fraction(0))


def algebraic_max(w: Witness) -> Fraction:
    return sum((abs(v) for r in w.coeffs for v in r), Fraction(0))


def evaluate_J3(cm: CorrelationMatrix | np.ndarray) -> float:
    """|asin E11 + asin E12 + asin E21 - asin E22 - asin E31| for a 3x2 matrix.

    Entries up to 1e-9 outside [-1, 1] are clamped; larger ones are rejected.
    """
    e = np.asarray(cm.e if isinstance(cm, CorrelationMatrix) else cm, dtype=float)
    if e.shape != (3, 2):
        raise ValidationError(f"J_3 needs a 3x2 correlation matrix, got shape {e.shape}")
    if np.any(np.abs(e) > 1.0 + J3_CLAMP_TOL) or not np.all(np.isfinite(e)):
        raise ValidationError("J_3 argument has entries outside [-1, 1]")
    a = np.arcsin(np.clip(e, -1.0, 1.0))
    return float(abs(a[0, 0] + a[0, 1] + a[1, 0] - a[1, 1] - a[2, 0]))


def parse_witness_spec(text: str) -> Witness:
    """``"IN:<N>"`` shorthand or a JSON file path."""
    import json
    from pathlib import Path

    if text.upper().startswith("IN:"):
        try:
            N = int(text[3:])
        except ValueError as exc:
            raise ValidationError(f"bad witness shorthand {text!r}; expected IN:<N>") from exc
        return build_IN(N)
    try:
        obj = json.loads(Path(text).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read witness file {text}: {exc}", text) from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{text}: invalid JSON at line {exc.lineno}: {exc.msg}", text) from exc
    return Witness.from_json(obj)
