"""Exact linear algebra over the rationals for small integer matrices."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce

import numpy as np
import scipy.linalg


def primitive(v) -> tuple[int, ...]:
    """Scale an integer vector so its entries have gcd 1."""
    v = [int(x) for x in v]
    g = reduce(math.gcd, v, 0)
    if g > 1:
        v = [x // g for x in v]
    return tuple(v)


def rref(rows) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form of a small matrix; returns (nonzero rows, pivot columns)."""
    mat = [[Fraction(x) for x in r] for r in rows]
    if not mat:
        return [], []
    n_cols = len(mat[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        p = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def nullspace(rows, n_cols: int) -> list[tuple[int, ...]]:
    """Integer basis of {y : rows @ y = 0}."""
    red, pivots = rref(rows) if len(rows) else ([], [])
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * n_cols
        vec[f] = Fraction(1)
        for row, p in zip(red, pivots):
            vec[p] = -row[f]
        den = reduce(math.lcm, (x.denominator for x in vec), 1)
        basis.append(primitive(x * den for x in vec))
    return basis


def _matmul_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype != object and b.dtype != object:
        amax = int(np.abs(a).max(initial=0))
        bmax = int(np.abs(b).max(initial=0))
        if amax * bmax * max(a.shape[-1], 1) < 2 ** 62:
            return a.astype(np.int64) @ b.astype(np.int64)
    return a.astype(object) @ b.astype(object)


def independent_rows(mat: np.ndarray) -> list[int]:
    """Indices of a maximal set of linearly independent rows, certified exactly.

    A pivoted QR proposes the rows; the proposal is confirmed by checking that
    every row is annihilated by the exact nullspace of the chosen rows.
    """
    mat = np.asarray(mat)
    if mat.size == 0:
        return []
    n_cols = mat.shape[1]
    fl = mat.astype(float)
    _, r, piv = scipy.linalg.qr(fl.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(fl.shape) * np.finfo(float).eps * (diag[0] if len(diag) else 0.0) * 16
    chosen = [int(i) for i, dv in zip(piv, diag) if dv > tol]
    while True:
        red, _ = rref(mat[chosen].tolist())
        if len(red) < len(chosen):
            # drop rows until the chosen set is independent
            keep = []
            for i in chosen:
                if len(rref(mat[keep + [i]].tolist())[0]) == len(keep) + 1:
                    keep.append(i)
            chosen = keep
        null = nullspace(mat[chosen].tolist(), n_cols)
        if not null:
            return chosen
        resid = _matmul_exact(mat, np.array(null, dtype=object).T)
        bad = np.flatnonzero(np.any(resid != 0, axis=1))
        if len(bad) == 0:
            return chosen
        chosen.append(int(bad[0]))


def rank(mat) -> int:
    return len(independent_rows(np.asarray(mat)))


def affine_rank(points) -> int:
    """Dimension of the affine hull of the rows of ``points``."""
    points = np.asarray(points)
    if len(points) == 0:
        return -1
    return rank(points[1:] - points[0]) if len(points) > 1 else 0
