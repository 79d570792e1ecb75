"""Cyclic Jacobi eigensolver for small Hermitian matrices."""
from __future__ import annotations

import numpy as np

from .errors import SolverError

MAX_DIM = 16


def _off_norm(a) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.sqrt(np.sum(np.abs(a[mask]) ** 2)))


def eigh_jacobi(a, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` in ascending order and the
    corresponding orthonormal eigenvectors as the columns of ``v``. Sweeps stop
    once the off-diagonal Frobenius norm drops below ``tol`` times
    ``max(1, ||a||_F)``.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("eigh_jacobi needs a square matrix")
    if n > MAX_DIM:
        raise ValueError(f"eigh_jacobi is meant for dimensions up to {MAX_DIM}")
    a = (a + a.conj().T) / 2
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    threshold = tol * scale
    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= threshold * 1e-3:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # unitary block acting on coordinates (p, q): phase fix, then real rotation
                j = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ j
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
    else:
        off = _off_norm(a)
        if off > threshold:
            raise SolverError(f"Jacobi eigensolver did not converge (off-diagonal norm {off:.3g})")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def top_eigenvector(a) -> tuple[float, np.ndarray]:
    w, v = eigh_jacobi(a)
    return float(w[-1]), v[:, -1]


def matrix_sign(a) -> np.ndarray:
    """sign(a) through the spectrum, zero eigenvalues mapped to +1."""
    w, v = eigh_jacobi(a)
    signs = np.where(w >= 0, 1.0, -1.0)
    return (v * signs) @ v.conj().T
