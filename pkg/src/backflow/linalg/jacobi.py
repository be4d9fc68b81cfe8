# src/backflow/linalg/jacobi.py

"""
Cyclic Jacobi eigensolver for small dense complex Hermitian matrices.

Each rotation first removes the phase of the pivot a[p, q] with a diagonal
unitary, then applies the classic real Jacobi rotation to the (p, q) block.
Sweeps run over all pivots in row order until the off-diagonal Frobenius norm
drops below ``tol`` times the Frobenius norm of the input.
"""

import math
from typing import Tuple

import numpy as np

MAX_SWEEPS = 60


def _off_norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2), 0.0)))


def jacobi_eigh(h: np.ndarray, tol: float = 1e-15) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (ascending eigenvalues, eigenvectors as orthonormal columns)."""
    a = np.array(h, dtype=complex, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return np.real(np.diag(a)).copy(), v

    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(n), v
    threshold = tol * scale

    for _ in range(MAX_SWEEPS):
        if _off_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag  # e^{iφ}
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if theta >= 0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # J = diag-phase · R restricted to the (p, q) plane
                j2 = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j2
                a[idx, :] = j2.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ j2
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

    evals = np.real(np.diag(a)).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]
