# src/backflow/linalg/operators.py

"""
Dense complex linear algebra kernel.

Matrices are plain ``numpy.ndarray`` values (``ComplexMatrix``).
``HermitianOperator`` and ``DensityOperator`` are validated, read-only
wrappers used wherever an invariant has to travel with the data.

Conventions:
  - tensor products put the first factor's indices outermost (``np.kron``);
  - vectorization stacks columns, so vec(A X B) = (Bᵀ ⊗ A) vec(X).
"""

from dataclasses import dataclass
from typing import Literal, Tuple, Union

import numpy as np

from ..config import DEFAULT_TOLERANCES
from ..errors import DimensionMismatch, NotADensityOperator, NotHermitian
from .jacobi import jacobi_eigh

ComplexMatrix = np.ndarray


# --- Hermitian and density operators ---

def _hermitian_gap(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def symmetrize(m: ComplexMatrix, tol: float = DEFAULT_TOLERANCES.symmetrize) -> np.ndarray:
    """Returns (m + m†)/2, or raises NotHermitian if m is further than tol from Hermitian."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"Expected a square matrix, got shape {m.shape}")
    gap = _hermitian_gap(m)
    if gap > tol * max(1.0, float(np.max(np.abs(m)))):
        raise NotHermitian(f"Matrix deviates from its adjoint by {gap:.3e}")
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class HermitianOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = symmetrize(self.matrix)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class DensityOperator(HermitianOperator):
    def __post_init__(self):
        super().__post_init__()
        tol = DEFAULT_TOLERANCES
        tr = np.trace(self.matrix).real
        if abs(tr - 1.0) > tol.trace:
            raise NotADensityOperator(f"Trace is {tr:.15f}, expected 1")
        lam = min_eigenvalue(self.matrix)
        if lam < -tol.psd:
            raise NotADensityOperator(f"Minimum eigenvalue {lam:.3e} is negative")

    @classmethod
    def normalized(cls, m: ComplexMatrix, trace_tol: float = 1e-8) -> "DensityOperator":
        """Absorbs round-off in the trace (up to trace_tol) before validating."""
        m = symmetrize(m)
        tr = np.trace(m).real
        if abs(tr - 1.0) > trace_tol:
            raise NotADensityOperator(f"Trace is {tr:.15f}, expected 1")
        return cls(m / tr)


Operator = Union[HermitianOperator, np.ndarray]


def as_array(h: Operator) -> np.ndarray:
    if isinstance(h, HermitianOperator):
        return h.matrix
    return np.asarray(h, dtype=complex)


def as_hermitian(h: Operator) -> np.ndarray:
    if isinstance(h, HermitianOperator):
        return h.matrix
    return symmetrize(h)


# --- Products and partial operations ---

def tensor(a: ComplexMatrix, b: ComplexMatrix) -> np.ndarray:
    return np.kron(as_array(a), as_array(b))


def _check_bipartite(m: np.ndarray, dim_a: int, dim_b: int) -> None:
    n = dim_a * dim_b
    if m.shape != (n, n):
        raise DimensionMismatch(f"Matrix of shape {m.shape} does not act on C^{dim_a} ⊗ C^{dim_b}")


def partial_trace(m: ComplexMatrix, dim_a: int, dim_b: int, keep: Literal["A", "B"] = "A") -> np.ndarray:
    m = as_array(m)
    _check_bipartite(m, dim_a, dim_b)
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.einsum("ibjb->ij", t)
    if keep == "B":
        return np.einsum("aiaj->ij", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_transpose(m: ComplexMatrix, dim_a: int, dim_b: int, sys: Literal["A", "B"] = "B") -> np.ndarray:
    m = as_array(m)
    _check_bipartite(m, dim_a, dim_b)
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if sys == "B":
        t = t.transpose(0, 3, 2, 1)
    elif sys == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"sys must be 'A' or 'B', got {sys!r}")
    return t.reshape(dim_a * dim_b, dim_a * dim_b)


# --- Spectra and norms ---

def hermitian_eig(h: Operator) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a Hermitian operator."""
    return jacobi_eigh(as_hermitian(h))


def eigenvalues(h: Operator) -> np.ndarray:
    return hermitian_eig(h)[0]


def min_eigenvalue(h: Operator) -> float:
    return float(eigenvalues(h)[0])


def is_psd(h: Operator, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    return min_eigenvalue(h) >= -tol


def trace_norm(h: Operator) -> float:
    return float(np.sum(np.abs(eigenvalues(h))))


def frobenius_norm(m: ComplexMatrix) -> float:
    return float(np.linalg.norm(as_array(m)))


def singular_values(m: ComplexMatrix) -> np.ndarray:
    return np.linalg.svd(as_array(m), compute_uv=False)


def numerical_rank(m: ComplexMatrix, tol: float = DEFAULT_TOLERANCES.rank) -> int:
    sv = singular_values(m)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


# --- Vectorization ---

def vectorize(m: ComplexMatrix) -> np.ndarray:
    return as_array(m).reshape(-1, order="F")


def devectorize(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.size != rows * cols:
        raise DimensionMismatch(f"Vector of length {v.size} cannot form a {rows}x{cols} matrix")
    return v.reshape(rows, cols, order="F")


# --- Small constructors ---

def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vector: np.ndarray) -> np.ndarray:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0⟩⟨1|
