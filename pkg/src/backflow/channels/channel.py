# src/backflow/channels/channel.py

"""
Quantum channels as superoperator matrices.

A channel on C^d is stored as the d²×d² matrix S acting on column-stacked
operators, vec(Λ(X)) = S vec(X). Kraus maps X ↦ K X K† contribute conj(K) ⊗ K.

The Choi matrix is normalized: C = (I ⊗ Λ)(φ⁺) with φ⁺ the unit-trace
maximally entangled projector, ancilla factor first. Extensions I_k ⊗ Λ also
put the ancilla factor first.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, NamedTuple, Optional

import numpy as np

from ..config import DEFAULT_TOLERANCES
from ..errors import DimensionMismatch, IllConditioned, SingularMap
from ..linalg import (
    PAULIS,
    HermitianOperator,
    Operator,
    as_array,
    devectorize,
    min_eigenvalue,
    partial_trace,
    singular_values,
    vectorize,
)
from ..linalg.sampling import random_pure_projector
from ..serialization import matrix_from_json, matrix_to_json


# --- Types ---

@dataclass(frozen=True)
class QuantumChannel:
    dim: int
    superop: np.ndarray

    def __post_init__(self):
        s = np.array(self.superop, dtype=complex, copy=True)
        n = self.dim * self.dim
        if s.shape != (n, n):
            raise DimensionMismatch(f"Superoperator of shape {s.shape} does not act on operators of C^{self.dim}")
        s.setflags(write=False)
        object.__setattr__(self, "superop", s)

    def __call__(self, h: Operator) -> np.ndarray:
        return apply(self, h)

    def __matmul__(self, other: "QuantumChannel") -> "QuantumChannel":
        return compose(self, other)


@dataclass(frozen=True)
class ChoiMatrix:
    dim_in: int
    dim_out: int
    matrix: HermitianOperator

    @property
    def array(self) -> np.ndarray:
        return self.matrix.matrix


class CPVerdict(NamedTuple):
    verdict: bool
    min_choi_eig: float


# --- Constructors ---

def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel(dim, np.eye(dim * dim, dtype=complex))


def from_kraus(kraus_ops: Iterable[np.ndarray]) -> QuantumChannel:
    ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
    dim = ops[0].shape[0]
    superop = sum(np.kron(k.conj(), k) for k in ops)
    return QuantumChannel(dim, superop)


def from_unitary(u: np.ndarray) -> QuantumChannel:
    return from_kraus([u])


def transpose_map(dim: int) -> QuantumChannel:
    """X ↦ Xᵀ: positive but not completely positive."""
    n = dim * dim
    superop = np.zeros((n, n), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            # vec index of E_ij is i + j·d; its transpose is E_ji
            superop[j + i * dim, i + j * dim] = 1.0
    return QuantumChannel(dim, superop)


def completely_depolarizing(dim: int) -> QuantumChannel:
    """X ↦ Tr(X)·I/d."""
    out = vectorize(np.eye(dim, dtype=complex) / dim)
    trace_row = vectorize(np.eye(dim, dtype=complex)).conj()
    return QuantumChannel(dim, np.outer(out, trace_row))


def pauli_channel(l1: float, l2: float, l3: float) -> QuantumChannel:
    """Unital qubit map scaling the Bloch components by (λ1, λ2, λ3)."""
    coeffs = (1.0, l1, l2, l3)
    superop = sum(0.5 * c * np.outer(vectorize(p), vectorize(p).conj()) for c, p in zip(coeffs, PAULIS))
    return QuantumChannel(2, superop)


def scaling_map(dim: int, factor: float) -> QuantumChannel:
    return QuantumChannel(dim, factor * np.eye(dim * dim, dtype=complex))


# --- Core operations ---

def _check_operator(c: QuantumChannel, m: np.ndarray) -> None:
    if m.shape != (c.dim, c.dim):
        raise DimensionMismatch(f"Operator of shape {m.shape} does not match channel dimension {c.dim}")


def apply(c: QuantumChannel, h: Operator) -> np.ndarray:
    m = as_array(h)
    _check_operator(c, m)
    return devectorize(c.superop @ vectorize(m), c.dim, c.dim)


def compose(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    """a∘b: b acts first."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"Cannot compose channels on C^{a.dim} and C^{b.dim}")
    return QuantumChannel(a.dim, a.superop @ b.superop)


def _choi_array(c: QuantumChannel) -> np.ndarray:
    d = c.dim
    # t[a, b, i, j] = S[a + b d, i + j d]
    t = c.superop.reshape(d, d, d, d, order="F")
    return (t.transpose(2, 0, 3, 1) / d).reshape(d * d, d * d)


def to_choi(c: QuantumChannel) -> ChoiMatrix:
    return ChoiMatrix(c.dim, c.dim, HermitianOperator(_choi_array(c)))


def from_choi(ch: ChoiMatrix) -> QuantumChannel:
    d = ch.dim_in
    if ch.dim_out != d:
        raise DimensionMismatch("Only dimension-preserving channels are supported")
    c4 = ch.array.reshape(d, d, d, d)
    t = d * c4.transpose(1, 3, 0, 2)
    return QuantumChannel(d, t.reshape(d * d, d * d, order="F"))


def condition_number(c: QuantumChannel) -> float:
    sv = singular_values(c.superop)
    return float("inf") if sv[-1] == 0.0 else float(sv[0] / sv[-1])


def inverse(c: QuantumChannel, cond_limit: float = DEFAULT_TOLERANCES.cond_limit) -> QuantumChannel:
    """Inverse linear map Λ⁻¹ (generally not positive even when Λ is CP)."""
    sv = singular_values(c.superop)
    smax, smin = float(sv[0]), float(sv[-1])
    threshold = smax * c.superop.shape[0] * np.finfo(float).eps
    if smin <= threshold:
        raise SingularMap(f"Superoperator is singular (σ_min={smin:.3e}, σ_max={smax:.3e})", smin, smax)
    cond = smax / smin
    if cond > cond_limit:
        raise IllConditioned(f"Condition number {cond:.3e} exceeds limit {cond_limit:.3e}", cond)
    return QuantumChannel(c.dim, np.linalg.inv(c.superop))


def extend_with_identity(c: QuantumChannel, k: int) -> QuantumChannel:
    """I_k ⊗ Λ on C^k ⊗ C^d (ancilla first)."""
    d = c.dim
    t = c.superop.reshape(d, d, d, d, order="F")
    eye = np.eye(k, dtype=complex)
    # output (A, a, B, b), input (C, i, D, j); F-order over (a, A, b, B) is the column-stacked index
    full = np.einsum("AC,BD,abij->aAbBiCjD", eye, eye, t)
    n = (k * d) ** 2
    return QuantumChannel(k * d, full.reshape(n, n, order="F"))


def apply_extended(c: QuantumChannel, k: int, h: Operator) -> np.ndarray:
    """(I_k ⊗ Λ)(X) computed block by block, without forming the extended superoperator."""
    m = as_array(h)
    d = c.dim
    if m.shape != (k * d, k * d):
        raise DimensionMismatch(f"Operator of shape {m.shape} does not act on C^{k} ⊗ C^{d}")
    blocks = m.reshape(k, d, k, d).transpose(0, 2, 1, 3).reshape(k * k, d, d)
    vecs = blocks.transpose(0, 2, 1).reshape(k * k, d * d)
    out = (vecs @ c.superop.T).reshape(k * k, d, d).transpose(0, 2, 1)
    return out.reshape(k, k, d, d).transpose(0, 2, 1, 3).reshape(k * d, k * d)


# --- Predicates ---

def is_cp(c: QuantumChannel, tol: float = DEFAULT_TOLERANCES.cp) -> CPVerdict:
    lam = min_eigenvalue(to_choi(c).matrix)
    return CPVerdict(lam >= -tol, lam)


def is_tp(c: QuantumChannel, tol: float = DEFAULT_TOLERANCES.tp) -> bool:
    reduced = partial_trace(_choi_array(c), c.dim, c.dim, keep="A")
    return float(np.max(np.abs(reduced - np.eye(c.dim) / c.dim))) <= tol


def is_hermiticity_preserving(c: QuantumChannel, tol: float = 1e-10) -> bool:
    d = c.dim
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1.0
            f = np.zeros((d, d), dtype=complex)
            if i != j:
                f[i, j], f[j, i] = -1j, 1j
            for basis in (e, f):
                out = apply(c, basis)
                if np.max(np.abs(out - out.conj().T)) > tol:
                    return False
    return True


def is_positive_sampled(
    c: QuantumChannel,
    n_samples: int = DEFAULT_TOLERANCES.n_samples,
    tol: float = DEFAULT_TOLERANCES.psd,
    rng: Optional[np.random.Generator] = None,
) -> bool:
    """Necessary check only: images of Haar-random pure states must stay PSD."""
    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(n_samples):
        if min_eigenvalue(apply(c, random_pure_projector(c.dim, rng))) < -tol:
            return False
    return True


# --- Qubit Pauli-diagonal maps ---

def pauli_transfer_matrix(c: QuantumChannel) -> np.ndarray:
    """R_ij = ½ Tr(σ_i Λ(σ_j)) for qubit channels."""
    if c.dim != 2:
        raise DimensionMismatch("Pauli transfer matrices are defined here for qubits only")
    return np.array([[0.5 * np.trace(pi @ apply(c, pj)).real for pj in PAULIS] for pi in PAULIS])


def pauli_eigenvalues(c: QuantumChannel) -> np.ndarray:
    return np.diag(pauli_transfer_matrix(c))[1:].copy()


def is_pauli_diagonal(c: QuantumChannel, tol: float = 1e-9) -> bool:
    if c.dim != 2:
        return False
    r = pauli_transfer_matrix(c)
    return bool(np.max(np.abs(r - np.diag(np.diag(r)))) <= tol and abs(r[0, 0] - 1.0) <= tol)


def pauli_positivity(l1: float, l2: float, l3: float) -> bool:
    """Exact positivity of a unital qubit Pauli map: the Bloch ball maps into itself."""
    return all(abs(x) <= 1.0 for x in (l1, l2, l3))


def pauli_cp(l1: float, l2: float, l3: float) -> bool:
    """Exact complete positivity of a unital qubit Pauli map."""
    return abs(l1 + l2) <= 1.0 + l3 and abs(l1 - l2) <= 1.0 - l3


# --- JSON ---

def to_json(c: QuantumChannel) -> Dict[str, Any]:
    return {"dim": c.dim, "superop": matrix_to_json(c.superop)}


def from_json(payload: Dict[str, Any]) -> QuantumChannel:
    dim = int(payload["dim"])
    return QuantumChannel(dim, matrix_from_json(payload["superop"], dim * dim, dim * dim))
