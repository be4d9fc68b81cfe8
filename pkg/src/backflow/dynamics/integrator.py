# src/backflow/dynamics/integrator.py

"""
Time-local generators and a fixed-step fourth-order propagator.

A generator is given by jump operators L_k with real rates γ_k(t) and an
optional Hamiltonian H(t):

    L_t(X) = -i[H(t), X] + Σ_k γ_k(t) (L_k X L_k† − ½{L_k†L_k, X})

Rates may go negative; the superoperator stays Hermiticity and trace
preserving regardless. The propagator solves dΛ/dt = L_t ∘ Λ on the
column-stacked superoperator.
"""

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatch, IntegrationFailure, NotHermitian
from ..linalg import symmetrize

RateFn = Callable[[float], float]
HamiltonianFn = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class GeneratorSpec:
    dim: int
    jump_ops: Tuple[np.ndarray, ...]
    rates: Tuple[RateFn, ...]
    hamiltonian: Optional[HamiltonianFn] = None
    # precomputed pieces of the dissipator, one triple per jump operator
    _blocks: Tuple[np.ndarray, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        ops = tuple(np.asarray(op, dtype=complex) for op in self.jump_ops)
        if len(ops) != len(self.rates):
            raise DimensionMismatch(f"{len(ops)} jump operators but {len(self.rates)} rate functions")
        for op in ops:
            if op.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"Jump operator of shape {op.shape} on C^{self.dim}")
        object.__setattr__(self, "jump_ops", ops)
        object.__setattr__(self, "rates", tuple(self.rates))
        object.__setattr__(self, "_blocks", tuple(_dissipator(op) for op in ops))

    def validate(self, times: Iterable[float]) -> None:
        """Rates must be finite and H(t) Hermitian at every requested time."""
        for t in times:
            for k, rate in enumerate(self.rates):
                value = float(rate(t))
                if not np.isfinite(value):
                    raise IntegrationFailure(f"Rate γ_{k}({t:g}) is not finite")
            if self.hamiltonian is not None:
                try:
                    symmetrize(self.hamiltonian(t))
                except NotHermitian as e:
                    raise IntegrationFailure(f"H({t:g}) is not Hermitian: {e}") from e


def _dissipator(op: np.ndarray) -> np.ndarray:
    d = op.shape[0]
    eye = np.eye(d, dtype=complex)
    ldl = op.conj().T @ op
    return np.kron(op.conj(), op) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """-i[H, ·] as a superoperator."""
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def generator_superop(spec: GeneratorSpec, t: float) -> np.ndarray:
    n = spec.dim * spec.dim
    out = np.zeros((n, n), dtype=complex)
    if spec.hamiltonian is not None:
        out += hamiltonian_superop(np.asarray(spec.hamiltonian(t), dtype=complex))
    for rate, block in zip(spec.rates, spec._blocks):
        out += float(rate(t)) * block
    return out


def rk4_step(spec: GeneratorSpec, t: float, h: float, s: np.ndarray) -> np.ndarray:
    l0 = generator_superop(spec, t)
    lm = generator_superop(spec, t + 0.5 * h)
    l1 = generator_superop(spec, t + h)
    k1 = l0 @ s
    k2 = lm @ (s + 0.5 * h * k1)
    k3 = lm @ (s + 0.5 * h * k2)
    k4 = l1 @ (s + h * k3)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def propagate(spec: GeneratorSpec, s: np.ndarray, t0: float, n_steps: int, h: float) -> np.ndarray:
    """Advances the superoperator s from t0 by n_steps steps of size h."""
    for i in range(n_steps):
        s = rk4_step(spec, t0 + i * h, h, s)
    if not np.all(np.isfinite(s)):
        raise IntegrationFailure(f"Superoperator diverged while integrating from t={t0:g} over {n_steps} steps")
    return s


def zero_generator(dim: int) -> GeneratorSpec:
    return GeneratorSpec(dim, (), ())


def constant_rates(values: Sequence[float]) -> Tuple[RateFn, ...]:
    return tuple((lambda v: (lambda t: v))(float(v)) for v in values)
