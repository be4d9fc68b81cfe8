# src/backflow/witness/kernel.py

import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ..analysis import kernel_basis
from ..channels import apply
from ..config import DEFAULT_TOLERANCES, Tolerances
from ..dynamics import DynamicalFamily
from ..errors import DomainError, NoObstruction
from ..linalg import DensityOperator, HermitianOperator, eigenvalues, maximally_mixed, trace_norm
from ..serialization import matrix_from_json, matrix_to_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelWitness:
    """System-only pair ω_S ± εK with K in the kernel of Λ_s."""

    s: float
    t: float
    epsilon: float
    kernel_element: HermitianOperator
    rho1: DensityOperator
    rho2: DensityOperator
    norm_at_s: float
    norm_at_t: float

    @property
    def gain(self) -> float:
        return self.norm_at_t - self.norm_at_s

    def to_json(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "t": self.t,
            "epsilon": self.epsilon,
            "kernel_element": matrix_to_json(self.kernel_element.matrix),
            "rho1": matrix_to_json(self.rho1.matrix),
            "rho2": matrix_to_json(self.rho2.matrix),
            "norm_at_s": self.norm_at_s,
            "norm_at_t": self.norm_at_t,
            "gain": self.gain,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "KernelWitness":
        d = int(round(len(data["rho1"]) ** 0.5))

        def matrix(key):
            return matrix_from_json(data[key], d, d)

        return cls(
            s=float(data["s"]),
            t=float(data["t"]),
            epsilon=float(data["epsilon"]),
            kernel_element=HermitianOperator(matrix("kernel_element")),
            rho1=DensityOperator(matrix("rho1")),
            rho2=DensityOperator(matrix("rho2")),
            norm_at_s=float(data["norm_at_s"]),
            norm_at_t=float(data["norm_at_t"]),
        )


def kernel_witness(
    f: DynamicalFamily,
    s: float,
    t: float,
    eps_safety: float = 0.5,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> KernelWitness:
    """
    Picks the kernel direction of Λ_s that Λ_t maps furthest from zero.
    ε = eps_safety/(d·‖K‖_op) keeps both states PSD; the smaller minimum
    eigenvalue of the pair is (1 − eps_safety)/d.
    """
    if t < s:
        raise DomainError(f"Need s <= t, got s={s}, t={t}")
    if not 0.0 < eps_safety <= 1.0:
        raise DomainError(f"eps_safety must lie in (0, 1], got {eps_safety}")
    basis = kernel_basis(f, s, tol.rank)
    if not basis:
        raise NoObstruction(f"Λ_{s:g} is bijective; its kernel is trivial")

    lam_t = f.evaluate(t)
    images = [trace_norm(apply(lam_t, k)) for k in basis]
    best = int(np.argmax(images))
    if images[best] <= tol.kernel:
        raise NoObstruction(f"No kernel direction of Λ_{s:g} survives at t={t:g}")

    k = basis[best].matrix
    d = f.dim
    op_norm = float(np.max(np.abs(eigenvalues(k))))
    eps = eps_safety / (d * op_norm)
    omega = maximally_mixed(d)
    rho1 = DensityOperator.normalized(omega + eps * k)
    rho2 = DensityOperator.normalized(omega - eps * k)
    delta = rho1.matrix - rho2.matrix
    norm_s = trace_norm(apply(f.evaluate(s), delta))
    norm_t = trace_norm(apply(lam_t, delta))
    logger.debug("Kernel witness (%g, %g): eps=%.4f, gain=%.3e", s, t, eps, norm_t - norm_s)
    return KernelWitness(s, t, eps, basis[best], rho1, rho2, norm_s, norm_t)
