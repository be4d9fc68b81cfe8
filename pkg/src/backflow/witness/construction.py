# src/backflow/witness/construction.py

"""
Initial state pairs on C^k ⊗ C^d (ancilla first, k ≥ d+1) whose evolved
trace distance grows across every non-CP step.

With E = I_k ⊗ Λ_s and the anchor preimage ω = I/(kd), the pair is

    ρ_i = (1−p) ω + p E⁻¹(ref_i),   ref_1 = φ⁺,  ref_2 = |k−1⟩⟨k−1| ⊗ I/d

so that E(ρ_i) = (1−p)σ + p·ref_i with σ = E(ω). The two references have
orthogonal ancilla supports, hence ‖E(ρ_1 − ρ_2)‖₁ = 2p and any later
‖(I ⊗ Λ_t)(ρ_1 − ρ_2)‖₁ exceeds 2p by p(‖Choi(V_{t,s})‖₁ − 1 + ‖V(I/d)‖₁ − 1).
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..analysis import intermediate_map
from ..channels import QuantumChannel, apply, apply_extended, inverse
from ..config import DEFAULT_TOLERANCES, Tolerances
from ..dynamics import DynamicalFamily
from ..errors import DegenerateWeight, DimensionMismatch, DomainError, IllConditioned, SingularMap
from ..linalg import DensityOperator, Operator, as_hermitian, ket, maximally_mixed, min_eigenvalue, projector, tensor, trace_norm
from ..serialization import json_float, matrix_from_json, matrix_to_json

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-7


# --- Reference states ---

@dataclass(frozen=True)
class ReferenceStates:
    d: int
    ancilla_dim: int
    phi_plus: DensityOperator
    flag_state: DensityOperator
    omega: DensityOperator


def reference_states(d: int, ancilla_dim: Optional[int] = None) -> ReferenceStates:
    k = d + 1 if ancilla_dim is None else ancilla_dim
    if d < 2:
        raise DomainError(f"System dimension must be at least 2, got {d}")
    if k < d + 1:
        raise DomainError(f"Ancilla dimension must be at least d+1 = {d + 1}, got {k}")
    psi = sum(np.kron(ket(i, k), ket(i, d)) for i in range(d)) / np.sqrt(d)
    phi_plus = DensityOperator(projector(psi))
    flag = DensityOperator(tensor(projector(ket(k - 1, k)), maximally_mixed(d)))
    return ReferenceStates(d, k, phi_plus, flag, DensityOperator(maximally_mixed(k * d)))


# --- Mixing weights ---

def max_mixing_weight(
    x: Operator,
    anchor: Operator,
    resolution: float = DEFAULT_TOLERANCES.mixing_resolution,
    psd_tol: float = DEFAULT_TOLERANCES.psd,
) -> float:
    """Largest p ∈ [0, 1] with (1−p)·anchor + p·x PSD, by bisection on the pencil's minimum eigenvalue."""
    x, a = as_hermitian(x), as_hermitian(anchor)
    if x.shape != a.shape:
        raise DimensionMismatch(f"Operator of shape {x.shape} and anchor of shape {a.shape}")
    if min_eigenvalue(a) <= 0:
        raise DomainError("Anchor must be strictly positive definite")
    if min_eigenvalue(x) >= -psd_tol:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if min_eigenvalue((1.0 - mid) * a + mid * x) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


# --- Witness pairs ---

@dataclass(frozen=True)
class WitnessPair:
    s: float
    p: float
    eta: float
    dim: int
    ancilla_dim: int
    sigma: DensityOperator
    rho1_initial: DensityOperator
    rho2_initial: DensityOperator
    separable_certified: bool = False
    certification: str = "none"
    q: float = 1.0

    @property
    def delta(self) -> np.ndarray:
        return self.rho1_initial.matrix - self.rho2_initial.matrix

    def to_json(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "p": self.p,
            "eta": self.eta,
            "dim": self.dim,
            "ancilla_dim": self.ancilla_dim,
            "sigma": matrix_to_json(self.sigma.matrix),
            "rho1_initial": matrix_to_json(self.rho1_initial.matrix),
            "rho2_initial": matrix_to_json(self.rho2_initial.matrix),
            "separable_certified": self.separable_certified,
            "certification": self.certification,
            "q": self.q,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "WitnessPair":
        n = int(data["dim"]) * int(data["ancilla_dim"])

        def state(key):
            return DensityOperator(matrix_from_json(data[key], n, n))

        return cls(
            s=float(data["s"]),
            p=float(data["p"]),
            eta=float(data["eta"]),
            dim=int(data["dim"]),
            ancilla_dim=int(data["ancilla_dim"]),
            sigma=state("sigma"),
            rho1_initial=state("rho1_initial"),
            rho2_initial=state("rho2_initial"),
            separable_certified=bool(data["separable_certified"]),
            certification=str(data["certification"]),
            q=float(data["q"]),
        )


def construct_witness(
    f: DynamicalFamily,
    s: float,
    eta: float = DEFAULT_TOLERANCES.eta,
    ancilla_dim: Optional[int] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> WitnessPair:
    """Builds the pair at anchor time s. Raises SingularMap when Λ_s is not bijective."""
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"Safety factor eta must lie in (0, 1], got {eta}")
    refs = reference_states(f.dim, ancilla_dim)
    k = refs.ancilla_dim
    lam_s = f.evaluate(s)
    lam_s_inv = inverse(lam_s, tol.cond_limit)
    omega = refs.omega.matrix

    y1 = as_hermitian(apply_extended(lam_s_inv, k, refs.phi_plus))
    y2 = as_hermitian(apply_extended(lam_s_inv, k, refs.flag_state))
    w1 = max_mixing_weight(y1, omega, tol.mixing_resolution, tol.psd)
    w2 = max_mixing_weight(y2, omega, tol.mixing_resolution, tol.psd)
    p = eta * min(w1, w2)
    if p < tol.degenerate_weight:
        raise DegenerateWeight(f"Mixing weight {p:.3e} at s={s:g} is below {tol.degenerate_weight:.1e}")

    rho1 = DensityOperator.normalized((1.0 - p) * omega + p * y1)
    rho2 = DensityOperator.normalized((1.0 - p) * omega + p * y2)
    sigma = DensityOperator.normalized(apply_extended(lam_s, k, omega))
    logger.debug("Witness at s=%g: weights (%.6f, %.6f), p=%.6f", s, w1, w2, p)
    return WitnessPair(s, p, eta, f.dim, k, sigma, rho1, rho2)


# --- Certificates ---

@dataclass(frozen=True)
class WitnessCertificate:
    s: float
    t: float
    p: float
    norm_at_s: float
    norm_at_t: float
    gain: float
    choi_excess: Optional[float]
    flag_excess: Optional[float]
    identity_residual: Optional[float]
    separable_certified: bool
    certification: str
    witnessed: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "t": self.t,
            "p": self.p,
            "norm_at_s": self.norm_at_s,
            "norm_at_t": self.norm_at_t,
            "gain": self.gain,
            "choi_excess": json_float(self.choi_excess),
            "flag_excess": json_float(self.flag_excess),
            "identity_residual": json_float(self.identity_residual),
            "separable_certified": self.separable_certified,
            "certification": self.certification,
            "witnessed": self.witnessed,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "WitnessCertificate":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


def extended_norm(c: QuantumChannel, k: int, delta: np.ndarray) -> float:
    return trace_norm(apply_extended(c, k, delta))


def verify_witness(
    f: DynamicalFamily,
    pair: WitnessPair,
    t: float,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> WitnessCertificate:
    """
    Evolves the stored initial states with I⊗Λ_s and I⊗Λ_t directly. When
    V_{t,s} exists the gain is cross-checked against p·(choi_excess + flag_excess).
    """
    if t < pair.s:
        raise DomainError(f"Verification time t={t} precedes the anchor s={pair.s}")
    k = pair.ancilla_dim
    delta = pair.delta
    norm_s = extended_norm(f.evaluate(pair.s), k, delta)
    norm_t = extended_norm(f.evaluate(t), k, delta)
    gain = norm_t - norm_s

    choi_ex = flag_ex = residual = None
    try:
        v = intermediate_map(f, pair.s, t, tol.cond_limit).channel
    except (SingularMap, IllConditioned):
        v = None
    if v is not None:
        refs = reference_states(pair.dim, k)
        choi_ex = extended_norm(v, k, refs.phi_plus.matrix) - 1.0
        flag_ex = trace_norm(apply(v, maximally_mixed(pair.dim))) - 1.0
        residual = abs(gain - pair.p * (choi_ex + flag_ex))
        if residual > IDENTITY_TOL:
            logger.warning("Gain identity off by %.3e at (s, t) = (%g, %g)", residual, pair.s, t)
    return WitnessCertificate(
        s=pair.s,
        t=t,
        p=pair.p,
        norm_at_s=norm_s,
        norm_at_t=norm_t,
        gain=gain,
        choi_excess=choi_ex,
        flag_excess=flag_ex,
        identity_residual=residual,
        separable_certified=pair.separable_certified,
        certification=pair.certification,
        witnessed=gain > tol.gain,
    )
