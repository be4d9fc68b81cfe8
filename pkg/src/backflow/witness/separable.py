# src/backflow/witness/separable.py

"""
Separable witness pairs and Helstrom-matrix rescaling.

Both operations mix states toward an interior anchor: mixing every
state of a pair toward ω = I/(kd) with a common weight q scales the
evolved Helstrom norms, and so the gain, by exactly q.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..channels import apply_extended, inverse
from ..config import DEFAULT_TOLERANCES, Tolerances
from ..dynamics import DynamicalFamily
from ..errors import CertificationFailed, DegenerateWeight, DomainError
from ..linalg import (
    DensityOperator,
    Operator,
    as_hermitian,
    frobenius_norm,
    maximally_mixed,
    min_eigenvalue,
    partial_transpose,
)
from .construction import WitnessCertificate, WitnessPair

logger = logging.getLogger(__name__)

# 2⊗2 and 2⊗3 are the only bipartitions where PPT is also sufficient
PPT_EXACT_MAX_DIM = 6


def is_ppt(rho: Operator, dim_a: int, dim_b: int, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    return min_eigenvalue(as_hermitian(partial_transpose(rho, dim_a, dim_b, "B"))) >= -tol


def separable_ball_radius(total_dim: int) -> float:
    """Frobenius radius around I/D inside which every state is separable."""
    return 1.0 / math.sqrt(total_dim * (total_dim - 1))


def in_separable_ball(rho: Operator, total_dim: int) -> bool:
    return frobenius_norm(as_hermitian(rho) - maximally_mixed(total_dim)) <= separable_ball_radius(total_dim)


def certification_method(dim_a: int, dim_b: int) -> str:
    return "ppt" if dim_a * dim_b <= PPT_EXACT_MAX_DIM else "ball"


def certify_separable(rho: Operator, dim_a: int, dim_b: int, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    if certification_method(dim_a, dim_b) == "ppt":
        return is_ppt(rho, dim_a, dim_b, tol)
    return in_separable_ball(rho, dim_a * dim_b)


def separable_witness(
    f: DynamicalFamily,
    pair: WitnessPair,
    certificate: WitnessCertificate,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> WitnessPair:
    """
    Mixes both initial states toward ω with the largest common weight q
    (bisection) for which both are certified separable. The new pair has
    p' = q·p and the same anchor σ, so its gain is q times the original.

    ``certificate`` must be the verification of ``pair`` and show a gain
    above ``tol.gain``, otherwise DomainError is raised.
    """
    if certificate.s != pair.s or certificate.p != pair.p:
        raise DomainError(f"Certificate at s={certificate.s:g} was not issued for the pair anchored at s={pair.s:g}")
    if not certificate.gain > tol.gain:
        raise DomainError(
            f"Pair at s={pair.s:g} has no verified gain (got {certificate.gain:.3e} at t={certificate.t:g})"
        )
    k, d = pair.ancilla_dim, pair.dim
    omega = maximally_mixed(k * d)
    method = certification_method(k, d)

    def mixed(q: float):
        return [(1.0 - q) * omega + q * rho.matrix for rho in (pair.rho1_initial, pair.rho2_initial)]

    def certified(q: float) -> bool:
        return all(certify_separable(m, k, d, tol.psd) for m in mixed(q))

    if certified(1.0):
        q = 1.0
    else:
        lo, hi = 0.0, 1.0
        while hi - lo > tol.mixing_resolution:
            mid = 0.5 * (lo + hi)
            if certified(mid):
                lo = mid
            else:
                hi = mid
        q = lo
    if q < tol.degenerate_weight:
        raise CertificationFailed(f"Separable mixing weight {q:.3e} is below {tol.degenerate_weight:.1e} ({method})")

    rho1, rho2 = (DensityOperator.normalized(m) for m in mixed(q))
    logger.debug("Separable pair at s=%g: q=%.6f via %s", pair.s, q, method)
    return replace(
        pair,
        p=q * pair.p,
        rho1_initial=rho1,
        rho2_initial=rho2,
        separable_certified=True,
        certification=method,
        q=q * pair.q,
    )


# --- Helstrom rescaling ---

@dataclass(frozen=True)
class HelstromRescaling:
    p: float
    r: float
    x: float
    y: float
    scale: float
    rho1p: DensityOperator
    rho2p: DensityOperator

    @property
    def delta(self) -> np.ndarray:
        """y·ρ₁' − (1−y)·ρ₂', equal to scale·(pρ₁ − (1−p)ρ₂)."""
        return self.y * self.rho1p.matrix - (1.0 - self.y) * self.rho2p.matrix


def rescaling_weights(p: float, r: float):
    """(x, y, scale) for prior p and first-state weight r."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"Prior p must lie in (0, 1), got {p}")
    if not 0.0 < r <= 1.0:
        raise DomainError(f"Weight r must lie in (0, 1], got {r}")
    n = 2.0 * p + r - 2.0 * r * p
    x = r * (1.0 - p) / (p + r - 2.0 * r * p)
    y = p / n
    for name, w in (("x", x), ("y", y)):
        if not 0.0 < w <= 1.0:
            raise DomainError(f"Derived weight {name}={w} lies outside (0, 1]")
    return x, y, r / n


def helstrom_rescale(
    rho1: Operator,
    rho2: Operator,
    p: float,
    sigma: Operator,
    r: float,
    psd_tol: float = DEFAULT_TOLERANCES.psd,
) -> HelstromRescaling:
    """
    ρ₁' = (1−r)σ + rρ₁ and ρ₂' = (1−x)σ + xρ₂ with x = r(1−p)/(p+r−2rp);
    with y = p/(2p+r−2rp) the pair (ρ₁', ρ₂') has Helstrom matrix
    r/(2p+r−2rp) times that of (ρ₁, ρ₂).
    σ must be strictly positive.
    """
    x, y, scale = rescaling_weights(p, r)
    s, a, b = as_hermitian(sigma), as_hermitian(rho1), as_hermitian(rho2)
    floor = min_eigenvalue(s)
    if floor <= psd_tol:
        raise DomainError(f"Anchor sigma must be strictly positive, minimum eigenvalue {floor:.3e}")
    rho1p = DensityOperator.normalized((1.0 - r) * s + r * a)
    rho2p = DensityOperator.normalized((1.0 - x) * s + x * b)
    return HelstromRescaling(p, r, x, y, scale, rho1p, rho2p)


@dataclass(frozen=True)
class HelstromPreimage:
    rescaling: HelstromRescaling
    preimage1: DensityOperator
    preimage2: DensityOperator


def helstrom_preimage(
    f: DynamicalFamily,
    s: float,
    rho1: Operator,
    rho2: Operator,
    p: float,
    ancilla_dim: Optional[int] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> HelstromPreimage:
    """
    Pulls an arbitrary Helstrom pair on C^k ⊗ C^d back through I⊗Λ_s.

    The anchor is σ = (I⊗Λ_s)(ω). r is the largest weight in (0, 1]
    (bisection) for which both rescaled states have preimages whose
    minimum eigenvalue is at least the preimage margin.
    """
    d = f.dim
    k = d + 1 if ancilla_dim is None else ancilla_dim
    lam_s = f.evaluate(s)
    lam_s_inv = inverse(lam_s, tol.cond_limit)
    omega = maximally_mixed(k * d)
    sigma = apply_extended(lam_s, k, omega)
    x1 = as_hermitian(apply_extended(lam_s_inv, k, rho1))
    x2 = as_hermitian(apply_extended(lam_s_inv, k, rho2))

    def preimages(r: float):
        x, _, _ = rescaling_weights(p, r)
        return (1.0 - r) * omega + r * x1, (1.0 - x) * omega + x * x2

    def admissible(r: float) -> bool:
        return all(min_eigenvalue(m) >= tol.preimage_margin for m in preimages(r))

    if admissible(1.0):
        r = 1.0
    else:
        lo, hi = 0.0, 1.0
        while hi - lo > tol.mixing_resolution:
            mid = 0.5 * (lo + hi)
            if admissible(mid):
                lo = mid
            else:
                hi = mid
        r = lo
    if r < tol.degenerate_weight:
        raise DegenerateWeight(f"Rescaling weight {r:.3e} is below {tol.degenerate_weight:.1e}")
    m1, m2 = preimages(r)
    return HelstromPreimage(
        helstrom_rescale(rho1, rho2, p, sigma, r, tol.psd),
        DensityOperator.normalized(m1),
        DensityOperator.normalized(m2),
    )
