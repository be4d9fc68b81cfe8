# src/backflow/linalg/sampling.py

from typing import List, Optional

import numpy as np
from scipy.stats import unitary_group

from .operators import projector


def _rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng()


def random_unitary(dim: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Haar-random unitary."""
    return unitary_group.rvs(dim, random_state=_rng(rng))


def random_pure_state(dim: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Haar-random unit vector."""
    rng = _rng(rng)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_pure_projector(dim: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    return projector(random_pure_state(dim, rng))


def random_density(dim: int, rng: Optional[np.random.Generator] = None, rank: Optional[int] = None) -> np.ndarray:
    """Random mixed state from the induced (Ginibre) measure."""
    rng = _rng(rng)
    k = rank or dim
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    rng = _rng(rng)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def random_kraus(dim: int, n_ops: int, rng: Optional[np.random.Generator] = None) -> List[np.ndarray]:
    """Kraus operators of a random CPTP map: rows of a Haar isometry C^d → C^{n d}."""
    rng = _rng(rng)
    u = random_unitary(n_ops * dim, rng)
    isometry = u[:, :dim]
    return [isometry[k * dim:(k + 1) * dim, :] for k in range(n_ops)]
