# src/backflow/dynamics/models.py

"""
Model zoo: qubit dynamical families in closed form, each with its time-local
generator where one exists.

Pauli models use the generator ½ Σ_i γ_i(t) (σ_i ρ σ_i − ρ), so the Bloch
component j decays as λ_j(t) = exp(−∫₀ᵗ Σ_{i≠j} γ_i).
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from ..channels import QuantumChannel, completely_depolarizing, from_kraus, pauli_channel
from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import ConfigError, DomainError, UnknownModel
from ..linalg import PAULI_X, PAULI_Y, PAULI_Z, SIGMA_MINUS
from .family import AnalyticFamily, DynamicalFamily, IntegratedFamily
from .integrator import GeneratorSpec, RateFn, constant_rates, zero_generator

SERIES_TERMS = 24


# --- Pauli channels ---

def _integrated(rate: RateFn) -> Callable[[float], float]:
    return lambda t: quad(rate, 0.0, t, limit=200)[0] if t > 0 else 0.0


def pauli_generator(rates: Sequence[RateFn]) -> GeneratorSpec:
    halves = tuple((lambda r: (lambda t: 0.5 * r(t)))(r) for r in rates)
    return GeneratorSpec(2, (PAULI_X, PAULI_Y, PAULI_Z), halves)


def model_pauli(
    gamma1: RateFn,
    gamma2: RateFn,
    gamma3: RateFn,
    integrals: Optional[Sequence[Callable[[float], float]]] = None,
    name: str = "pauli",
    params: Optional[Dict[str, Any]] = None,
) -> AnalyticFamily:
    """Pauli-diagonal qubit family; ``integrals`` are ∫₀ᵗγ_i, computed by quadrature if omitted."""
    rates = (gamma1, gamma2, gamma3)
    big = tuple(integrals) if integrals is not None else tuple(_integrated(r) for r in rates)

    def channel_at(t: float) -> QuantumChannel:
        g = [f(t) for f in big]
        total = sum(g)
        return pauli_channel(*(math.exp(-(total - g[j])) for j in range(3)))

    return AnalyticFamily(2, name, channel_at, params=params, generator=pauli_generator(rates))


def _constant_pauli(values: Sequence[float], name: str, params: Dict[str, Any]) -> AnalyticFamily:
    rates = constant_rates(values)
    integrals = tuple((lambda v: (lambda t: v * t))(float(v)) for v in values)
    return model_pauli(*rates, integrals=integrals, name=name, params=params)


def model_eternal() -> AnalyticFamily:
    """γ = (1, 1, −tanh t): P-divisible, never CP-divisible for t > 0."""
    rates = (lambda t: 1.0, lambda t: 1.0, lambda t: -math.tanh(t))
    integrals = (lambda t: t, lambda t: t, lambda t: -math.log(math.cosh(t)))
    return model_pauli(*rates, integrals=integrals, name="eternal", params={})


def model_dephasing(gamma: float = 1.0) -> AnalyticFamily:
    return _constant_pauli((0.0, 0.0, gamma), "dephasing", {"gamma": gamma})


def model_depolarizing(gamma: float = 1.0) -> AnalyticFamily:
    return _constant_pauli((gamma, gamma, gamma), "depolarizing", {"gamma": gamma})


def model_identity(dim: int = 2) -> AnalyticFamily:
    eye = np.eye(dim * dim, dtype=complex)
    return AnalyticFamily(dim, "identity", lambda t: QuantumChannel(dim, eye), params={"dim": dim}, generator=zero_generator(dim))


def model_completely_depolarizing(dim: int = 2) -> AnalyticFamily:
    """Λ₀ = I and Λ_t = Tr(·)I/d for every t > 0; no time-local generator."""
    erased = completely_depolarizing(dim)
    return AnalyticFamily(dim, "completely_depolarizing", lambda t: erased, params={"dim": dim})


# --- Amplitude damping ---

def amplitude_damping_channel(g: float) -> QuantumChannel:
    """Kraus pair diag(1, G), √(1−G²)|0⟩⟨1| for a real amplitude G."""
    k0 = np.diag([1.0, g]).astype(complex)
    k1 = math.sqrt(max(0.0, 1.0 - g * g)) * SIGMA_MINUS
    return from_kraus([k0, k1])


def model_amplitude_damping(gamma0: float = 1.0) -> AnalyticFamily:
    """Constant-rate decay: excited population e^{−γ₀t}."""
    if gamma0 < 0:
        raise DomainError(f"gamma0 must be non-negative, got {gamma0}")
    spec = GeneratorSpec(2, (SIGMA_MINUS,), constant_rates([gamma0]))
    return AnalyticFamily(
        2,
        "amplitude_damping",
        lambda t: amplitude_damping_channel(math.exp(-0.5 * gamma0 * t)),
        params={"gamma0": gamma0},
        generator=spec,
    )


class LorentzianAmplitude:
    """
    On-resonance amplitude G(t) for a Lorentzian reservoir of width λ and
    coupling γ₀. With q = λ² − 2γ₀λ:

        G(t) = e^{−λt/2} [C(t) + λ S(t)],
        C = cosh(√q t/2),  S = sinh(√q t/2)/√q

    C and S are continued to q < 0 through cos/sin and summed as series
    when |q|t²/4 is small, so both coupling regimes share one formula.
    """

    def __init__(self, lam: float, gamma0: float):
        if lam <= 0 or gamma0 <= 0:
            raise DomainError(f"lambda and gamma0 must be positive, got lambda={lam}, gamma0={gamma0}")
        self.lam = lam
        self.gamma0 = gamma0
        self.q = lam * lam - 2.0 * gamma0 * lam

    @property
    def strong_coupling(self) -> bool:
        return 2.0 * self.gamma0 > self.lam

    def _cs(self, t: float):
        z = self.q * t * t / 4.0
        if abs(z) < 1.0:
            c = s = 0.0
            term_c, term_s = 1.0, 1.0
            for n in range(SERIES_TERMS):
                c += term_c
                s += term_s
                term_c *= z / ((2 * n + 1) * (2 * n + 2))
                term_s *= z / ((2 * n + 2) * (2 * n + 3))
            return c, 0.5 * t * s
        root = math.sqrt(abs(self.q))
        x = 0.5 * root * t
        if self.q > 0:
            return math.cosh(x), math.sinh(x) / root
        return math.cos(x), math.sin(x) / root

    def __call__(self, t: float) -> float:
        c, s = self._cs(t)
        return math.exp(-0.5 * self.lam * t) * (c + self.lam * s)

    def derivative(self, t: float) -> float:
        _, s = self._cs(t)
        return -self.gamma0 * self.lam * math.exp(-0.5 * self.lam * t) * s

    def rate(self, t: float) -> float:
        """γ(t) = −2 G'/G; infinite at zeros of G."""
        c, s = self._cs(t)
        denom = c + self.lam * s
        if denom == 0.0:
            return math.inf
        return 2.0 * self.gamma0 * self.lam * s / denom

    def first_zero(self) -> Optional[float]:
        """First t > 0 with G(t) = 0, or None in the weak-coupling regime."""
        if not self.strong_coupling:
            return None
        w = math.sqrt(2.0 * self.gamma0 * self.lam - self.lam * self.lam)
        return 2.0 * (math.pi - math.atan(w / self.lam)) / w


def model_amplitude_damping_lorentzian(lam: float = 1.0, gamma0: float = 0.25) -> AnalyticFamily:
    g = LorentzianAmplitude(lam, gamma0)
    spec = GeneratorSpec(2, (SIGMA_MINUS,), (g.rate,))
    family = AnalyticFamily(
        2,
        "lorentzian",
        lambda t: amplitude_damping_channel(g(t)),
        params={"lambda": lam, "gamma0": gamma0},
        generator=spec,
    )
    family.amplitude = g
    return family


def first_zero(family: DynamicalFamily) -> Optional[float]:
    amplitude = getattr(family, "amplitude", None)
    if amplitude is None:
        raise DomainError(f"Model {family.name!r} has no amplitude G(t)")
    return amplitude.first_zero()


# --- Registry ---

@dataclass(frozen=True)
class ParamSpec:
    name: str
    default: float
    description: str
    positive: bool = True
    integer: bool = False


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    description: str
    params: List[ParamSpec]
    builder: Callable[..., AnalyticFamily]
    has_generator: bool = True

    def schema(self) -> Dict[str, Any]:
        return {
            p.name: {"default": p.default, "type": "int" if p.integer else "float", "positive": p.positive, "description": p.description}
            for p in self.params
        }


def _rate(name: str, default: float, what: str, positive: bool = False) -> ParamSpec:
    return ParamSpec(name, default, what, positive=positive)


MODELS: Dict[str, ModelEntry] = {
    e.model_id: e
    for e in [
        ModelEntry(
            "identity",
            "Λ_t = I for all t.",
            [ParamSpec("dim", 2, "Hilbert space dimension", integer=True)],
            lambda dim: model_identity(int(dim)),
        ),
        ModelEntry(
            "amplitude_damping",
            "Constant-rate qubit decay to |0⟩ (semigroup).",
            [_rate("gamma0", 1.0, "decay rate", positive=True)],
            model_amplitude_damping,
        ),
        ModelEntry(
            "dephasing",
            "Constant-rate σ_z Pauli dephasing (semigroup).",
            [_rate("gamma", 1.0, "dephasing rate", positive=True)],
            model_dephasing,
        ),
        ModelEntry(
            "depolarizing",
            "Equal constant Pauli rates (semigroup).",
            [_rate("gamma", 1.0, "rate per Pauli channel", positive=True)],
            model_depolarizing,
        ),
        ModelEntry(
            "pauli",
            "Constant Pauli rates (γ1, γ2, γ3); negative rates allowed if the map stays CP.",
            [_rate("gamma1", 1.0, "σ_x rate"), _rate("gamma2", 1.0, "σ_y rate"), _rate("gamma3", 1.0, "σ_z rate")],
            lambda gamma1, gamma2, gamma3: _constant_pauli(
                (gamma1, gamma2, gamma3), "pauli", {"gamma1": gamma1, "gamma2": gamma2, "gamma3": gamma3}
            ),
        ),
        ModelEntry(
            "eternal",
            "Pauli rates (1, 1, −tanh t): P-divisible but never CP-divisible.",
            [],
            model_eternal,
        ),
        ModelEntry(
            "lorentzian",
            "Exact on-resonance amplitude damping with a Lorentzian reservoir; strong coupling when 2γ0 > λ.",
            [_rate("lambda", 1.0, "reservoir width λ", positive=True), _rate("gamma0", 0.25, "coupling strength γ0", positive=True)],
            lambda **kw: model_amplitude_damping_lorentzian(lam=kw["lambda"], gamma0=kw["gamma0"]),
        ),
        ModelEntry(
            "completely_depolarizing",
            "Λ_t = Tr(·)I/d for t > 0 (non-bijective).",
            [ParamSpec("dim", 2, "Hilbert space dimension", integer=True)],
            lambda dim: model_completely_depolarizing(int(dim)),
            has_generator=False,
        ),
    ]
}


def list_models() -> List[ModelEntry]:
    return [MODELS[k] for k in sorted(MODELS)]


def resolve_params(model_id: str, params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Fills defaults and type-checks parameters against the model schema."""
    if model_id not in MODELS:
        raise UnknownModel(f"Unknown model {model_id!r}; available: {', '.join(sorted(MODELS))}")
    entry = MODELS[model_id]
    params = dict(params or {})
    known = {p.name for p in entry.params}
    unknown = sorted(set(params) - known)
    if unknown:
        raise ConfigError(f"Model {model_id!r} has no parameter(s): {', '.join(unknown)}")
    resolved: Dict[str, Any] = {}
    for p in entry.params:
        raw = params.get(p.name, p.default)
        try:
            value = int(raw) if p.integer else float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"Parameter {p.name!r} of model {model_id!r} must be numeric, got {raw!r}")
        if not math.isfinite(value):
            raise ConfigError(f"Parameter {p.name!r} of model {model_id!r} must be finite")
        if p.positive and value <= 0:
            raise ConfigError(f"Parameter {p.name!r} of model {model_id!r} must be positive, got {value}")
        resolved[p.name] = value
    return resolved


def build_model(
    model_id: str,
    params: Optional[Dict[str, Any]] = None,
    integrate: bool = False,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> DynamicalFamily:
    """Builds a zoo family, analytic by default or through its generator when ``integrate`` is set."""
    resolved = resolve_params(model_id, params)
    family = MODELS[model_id].builder(**resolved)
    if not integrate:
        return family
    if family.generator is None:
        raise DomainError(f"Model {model_id!r} has no time-local generator to integrate")
    return IntegratedFamily(family.generator, name=model_id, step=tol.step, tp_drift=tol.tp_drift, params=resolved)
