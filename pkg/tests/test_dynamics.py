import math

import numpy as np
import pytest

from backflow.channels import compose, from_unitary, is_cp, is_tp, pauli_eigenvalues
from backflow.dynamics import (
    MODELS,
    GeneratorSpec,
    IntegratedFamily,
    LorentzianAmplitude,
    TimeGrid,
    build_model,
    first_zero,
    integrate_generator,
    list_models,
    model_amplitude_damping,
    model_amplitude_damping_lorentzian,
    model_dephasing,
    model_depolarizing,
    model_eternal,
    model_pauli,
    rank_profile,
    resolve_params,
    tp_drift,
)
from backflow.dynamics.integrator import constant_rates, generator_superop
from backflow.errors import ConfigError, DomainError, IntegrationFailure, UnknownModel
from backflow.linalg import PAULI_X, PAULI_Z, SIGMA_MINUS


# --- Time grids ---

def test_time_grid_basics():
    grid = TimeGrid.parse("0.1:3.0:291")
    assert grid.n_points == 291
    assert grid.step == pytest.approx(0.01)
    assert grid.times[-1] == 3.0
    assert len(list(grid.steps())) == 290
    assert grid.index_of(1.0) == 90
    assert grid.index_of(1.005) is None
    assert TimeGrid(**grid.to_dict()) == grid


@pytest.mark.parametrize("spec", ["0:1", "a:1:3", "0:1:2.5"])
def test_time_grid_parse_errors(spec):
    with pytest.raises(ConfigError):
        TimeGrid.parse(spec)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1), (1.0, 1.0, 5), (-0.1, 1.0, 5), (0.0, math.inf, 5)])
def test_time_grid_domain(args):
    with pytest.raises(DomainError):
        TimeGrid(*args)


# --- Families ---

def test_family_starts_at_identity_and_caches(eternal):
    np.testing.assert_array_equal(eternal.evaluate(0.0).superop, np.eye(4))
    assert eternal.evaluate(0.5) is eternal.evaluate(0.5 + 1e-14)
    assert [t for t, _ in eternal.table()] == pytest.approx([0.0, 0.5])
    with pytest.raises(DomainError):
        eternal.evaluate(-0.1)
    with pytest.raises(DomainError):
        eternal.evaluate(math.nan)


def test_eternal_eigenvalues(eternal):
    for t in (0.3, 1.0, 2.5):
        expected = [(1 + math.exp(-2 * t)) / 2, (1 + math.exp(-2 * t)) / 2, math.exp(-2 * t)]
        np.testing.assert_allclose(pauli_eigenvalues(eternal(t)), expected, atol=1e-13)


def test_quadrature_matches_closed_form():
    rates = (lambda t: 1.0, lambda t: 1.0, lambda t: -math.tanh(t))
    by_quad = model_pauli(*rates)
    np.testing.assert_allclose(by_quad(1.3).superop, model_eternal()(1.3).superop, atol=1e-10)


def test_semigroup_eigenvalues():
    np.testing.assert_allclose(pauli_eigenvalues(model_dephasing(0.7)(2.0)), [math.exp(-1.4)] * 2 + [1.0], atol=1e-14)
    np.testing.assert_allclose(pauli_eigenvalues(model_depolarizing(0.5)(1.0)), [math.exp(-1.0)] * 3, atol=1e-14)


def test_amplitude_damping_population():
    f = model_amplitude_damping(0.8)
    out = f(1.5)(np.diag([0.0, 1.0]))
    assert out[1, 1].real == pytest.approx(math.exp(-1.2))
    assert out[0, 0].real == pytest.approx(1 - math.exp(-1.2))
    with pytest.raises(DomainError):
        model_amplitude_damping(-1.0)


# --- Integration ---

def test_generator_is_trace_preserving():
    spec = model_eternal().generator
    for t in (0.0, 0.7, 2.0):
        row = np.eye(2).reshape(-1, order="F") @ generator_superop(spec, t)
        np.testing.assert_allclose(row, 0.0, atol=1e-15)


def test_integrated_matches_analytic():
    analytic = model_amplitude_damping(1.0)
    integrated = IntegratedFamily(analytic.generator, step=1e-3)
    for t in (0.25, 1.0):
        np.testing.assert_allclose(integrated(t).superop, analytic(t).superop, atol=1e-9)
    assert tp_drift(integrated(1.0)) < 1e-12
    integrated_eternal = IntegratedFamily(model_eternal().generator, step=1e-3)
    np.testing.assert_allclose(integrated_eternal(2.0).superop, model_eternal()(2.0).superop, atol=1e-9)


def test_integration_agrees_across_evaluation_orders_up_to_rounding():
    spec = model_eternal().generator
    forward = IntegratedFamily(spec, step=0.01)
    backward = IntegratedFamily(spec, step=0.01)
    forward(0.5)
    forward(1.0)
    backward(1.0)
    np.testing.assert_allclose(forward(1.0).superop, backward(1.0).superop, atol=1e-13)


def test_rk4_is_fourth_order():
    zero = lambda t: 0.0  # noqa: E731
    family = model_pauli(
        zero,
        zero,
        lambda t: 1.0 + math.sin(t),
        integrals=(zero, zero, lambda t: t + 1.0 - math.cos(t)),
    )
    exact = family(2.0).superop
    errors = [np.linalg.norm(IntegratedFamily(family.generator, step=h)(2.0).superop - exact) for h in (0.1, 0.05)]
    assert errors[1] > 0
    assert errors[0] / errors[1] >= 8.0


def _rotation(angle: float, axis: np.ndarray) -> np.ndarray:
    """exp(−i·angle·σ/2) for a Pauli matrix σ."""
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * axis


def test_hamiltonian_generator_integrates_to_a_unitary():
    family = IntegratedFamily(GeneratorSpec(2, (), (), hamiltonian=lambda t: 0.5 * PAULI_Z), step=1e-3)
    for t in (0.5, 1.0, 2.5):
        channel = family(t)
        np.testing.assert_allclose(channel.superop, from_unitary(_rotation(t, PAULI_Z)).superop, atol=1e-10)
        assert is_cp(channel).verdict
        assert is_tp(channel)
        # unitary channels preserve the Hilbert-Schmidt inner product
        np.testing.assert_allclose(channel.superop.conj().T @ channel.superop, np.eye(4), atol=1e-10)
    # the channel has period 2π; pick a step that lands on it exactly
    periodic = IntegratedFamily(GeneratorSpec(2, (), (), hamiltonian=lambda t: 0.5 * PAULI_Z), step=2 * math.pi / 6000)
    np.testing.assert_allclose(periodic(2 * math.pi).superop, np.eye(4), atol=1e-10)
    assert np.max(np.abs(periodic(math.pi).superop - np.eye(4))) > 0.5


def test_time_dependent_hamiltonian():
    # [H(t), H(t')] = 0, so U(t) = exp(−i sin(t) X/2)
    family = IntegratedFamily(GeneratorSpec(2, (), (), hamiltonian=lambda t: 0.5 * math.cos(t) * PAULI_X), step=1e-3)
    for t in (0.4, 1.6):
        expected = from_unitary(_rotation(math.sin(t), PAULI_X))
        np.testing.assert_allclose(family(t).superop, expected.superop, atol=1e-10)


def test_hamiltonian_with_dissipation():
    dephasing = model_dephasing(0.7)
    spec = dephasing.generator
    family = IntegratedFamily(
        GeneratorSpec(2, spec.jump_ops, spec.rates, hamiltonian=lambda t: 0.5 * PAULI_Z), step=1e-3
    )
    for t in (0.5, 2.0):
        expected = compose(from_unitary(_rotation(t, PAULI_Z)), dephasing(t))
        np.testing.assert_allclose(family(t).superop, expected.superop, atol=1e-9)


def test_non_hermitian_hamiltonian_fails_validation():
    spec = GeneratorSpec(2, (), (), hamiltonian=lambda t: SIGMA_MINUS)
    with pytest.raises(IntegrationFailure, match="not Hermitian"):
        integrate_generator(spec, TimeGrid(0.0, 1.0, 3))


@pytest.mark.parametrize("family", [model_depolarizing(0.5), model_amplitude_damping(0.8), model_dephasing(1.2)])
def test_semigroups_compose(family):
    for t, s in ((0.3, 0.4), (1.0, 0.25)):
        np.testing.assert_allclose(
            family(t + s).superop, compose(family(t), family(s)).superop, atol=1e-12
        )


def test_integrate_generator_fills_the_grid():
    grid = TimeGrid(0.0, 1.0, 11)
    family = integrate_generator(model_dephasing(1.0).generator, grid, step=0.01, name="dephasing")
    assert len(family.table()) == 11
    assert family.describe()["route"] == "integrated"


def test_invalid_rates_fail_integration():
    spec = GeneratorSpec(2, (SIGMA_MINUS,), (lambda t: math.nan,))
    with pytest.raises(IntegrationFailure):
        integrate_generator(spec, TimeGrid(0.0, 1.0, 3))
    with pytest.raises(DomainError):
        IntegratedFamily(GeneratorSpec(2, (SIGMA_MINUS,), constant_rates([1.0])), step=0.0)


# --- Lorentzian reservoir ---

def test_lorentzian_first_zero():
    g = LorentzianAmplitude(1.0, 1.0)
    assert g.strong_coupling
    t_star = g.first_zero()
    assert t_star == pytest.approx(1.5 * math.pi)
    assert abs(g(t_star)) < 1e-15
    assert g(t_star - 0.1) > 0 > g(t_star + 0.1)


def test_lorentzian_matches_closed_forms():
    strong = LorentzianAmplitude(1.0, 1.0)
    for t in (0.5, 1.9, 4.0):
        expected = math.exp(-t / 2) * (math.cos(t / 2) + math.sin(t / 2))
        assert strong(t) == pytest.approx(expected, abs=1e-14)
    weak = LorentzianAmplitude(1.0, 0.25)
    assert not weak.strong_coupling
    assert weak.first_zero() is None
    r = math.sqrt(0.5)
    for t in (0.5, 6.0):
        expected = math.exp(-t / 2) * (math.cosh(r * t / 2) + math.sinh(r * t / 2) / r)
        assert weak(t) == pytest.approx(expected, rel=1e-12)


def test_lorentzian_derivative_and_rate():
    g = LorentzianAmplitude(1.0, 1.0)
    h = 1e-6
    for t in (0.7, 2.9, 6.0):
        numeric = (g(t + h) - g(t - h)) / (2 * h)
        assert g.derivative(t) == pytest.approx(numeric, abs=1e-8)
        assert g.rate(t) == pytest.approx(-2 * g.derivative(t) / g(t), rel=1e-9)
    with pytest.raises(DomainError):
        LorentzianAmplitude(0.0, 1.0)


def test_lorentzian_family():
    family = model_amplitude_damping_lorentzian(lam=1.0, gamma0=1.0)
    assert first_zero(family) == pytest.approx(1.5 * math.pi)
    with pytest.raises(DomainError):
        first_zero(model_eternal())
    grid = TimeGrid(0.0, 3 * math.pi, 201)
    ranks = rank_profile(family, grid)
    assert ranks[100] == 1
    assert ranks[99] == ranks[101] == 4


# --- Registry ---

def test_registry_lists_every_model():
    ids = [e.model_id for e in list_models()]
    assert ids == sorted(MODELS)
    assert {"eternal", "lorentzian", "dephasing", "depolarizing", "amplitude_damping"} <= set(ids)
    assert MODELS["lorentzian"].schema()["gamma0"]["default"] == 0.25


def test_resolve_params():
    assert resolve_params("dephasing") == {"gamma": 1.0}
    assert resolve_params("identity", {"dim": 3}) == {"dim": 3}
    with pytest.raises(ConfigError):
        resolve_params("dephasing", {"rate": 1.0})
    with pytest.raises(ConfigError):
        resolve_params("dephasing", {"gamma": -1.0})
    with pytest.raises(ConfigError):
        resolve_params("dephasing", {"gamma": "fast"})
    with pytest.raises(UnknownModel):
        resolve_params("markov")


def test_build_model():
    f = build_model("lorentzian", {"lambda": 1.0, "gamma0": 1.0})
    assert f.params == {"lambda": 1.0, "gamma0": 1.0}
    integrated = build_model("depolarizing", {"gamma": 0.5}, integrate=True)
    assert integrated.route == "integrated"
    np.testing.assert_allclose(integrated(1.0).superop, model_depolarizing(0.5)(1.0).superop, atol=1e-9)
    with pytest.raises(DomainError):
        build_model("completely_depolarizing", integrate=True)
    erased = build_model("completely_depolarizing")
    assert rank_profile(erased, TimeGrid(0.0, 1.0, 3)) == [4, 1, 1]
