import numpy as np
import pytest

from backflow.analysis import HelstromSplit, helstrom_norm
from backflow.channels import (
    apply,
    apply_extended,
    completely_depolarizing,
    compose,
    extend_with_identity,
    from_choi,
    from_json,
    from_kraus,
    from_unitary,
    identity_channel,
    inverse,
    is_cp,
    is_hermiticity_preserving,
    is_pauli_diagonal,
    is_positive_sampled,
    is_tp,
    pauli_channel,
    pauli_cp,
    pauli_eigenvalues,
    pauli_positivity,
    pauli_transfer_matrix,
    to_choi,
    to_json,
    transpose_map,
)
from backflow.dynamics import build_model, list_models, model_amplitude_damping
from backflow.errors import DimensionMismatch, IllConditioned, SingularMap
from backflow.linalg import DensityOperator, trace_norm
from backflow.linalg.sampling import random_density, random_hermitian, random_kraus, random_unitary


@pytest.mark.parametrize("dim", [2, 3])
def test_choi_round_trip(dim, rng):
    for _ in range(20):
        c = from_kraus(random_kraus(dim, int(rng.integers(1, 4)), rng))
        back = from_choi(to_choi(c))
        np.testing.assert_allclose(back.superop, c.superop, atol=1e-11)


def test_choi_of_identity_is_phi_plus():
    choi = to_choi(identity_channel(2)).array
    phi = np.zeros(4, dtype=complex)
    phi[[0, 3]] = 1 / np.sqrt(2)
    np.testing.assert_allclose(choi, np.outer(phi, phi.conj()), atol=1e-15)


def test_cptp_channels_pass_predicates(rng):
    c = from_kraus(random_kraus(2, 3, rng))
    assert is_cp(c).verdict
    assert is_tp(c)
    assert is_hermiticity_preserving(c)
    assert is_positive_sampled(c, n_samples=100, rng=rng)


def test_transpose_is_positive_but_not_cp(rng):
    t = transpose_map(2)
    verdict, lam = is_cp(t)
    assert not verdict
    assert lam == pytest.approx(-0.5)
    assert is_tp(t)
    assert is_positive_sampled(t, n_samples=200, rng=rng)
    m = np.array([[1, 2j], [3, 4]], dtype=complex)
    np.testing.assert_array_equal(apply(t, m), m.T)


def test_scaled_map_is_not_tp():
    assert not is_tp(from_kraus([np.eye(2) * 0.5]))


def test_pauli_channel_conditions():
    c = pauli_channel(0.5, 0.4, 0.3)
    assert is_pauli_diagonal(c)
    np.testing.assert_allclose(pauli_eigenvalues(c), [0.5, 0.4, 0.3], atol=1e-15)
    assert pauli_cp(0.5, 0.4, 0.3) == is_cp(c).verdict
    # Bloch reflection: positive, not CP
    assert pauli_positivity(1.0, 1.0, -1.0)
    assert not pauli_cp(1.0, 1.0, -1.0)
    assert not is_cp(pauli_channel(1.0, 1.0, -1.0)).verdict
    assert not is_pauli_diagonal(from_kraus([np.diag([1.0, 0.5]), np.sqrt(0.75) * np.array([[0, 1], [0, 0]])]))


def test_pauli_transfer_matrix_of_unitary_is_rotation():
    r = pauli_transfer_matrix(from_unitary(np.array([[0, 1], [1, 0]], dtype=complex)))
    np.testing.assert_allclose(r, np.diag([1.0, 1.0, -1.0, -1.0]), atol=1e-15)


def test_compose_order(rng):
    a = from_unitary(random_unitary(2, rng))
    b = from_kraus(random_kraus(2, 2, rng))
    rho = random_density(2, rng)
    np.testing.assert_allclose(apply(compose(a, b), rho), apply(a, apply(b, rho)), atol=1e-12)
    np.testing.assert_allclose((a @ b).superop, compose(a, b).superop)
    with pytest.raises(DimensionMismatch):
        compose(a, identity_channel(3))


def test_inverse(rng):
    c = pauli_channel(0.9, 0.8, 0.7)
    inv = inverse(c)
    np.testing.assert_allclose(compose(c, inv).superop, np.eye(4), atol=1e-12)
    with pytest.raises(SingularMap):
        inverse(completely_depolarizing(2))
    with pytest.raises(IllConditioned) as info:
        inverse(pauli_channel(1.0, 1.0, 1e-9))
    assert info.value.condition_number == pytest.approx(1e9, rel=1e-6)


def test_extension_matches_blockwise_application(rng):
    c = from_kraus(random_kraus(2, 2, rng))
    x = random_hermitian(6, rng)
    full = extend_with_identity(c, 3)
    np.testing.assert_allclose(apply(full, x), apply_extended(c, 3, x), atol=1e-12)
    with pytest.raises(DimensionMismatch):
        apply_extended(c, 2, x)


def test_extension_of_transpose_breaks_positivity():
    phi = np.zeros(4, dtype=complex)
    phi[[0, 3]] = 1 / np.sqrt(2)
    out = apply_extended(transpose_map(2), 2, np.outer(phi, phi.conj()))
    assert trace_norm(out) == pytest.approx(2.0)


def test_cptp_maps_contract_helstrom_norm(rng):
    violations = 0
    for _ in range(500):
        e = from_kraus(random_kraus(2, int(rng.integers(1, 5)), rng))
        for _ in range(20):
            split = HelstromSplit(
                DensityOperator.normalized(random_density(2, rng)),
                DensityOperator.normalized(random_density(2, rng)),
                float(rng.uniform(0.01, 0.99)),
            )
            if trace_norm(apply(e, split.delta)) > helstrom_norm(split) + 1e-9:
                violations += 1
    assert violations == 0


def test_json_round_trip(rng):
    c = from_kraus(random_kraus(2, 2, rng))
    np.testing.assert_array_equal(from_json(to_json(c)).superop, c.superop)


def test_sampled_positivity_catches_non_positive_maps(rng):
    # Bloch vector scaled past the unit ball along z
    assert not is_positive_sampled(pauli_channel(1.0, 1.0, -1.5), n_samples=50, rng=rng)
    assert not is_positive_sampled(pauli_channel(1.2, 0.0, 0.0), n_samples=200, rng=rng)
    # positive but not CP: sampling cannot tell it from a channel
    assert is_positive_sampled(pauli_channel(1.0, 1.0, -1.0), n_samples=200, rng=rng)


def test_cp_implies_sampled_positivity_across_the_model_zoo(rng):
    for entry in list_models():
        family = build_model(entry.model_id)
        for t in (0.5, 1.5):
            channel = family(t)
            assert is_cp(channel).verdict, entry.model_id
            assert is_positive_sampled(channel, n_samples=100, rng=rng), entry.model_id


def test_compose_is_associative(rng):
    a, b, c = (from_kraus(random_kraus(3, 2, rng)) for _ in range(3))
    np.testing.assert_allclose(
        compose(compose(a, b), c).superop, compose(a, compose(b, c)).superop, atol=1e-12
    )


@pytest.mark.parametrize("t", [0.1, 1.0])
def test_inverse_of_amplitude_damping_is_not_cp(t):
    channel = model_amplitude_damping(1.0)(t)
    inv = inverse(channel)
    assert is_tp(inv)
    assert not is_cp(inv).verdict


def test_inverse_of_pauli_channel_inverts_eigenvalues():
    inv = inverse(pauli_channel(0.5, 0.5, 0.25))
    np.testing.assert_allclose(pauli_eigenvalues(inv), [2.0, 2.0, 4.0], atol=1e-12)
    assert not pauli_cp(2.0, 2.0, 4.0)
    assert not is_cp(inv).verdict


def test_extended_channels_contract_trace_distance(rng):
    for _ in range(50):
        c = from_kraus(random_kraus(2, int(rng.integers(1, 4)), rng))
        delta = random_density(4, rng) - random_density(4, rng)
        assert trace_norm(apply_extended(c, 2, delta)) <= trace_norm(delta) + 1e-12
