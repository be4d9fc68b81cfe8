import numpy as np
import pytest

from backflow.errors import DimensionMismatch, NotADensityOperator, NotHermitian
from backflow.linalg import (
    PAULI_X,
    PAULI_Z,
    DensityOperator,
    HermitianOperator,
    devectorize,
    eigenvalues,
    hermitian_eig,
    is_psd,
    ket,
    maximally_mixed,
    min_eigenvalue,
    numerical_rank,
    partial_trace,
    partial_transpose,
    projector,
    singular_values,
    symmetrize,
    tensor,
    trace_norm,
    vectorize,
)
from backflow.linalg.sampling import random_density, random_hermitian, random_kraus, random_unitary


def test_symmetrize_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        symmetrize(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(DimensionMismatch):
        symmetrize(np.zeros((2, 3)))


def test_density_operator_validation():
    DensityOperator(maximally_mixed(3))
    with pytest.raises(NotADensityOperator):
        DensityOperator(np.eye(2, dtype=complex))
    with pytest.raises(NotADensityOperator):
        DensityOperator(np.diag([1.5, -0.5]).astype(complex))
    rho = DensityOperator.normalized(np.eye(2) / 2 * (1 + 1e-10))
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-15)


def test_hermitian_operator_is_read_only():
    h = HermitianOperator(PAULI_Z)
    with pytest.raises(ValueError):
        h.matrix[0, 0] = 2.0


@pytest.mark.parametrize("dim", [2, 3, 6, 9])
def test_jacobi_matches_lapack(dim, rng):
    h = random_hermitian(dim, rng)
    evals, evecs = hermitian_eig(h)
    np.testing.assert_allclose(evals, np.linalg.eigvalsh(h), atol=1e-12)
    np.testing.assert_allclose(evecs.conj().T @ evecs, np.eye(dim), atol=1e-12)
    np.testing.assert_allclose(h @ evecs, evecs * evals, atol=1e-11)


def test_jacobi_handles_degenerate_and_zero():
    np.testing.assert_allclose(eigenvalues(np.zeros((3, 3))), 0.0)
    np.testing.assert_allclose(eigenvalues(np.eye(4)), 1.0)


def test_trace_norm_and_psd():
    assert trace_norm(PAULI_Z) == pytest.approx(2.0)
    assert trace_norm(PAULI_X + PAULI_Z) == pytest.approx(2 * np.sqrt(2))
    assert is_psd(maximally_mixed(2))
    assert not is_psd(PAULI_Z)
    assert min_eigenvalue(PAULI_Z) == pytest.approx(-1.0)


def test_trace_norm_invariants(rng):
    for dim in (2, 3, 4):
        a = random_hermitian(dim, rng)
        b = random_hermitian(dim, rng)
        u = random_unitary(dim, rng)
        assert trace_norm(a) == pytest.approx(float(np.sum(np.linalg.svd(a, compute_uv=False))), rel=1e-10)
        assert trace_norm(u @ a @ u.conj().T) == pytest.approx(trace_norm(a), rel=1e-10)
        assert trace_norm(a + b) <= trace_norm(a) + trace_norm(b) + 1e-12
        zeros = np.zeros((dim, dim))
        direct_sum = np.block([[a, zeros], [zeros, b]])
        assert trace_norm(direct_sum) == pytest.approx(trace_norm(a) + trace_norm(b), rel=1e-10)


def test_singular_values_are_descending():
    m = np.array([[0, 3], [0.5, 0]], dtype=complex)
    np.testing.assert_allclose(singular_values(m), [3.0, 0.5])


def test_vectorization_is_column_stacking(rng):
    a, x, b = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    np.testing.assert_allclose(vectorize(a @ x @ b), np.kron(b.T, a) @ vectorize(x), atol=1e-12)
    np.testing.assert_array_equal(devectorize(vectorize(x), 3, 3), x)
    with pytest.raises(DimensionMismatch):
        devectorize(np.zeros(5), 2, 2)


def test_partial_trace_of_product_state(rng):
    a, b = random_density(2, rng), random_density(3, rng)
    ab = tensor(a, b)
    np.testing.assert_allclose(partial_trace(ab, 2, 3, keep="A"), a, atol=1e-12)
    np.testing.assert_allclose(partial_trace(ab, 2, 3, keep="B"), b, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        partial_trace(ab, 3, 3)


def test_partial_transpose_detects_entanglement():
    bell = projector((np.kron(ket(0, 2), ket(0, 2)) + np.kron(ket(1, 2), ket(1, 2))) / np.sqrt(2))
    assert eigenvalues(partial_transpose(bell, 2, 2, "B"))[0] == pytest.approx(-0.5)
    np.testing.assert_allclose(
        partial_transpose(partial_transpose(bell, 2, 2, "A"), 2, 2, "B"), bell.T, atol=1e-15
    )


def test_numerical_rank(rng):
    kraus = random_kraus(2, 2, rng)
    np.testing.assert_allclose(sum(k.conj().T @ k for k in kraus), np.eye(2), atol=1e-12)
    assert numerical_rank(projector(ket(0, 3))) == 1
    assert numerical_rank(np.zeros((2, 2))) == 0
