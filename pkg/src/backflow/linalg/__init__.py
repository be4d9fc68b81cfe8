from .operators import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    PAULIS,
    SIGMA_MINUS,
    ComplexMatrix,
    DensityOperator,
    HermitianOperator,
    Operator,
    as_array,
    as_hermitian,
    devectorize,
    eigenvalues,
    frobenius_norm,
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
