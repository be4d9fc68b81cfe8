from .channel import (
    ChoiMatrix,
    CPVerdict,
    QuantumChannel,
    apply,
    apply_extended,
    completely_depolarizing,
    compose,
    condition_number,
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
    scaling_map,
    to_choi,
    to_json,
    transpose_map,
)
