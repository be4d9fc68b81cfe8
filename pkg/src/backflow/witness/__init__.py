from .construction import (
    ReferenceStates,
    WitnessCertificate,
    WitnessPair,
    construct_witness,
    max_mixing_weight,
    reference_states,
    verify_witness,
)
from .kernel import KernelWitness, kernel_witness
from .separable import (
    HelstromPreimage,
    HelstromRescaling,
    certify_separable,
    helstrom_preimage,
    helstrom_rescale,
    in_separable_ball,
    is_ppt,
    rescaling_weights,
    separable_ball_radius,
    separable_witness,
)
