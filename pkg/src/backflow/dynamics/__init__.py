from .family import (
    AnalyticFamily,
    DynamicalFamily,
    IntegratedFamily,
    TimeGrid,
    integrate_generator,
    rank_profile,
    tp_drift,
)
from .integrator import GeneratorSpec, generator_superop, propagate, rk4_step, zero_generator
from .models import (
    MODELS,
    LorentzianAmplitude,
    ModelEntry,
    ParamSpec,
    amplitude_damping_channel,
    build_model,
    first_zero,
    list_models,
    model_amplitude_damping,
    model_amplitude_damping_lorentzian,
    model_completely_depolarizing,
    model_dephasing,
    model_depolarizing,
    model_eternal,
    model_identity,
    model_pauli,
    resolve_params,
)
