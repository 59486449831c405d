"""Cavity-assisted off-resonant Raman echo quantum memory: analytic spectra and time-domain simulation."""

from .core import (
    AdiabaticityError,
    AdiabaticityWarning,
    CavityGeometry,
    ParameterError,
    SystemParams,
    derive_gamma_r,
    matching_rabi_ratio,
    transmission_coefficient,
    with_matched_rabi,
)
from .dynamics import (
    EnsembleSample,
    Trajectory,
    run_pipeline,
    sample_ensemble,
    simulate_retrieval,
    simulate_storage_effective,
    simulate_storage_full,
)
from .kernels import BACKEND
from .pulses import FrequencyGrid, ModeSpectrum, PulseTrain, gaussian_mode
from .rephasing import pulse_area_propagate, rotate_coherence, sequence_map
from .spectral import (
    EfficiencyReport,
    echo_efficiency,
    fidelity,
    matching_check,
    s_function,
    ss_function,
    storage_efficiency,
)

__version__ = "0.1.0"
