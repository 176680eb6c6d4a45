"""Quantum polarization of two-mode N-photon states.

Stokes operators and central moments, six-class rotation-invariance
classification of three-photon states, a heralded preparation-chain
simulator, maximum-likelihood tomography, and SPDC spectral analysis.
"""

from .fock import (
    ModeUnitary,
    basis,
    density,
    fidelity,
    fock_ket,
    lift_mode_unitary,
    purity,
    stokes_operators,
    su2_rotation,
    validate,
)
from .moments import (
    PolarizationClass,
    check_bounds,
    classify,
    invariance,
    moment_along,
    moment_tensors,
    sphere_field,
    uncertainty_product,
    variance_sum,
)
from .prep import named_state

__version__ = "0.1.0"

__all__ = [
    "ModeUnitary", "basis", "density", "fidelity", "fock_ket", "lift_mode_unitary", "purity",
    "stokes_operators", "su2_rotation", "validate",
    "PolarizationClass", "check_bounds", "classify", "invariance", "moment_along",
    "moment_tensors", "sphere_field", "uncertainty_product", "variance_sum",
    "named_state",
]
