"""Phase sensitivity of magnetic-sublevel measurements in Larmor precession."""

from .combiner import scaling_table, sequential_uncertainties
from .edm import EdmConfig, fringe_scan, robustness_threshold, stretched_splitting
from .observables import even_parity_probability, harmonic_weights
from .precession import PrecessionSetup, expectation_fx, single_level_uncertainty, sublevel_probabilities
from .spin import SpinF, StateVector, basis_state, wigner_small_d
from .transverse import TiltedFieldSetup, beta_from_phi, tilted_precession

__all__ = [
    "EdmConfig",
    "PrecessionSetup",
    "SpinF",
    "StateVector",
    "TiltedFieldSetup",
    "basis_state",
    "beta_from_phi",
    "even_parity_probability",
    "expectation_fx",
    "fringe_scan",
    "harmonic_weights",
    "robustness_threshold",
    "scaling_table",
    "sequential_uncertainties",
    "single_level_uncertainty",
    "stretched_splitting",
    "sublevel_probabilities",
    "tilted_precession",
    "wigner_small_d",
]
