"""Gauge-fixed perturbative decomposition of evolution operators for
Raman-driven trapped ions.

Submodules
----------
hilbert    dense operators on (atom) x (truncated Fock modes)
trigpoly   operator-valued trigonometric polynomials with exact frequency keys
perturb    C_n / Z_n generators and the evolutors assembled from them
raman      Lambda-Raman model builders and the analytic effective model
propagate  midpoint-exponential reference propagator and fidelity metrics
cli        config-driven decompose / compare / sweep commands
"""

from .errors import (
    ConfigError,
    DuplicateDetuning,
    InvalidHamiltonian,
    InvalidIndex,
    InvalidScheme,
    InvalidState,
    Mismatch,
    NearResonance,
    NumericError,
    RamanPertError,
    SecularTerm,
    SpaceMismatch,
    StepTooLarge,
)
from .hilbert import Operator, SpaceSpec

__version__ = "0.1.0"
