"""Two-mode bosonic dimer: spectra, sweeps and NOON-state interferometry."""

__version__ = "0.1.0"

from .core import (
    ModelParams,
    QuantumState,
    TridiagonalHamiltonian,
    build_hamiltonian,
    cat_state,
    coherent_state,
    critical_coupling,
    fock_state,
)
from .errors import (
    ConfigError,
    DegeneracyError,
    DimerError,
    DomainError,
    InvalidParameterError,
    LowConfidenceError,
    NumericalError,
    UndefinedEstimateError,
)
from .spectrum import SpectrumSnapshot, f_susceptibility, spectrum

__all__ = [
    "__version__",
    "ModelParams",
    "QuantumState",
    "TridiagonalHamiltonian",
    "build_hamiltonian",
    "cat_state",
    "coherent_state",
    "critical_coupling",
    "fock_state",
    "SpectrumSnapshot",
    "f_susceptibility",
    "spectrum",
    "ConfigError",
    "DegeneracyError",
    "DimerError",
    "DomainError",
    "InvalidParameterError",
    "LowConfidenceError",
    "NumericalError",
    "UndefinedEstimateError",
]
