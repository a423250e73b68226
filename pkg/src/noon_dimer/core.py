"""Two-mode Bose-Hubbard dimer: parameters, Fock basis, spin operators and
the tridiagonal Hamiltonian.

Basis index ``n`` is the occupation of site 2, so ``n = 0`` is ``|N, 0>`` with
``S_z = +N/2``.  Units are reduced (hbar = 1); the caller picks the time unit,
conventionally ``N*U = 1``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import DomainError, InvalidParameterError

NORM_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Physical configuration of the dimer.

    Attributes
    ----------
    N : int
        Number of bosons.
    U : float
        On-site interaction (attractive for ``U > 0``).
    J : float
        Hopping frequency, ``J >= 0``.
    Delta : float
        Site energy bias ``eps_2 - eps_1``.
    """

    N: int
    U: float
    J: float = 0.0
    Delta: float = 0.0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise InvalidParameterError(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 1:
            raise InvalidParameterError(f"N must be >= 1, got {self.N}")
        for name in ("U", "J", "Delta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.J < 0:
            raise InvalidParameterError(f"J must be >= 0, got {self.J}")

    @classmethod
    def reduced(cls, N: int, J: float = 0.0, Delta: float = 0.0, NU: float = 1.0):
        """Parameters with ``U`` chosen so that ``N*U == NU`` (default 1)."""
        return cls(N=N, U=NU / N, J=J, Delta=Delta)

    @property
    def NU(self) -> float:
        return self.N * self.U

    @property
    def u(self) -> float:
        """Dimensionless nonlinearity ``N*U/J`` (infinite at ``J = 0``)."""
        return math.inf if self.J == 0 else self.NU / self.J

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def sz_diagonal(N: int) -> np.ndarray:
    """Eigenvalues of ``S_z`` along the Fock basis: ``N/2 - n``."""
    return N / 2.0 - np.arange(N + 1)


def ladder_elements(N: int) -> np.ndarray:
    """``sqrt((n+1)(N-n))`` for n = 0..N-1, the ``S_+`` matrix elements."""
    n = np.arange(N)
    return np.sqrt((n + 1.0) * (N - n))


def sx_offdiagonal(N: int) -> np.ndarray:
    """Off-diagonal of the real symmetric tridiagonal ``S_x``."""
    return 0.5 * ladder_elements(N)


def spin_matrices(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense ``(S_x, S_y, S_z)`` in the Fock basis (for small N and tests)."""
    t = ladder_elements(N)
    sx = np.diag(0.5 * t, 1) + np.diag(0.5 * t, -1)
    sy = np.diag(-0.5j * t, 1) + np.diag(0.5j * t, -1)
    sz = np.diag(sz_diagonal(N))
    return sx.astype(complex), sy, sz.astype(complex)


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    """Real symmetric tridiagonal matrix; off-diagonal stored once."""

    diag: np.ndarray
    offdiag: np.ndarray
    params: ModelParams

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral norm (Gershgorin)."""
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.offdiag)
        row[1:] += np.abs(self.offdiag)
        return float(row.max())


def build_hamiltonian(params: ModelParams) -> TridiagonalHamiltonian:
    """Tridiagonal form of ``H = -U S_z^2 - Delta S_z - J S_x``.

    The n-independent constant produced by the ``-(U/2) a^+ a^+ a a`` form is
    dropped.
    """
    if not isinstance(params, ModelParams):
        raise InvalidParameterError("build_hamiltonian expects ModelParams")
    sz = sz_diagonal(params.N)
    diag = -params.U * sz**2 - params.Delta * sz
    off = -params.J * sx_offdiagonal(params.N)
    return TridiagonalHamiltonian(_readonly(diag), _readonly(off), params)


def critical_coupling(N: int, U: float, Delta: float = 0.0) -> float:
    """Hopping ``J_c`` at which the classical landscape bifurcates.

    ``J_c = [(NU)^(2/3) - |Delta|^(2/3)]^(3/2)``; pitchfork at ``Delta = 0``
    (``J_c = NU``), saddle-node otherwise.
    """
    NU = N * U
    if NU <= 0:
        raise DomainError("critical coupling requires N*U > 0")
    d = abs(Delta)
    if d > NU:
        raise DomainError(f"|Delta| = {d} exceeds N*U = {NU}: no bifurcation")
    bracket = NU ** (2.0 / 3.0) - d ** (2.0 / 3.0)
    return float(max(bracket, 0.0) ** 1.5)


@dataclass(frozen=True)
class QuantumState:
    """Normalized amplitudes ``c_n`` over ``|N-n, n>``."""

    N: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (self.N + 1,):
            raise InvalidParameterError(
                f"expected {self.N + 1} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidParameterError(f"state is not normalized (norm = {norm!r})")
        object.__setattr__(self, "amps", _readonly(amps))

    @classmethod
    def from_vector(cls, amps, normalize: bool = False) -> "QuantumState":
        amps = np.asarray(amps, dtype=complex)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(N=amps.shape[0] - 1, amps=amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def overlap(self, other: "QuantumState") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other: "QuantumState") -> float:
        return abs(self.overlap(other)) ** 2

    def expect_spin(self) -> np.ndarray:
        """``(<S_x>, <S_y>, <S_z>)``."""
        return spin_expectation(self.amps)


def spin_expectation(amps: np.ndarray) -> np.ndarray:
    N = amps.shape[0] - 1
    t = ladder_elements(N)
    splus = np.sum(np.conj(amps[:-1]) * t * amps[1:])
    sz = np.sum(sz_diagonal(N) * np.abs(amps) ** 2)
    return np.array([splus.real, splus.imag, sz])


def coherent_state(N: int, theta: float, phi: float = 0.0) -> QuantumState:
    """Spin coherent state pointing along ``(theta, phi)`` on the Bloch sphere.

    ``c_n = sqrt(C(N,n)) cos^(N-n)(theta/2) sin^n(theta/2) exp(i n phi)``.
    Magnitudes are built in log space so large N does not overflow.
    """
    if not 0.0 <= theta <= math.pi + 1e-12:
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    n = np.arange(N + 1)
    c = abs(math.cos(theta / 2.0))
    s = abs(math.sin(theta / 2.0))
    log_mag = 0.5 * (gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1))
    log_mag = log_mag + xlogy(N - n, c) + xlogy(n, s)
    amps = np.exp(log_mag) * np.exp(1j * n * phi)
    return QuantumState(N, amps / np.linalg.norm(amps))


def cat_state(N: int, relative_phase: float = 0.0) -> QuantumState:
    """``(|N,0> + exp(i*relative_phase)|0,N>)/sqrt(2)``.

    ``relative_phase = 0`` is the EvenCat, ``pi`` the OddCat.
    """
    amps = np.zeros(N + 1, dtype=complex)
    amps[0] = 1 / math.sqrt(2)
    amps[N] += np.exp(1j * relative_phase) / math.sqrt(2)
    return QuantumState(N, amps)


def fock_state(N: int, n: int) -> QuantumState:
    amps = np.zeros(N + 1, dtype=complex)
    amps[n] = 1.0
    return QuantumState(N, amps)
