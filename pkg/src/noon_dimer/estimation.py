"""Port-occupation statistics and phase estimation.

``n`` counts atoms leaving through port 2.  After the protocol an even state
ends in ``n = 0`` and an odd state in ``n = N``, so the two-port ratio
``r = P(N) / (P(0) + P(N))`` reads ``sin^2(N phi / 2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import QuantumState
from .errors import DomainError, InvalidParameterError, LowConfidenceError, UndefinedEstimateError

PROB_TOL = 1e-10
REJECTION_THRESHOLD = 0.5


@dataclass(frozen=True)
class OccupationDistribution:
    """``P(n)`` for ``n = 0..N``; ``sample_count`` is set for empirical data."""

    N: int
    probabilities: np.ndarray
    sample_count: Optional[int] = None

    def __post_init__(self):
        P = np.array(self.probabilities, dtype=float)
        if P.shape != (self.N + 1,):
            raise InvalidParameterError(f"expected {self.N + 1} probabilities, got {P.shape}")
        if (P < -PROB_TOL).any():
            raise InvalidParameterError("probabilities must be non-negative")
        if abs(P.sum() - 1.0) > PROB_TOL:
            raise InvalidParameterError(f"probabilities sum to {P.sum()!r}, not 1")
        P = np.clip(P, 0.0, None)
        P.setflags(write=False)
        object.__setattr__(self, "probabilities", P)

    @property
    def P0(self) -> float:
        return float(self.probabilities[0])

    @property
    def PN(self) -> float:
        return float(self.probabilities[-1])


def distribution(state: QuantumState) -> OccupationDistribution:
    """``P(n) = |c_n|^2``."""
    P = np.abs(np.asarray(state.amps)) ** 2
    return OccupationDistribution(state.N, P / P.sum())


def _P(dist) -> np.ndarray:
    return dist.probabilities if isinstance(dist, OccupationDistribution) else np.asarray(dist, float)


def mean_n(dist) -> float:
    """``<n> = sum_n n P(n)``."""
    P = _P(dist)
    return float(np.dot(np.arange(P.shape[0]), P))


def mean_n_ex(dist) -> float:
    """Leakage ``<N/2 - |N/2 - n|>``; zero only for states on the two ports."""
    P = _P(dist)
    N = P.shape[0] - 1
    n = np.arange(N + 1)
    return float(np.dot(N / 2.0 - np.abs(N / 2.0 - n), P))


def filtered_mean(dist) -> float:
    """Post-selected mean ``<n>_f = N P(N) / (P(0) + P(N))``."""
    P = _P(dist)
    N = P.shape[0] - 1
    s = P[0] + P[-1]
    if not s > 0:
        raise UndefinedEstimateError("P(0) + P(N) = 0: nothing survives post-selection")
    return float(N * P[-1] / s)


def two_port_ratio(dist) -> float:
    P = _P(dist)
    s = P[0] + P[-1]
    if not s > 0:
        raise UndefinedEstimateError("P(0) + P(N) = 0: ratio undefined")
    return float(P[-1] / s)


def dephasing_adjust(P0: float, PN: float, p: float, direction: str = "forward") -> tuple:
    """Apply or undo a dephasing that mixes weight into an even two-port background.

    Within the two ports the conditional probabilities ``q`` map as
    ``q -> ((1 - p) q + p) / (1 + p)``, so the ratio ``P(N)/P(0)`` becomes
    ``((1 - p) q_N + p) / ((1 - p) q_0 + p)``.  This is a mixture with weight
    ``2p / (1 + p)`` on the 1/2-1/2 background.  The total ``P(0) + P(N)`` is
    left unchanged.  ``direction="inverse"`` recovers the coherent pair.
    """
    if not 0.0 <= p < 1.0:
        raise DomainError(f"dephasing p must lie in [0, 1), got {p}")
    if P0 < 0 or PN < 0:
        raise InvalidParameterError("probabilities must be non-negative")
    S = P0 + PN
    if not S > 0:
        raise UndefinedEstimateError("P(0) + P(N) = 0")
    q0, qN = P0 / S, PN / S
    if direction == "forward":
        f = lambda q: ((1.0 - p) * q + p) / (1.0 + p)
    elif direction == "inverse":
        f = lambda q: ((1.0 + p) * q - p) / (1.0 - p)
    else:
        raise InvalidParameterError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    a, b = f(q0), f(qN)
    if min(a, b) < -1e-12:
        raise DomainError(f"dephasing p = {p} is inconsistent with the measured pair")
    return (S * max(a, 0.0), S * max(b, 0.0))


@dataclass(frozen=True)
class PhaseEstimate:
    """Principal-branch estimate; ``N phi`` is only known modulo ``2 pi``."""

    phi: float
    ratio: float
    rejected_fraction: float
    period: float


def estimate_phase(dist, N: Optional[int] = None, threshold: float = REJECTION_THRESHOLD) -> PhaseEstimate:
    """``phi = (2/N) arcsin(sqrt(r))`` from the two-port ratio ``r``.

    Raises :class:`LowConfidenceError` when ``P(0) + P(N)`` is below
    ``threshold``.
    """
    P = _P(dist)
    N = P.shape[0] - 1 if N is None else int(N)
    s = float(P[0] + P[-1])
    if s < threshold:
        raise LowConfidenceError(
            f"only {s:.3f} of the weight is on the ports (threshold {threshold})"
        )
    r = two_port_ratio(P)
    phi = 2.0 / N * math.asin(math.sqrt(min(max(r, 0.0), 1.0)))
    return PhaseEstimate(phi, r, 1.0 - s, 2.0 * math.pi / N)


def standard_reference(phi: float, N: int) -> float:
    """``<n> = N (1 - cos phi) / 2`` of a standard Ramsey interferometer."""
    return N * (1.0 - math.cos(phi)) / 2.0


def synthesize_measurements(dist, M: int, seed: int) -> OccupationDistribution:
    """Empirical distribution of ``M`` simulated detections (multinomial)."""
    if M < 1:
        raise InvalidParameterError("M must be at least 1")
    P = _P(dist)
    P = np.clip(P, 0, None)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(M), P / P.sum())
    return OccupationDistribution(P.shape[0] - 1, counts / M, sample_count=int(M))


def ratio_standard_error(dist: OccupationDistribution) -> float:
    """Binomial standard error of the two-port ratio of sampled data."""
    if dist.sample_count is None:
        raise InvalidParameterError("standard error needs sampled data")
    k = (dist.P0 + dist.PN) * dist.sample_count
    if k <= 0:
        raise UndefinedEstimateError("no sample landed on the ports")
    r = two_port_ratio(dist)
    return math.sqrt(r * (1.0 - r) / k)
