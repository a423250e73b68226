"""Husimi Q function on an equal-angle Bloch-sphere grid."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gammaln, xlogy

from .core import QuantumState
from .errors import InvalidParameterError


@dataclass(frozen=True)
class SphereGrid:
    """``values[i, j] = Q(theta[i], phi[j])``.

    ``theta`` runs over ``[0, pi]`` including both poles and ``phi`` over
    ``[-pi, pi)``.
    """

    N: int
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray

    def normalization(self) -> float:
        """``(N + 1)/(4 pi) * integral of Q dOmega`` (should be 1)."""
        w_theta = trapezoid(np.sin(self.theta)[:, None] * self.values, self.theta, axis=0)
        dphi = 2 * np.pi / self.phi.shape[0]
        return float((self.N + 1) / (4 * np.pi) * w_theta.sum() * dphi)

    def peak(self) -> tuple:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.theta[i]), float(self.phi[j]), float(self.values[i, j])

    def to_csv(self) -> str:
        """Dense matrix with the axis vectors as the first row and column."""
        buf = io.StringIO()
        buf.write(f"# husimi grid N={self.N} rows=theta cols=phi\n")
        buf.write("theta\\phi," + ",".join(repr(float(x)) for x in self.phi) + "\n")
        for th, row in zip(self.theta, self.values):
            buf.write(repr(float(th)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def _log_magnitudes(N: int, theta: np.ndarray) -> np.ndarray:
    """Log of ``sqrt(C(N,n)) cos^(N-n)(t/2) sin^n(t/2)``, shape ``(len(theta), N+1)``."""
    n = np.arange(N + 1)
    c = np.abs(np.cos(theta / 2.0))[:, None]
    s = np.abs(np.sin(theta / 2.0))[:, None]
    binom = 0.5 * (gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1))
    return binom + xlogy(N - n, c) + xlogy(n, s)


def husimi_at(state: QuantumState, theta, phi) -> np.ndarray:
    """``|<theta, phi|psi>|^2`` at matching arrays of points."""
    theta = np.atleast_1d(np.asarray(theta, float))
    phi = np.atleast_1d(np.asarray(phi, float))
    N = state.N
    mags = np.exp(_log_magnitudes(N, theta))
    n = np.arange(N + 1)
    amp = np.sum(mags * np.exp(-1j * np.outer(phi, n)) * np.asarray(state.amps)[None, :], axis=1)
    return np.abs(amp) ** 2


def husimi_grid(state: QuantumState, resolution=(64, 128)) -> SphereGrid:
    """Evaluate Q on ``resolution = (n_theta, n_phi)`` points."""
    if isinstance(resolution, int):
        resolution = (resolution, 2 * resolution)
    nt, nphi = (int(r) for r in resolution)
    if nt < 8 or nphi < 8:
        raise InvalidParameterError("resolution must be at least 8 x 8")
    theta = np.linspace(0.0, np.pi, nt)
    phi = -np.pi + 2 * np.pi * np.arange(nphi) / nphi
    N = state.N
    mags = np.exp(_log_magnitudes(N, theta))
    weighted = mags * np.asarray(state.amps)[None, :]
    phases = np.exp(-1j * np.outer(np.arange(N + 1), phi))
    Q = np.abs(weighted @ phases) ** 2
    return SphereGrid(N, theta, phi, Q)
