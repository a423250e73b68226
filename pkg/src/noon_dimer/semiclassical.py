"""Truncated-Wigner dynamics on the classical Bloch sphere.

A point ``S = (S_x, S_y, S_z)`` with ``|S| = N/2`` evolves under the classical
energy ``H(S) = -U S_z^2 - Delta S_z - J S_x`` as ``dS/dt = grad H x S``.  This
orientation reproduces the quantum Heisenberg equations for the spin
expectation values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ModelParams
from .errors import InvalidParameterError, NumericalError

ENERGY_DRIFT_TOL = 1e-6  # per unit time, in units of N U


@dataclass(frozen=True)
class ClassicalCloud:
    """Equally weighted Bloch vectors, shape ``(count, 3)``."""

    N: int
    points: np.ndarray
    seed: Optional[int] = None

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def n_ex(self) -> np.ndarray:
        """Per-point leakage ``N/2 - |S_z|``."""
        return self.N / 2.0 - np.abs(self.points[:, 2])

    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)


def classical_energy(S: np.ndarray, J: float, Delta: float, U: float) -> np.ndarray:
    S = np.asarray(S)
    return -U * S[..., 2] ** 2 - Delta * S[..., 2] - J * S[..., 0]


def _derivative(S: np.ndarray, J: float, Delta: float, U: float) -> np.ndarray:
    gx = -J
    gz = -2.0 * U * S[..., 2] - Delta
    out = np.empty_like(S)
    # (gx, 0, gz) x (Sx, Sy, Sz)
    out[..., 0] = -gz * S[..., 1]
    out[..., 1] = gz * S[..., 0] - gx * S[..., 2]
    out[..., 2] = gx * S[..., 1]
    return out


def classical_derivative(S, params: ModelParams) -> np.ndarray:
    """``dS/dt`` for one point or an array of points (last axis = xyz)."""
    S = np.asarray(S, dtype=float)
    if S.shape[-1] != 3:
        raise InvalidParameterError("Bloch vectors need three components")
    return _derivative(S, params.J, params.Delta, params.U)


def _unit(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _tangent_frame(c: np.ndarray) -> tuple:
    a = np.array([0.0, 0.0, 1.0]) if abs(c[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(a, c)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    return e1, e2


def sample_cloud(theta: float, phi: float, N: int, count: int = 10_000, seed: int = 0,
                 mode: str = "gaussian", ring_cos: Optional[float] = None) -> ClassicalCloud:
    """Sample a cloud around the Bloch direction ``(theta, phi)``.

    ``mode="gaussian"`` draws tangent-plane offsets with standard deviation
    ``sqrt(N)/2`` (the coherent-state width) and projects onto the sphere.
    ``mode="circle"`` puts equally spaced points on a ring whose axial
    projection is ``ring_cos * N/2``; the default ``ring_cos = 1 - 1/(4N)``
    reads the ring radius ``n_0`` as that normalized projection, one of
    several possible readings.
    """
    if count < 1:
        raise InvalidParameterError("count must be at least 1")
    R = N / 2.0
    c = _unit(theta, phi)
    e1, e2 = _tangent_frame(c)
    if mode == "gaussian":
        rng = np.random.default_rng(seed)
        xy = rng.normal(0.0, math.sqrt(N) / 2.0, size=(count, 2))
        pts = R * c + xy[:, :1] * e1 + xy[:, 1:] * e2
        pts *= R / np.linalg.norm(pts, axis=1, keepdims=True)
    elif mode == "circle":
        ring_cos = 1.0 - 1.0 / (4.0 * N) if ring_cos is None else float(ring_cos)
        if not -1.0 <= ring_cos <= 1.0:
            raise InvalidParameterError("ring_cos must lie in [-1, 1]")
        ring_sin = math.sqrt(1.0 - ring_cos**2)
        a = 2.0 * math.pi * np.arange(count) / count
        pts = R * (ring_cos * c + ring_sin * (np.cos(a)[:, None] * e1 + np.sin(a)[:, None] * e2))
    else:
        raise InvalidParameterError(f"unknown cloud mode {mode!r}")
    return ClassicalCloud(N, pts, seed)


def rk4_step(S: np.ndarray, h: float, ctrl, U: float, t: float) -> np.ndarray:
    J0, D0 = ctrl(t)
    Jm, Dm = ctrl(t + h / 2)
    J1, D1 = ctrl(t + h)
    k1 = _derivative(S, J0, D0, U)
    k2 = _derivative(S + 0.5 * h * k1, Jm, Dm, U)
    k3 = _derivative(S + 0.5 * h * k2, Jm, Dm, U)
    k4 = _derivative(S + h * k3, J1, D1, U)
    return S + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rotate_z(S, angle):
    c, s = math.cos(angle), math.sin(angle)
    out = S.copy()
    out[:, 0] = c * S[:, 0] - s * S[:, 1]
    out[:, 1] = s * S[:, 0] + c * S[:, 1]
    return out


def _rotate_y(S, angle):
    c, s = math.cos(angle), math.sin(angle)
    out = S.copy()
    out[:, 0] = c * S[:, 0] + s * S[:, 2]
    out[:, 2] = -s * S[:, 0] + c * S[:, 2]
    return out


def apply_event_classical(S: np.ndarray, event) -> np.ndarray:
    """Classical counterpart of a protocol event (rotation about z or y)."""
    if event.kind == "phase":
        return _rotate_z(S, event.value)
    return _rotate_y(S, event.value)


def energy_drift_probe(S: np.ndarray, J: float, Delta: float, U: float, dt: float,
                       NU: float, probe_time: float = 1.0) -> float:
    """Energy drift per unit time of RK4 at frozen controls (worst point)."""
    steps = max(1, int(math.ceil(probe_time / dt)))
    h = probe_time / steps
    ctrl = lambda t: (J, Delta)
    X = S.copy()
    E0 = classical_energy(X, J, Delta, U)
    for k in range(steps):
        X = rk4_step(X, h, ctrl, U, k * h)
    return float(np.max(np.abs(classical_energy(X, J, Delta, U) - E0)) / probe_time / NU)


@dataclass
class CloudTrajectory:
    times: np.ndarray
    n_ex_mean: np.ndarray
    n_ex_stderr: np.ndarray
    spin_mean: np.ndarray
    radius_drift: np.ndarray
    final: ClassicalCloud


def propagate_cloud(cloud: ClassicalCloud, schedule, params: ModelParams, dt: float = 0.01,
                    record_every: int = 100, probe_points: int = 64) -> CloudTrajectory:
    """Integrate every point through ``schedule`` with fixed-step RK4.

    Before each segment a probe integrates a few points at frozen controls and
    raises :class:`NumericalError` if the energy drifts by more than
    ``1e-6 N U`` per unit time.
    """
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    S = np.array(cloud.points, dtype=float)
    R = cloud.N / 2.0
    U = params.U
    NU = params.NU
    times, nex_m, nex_e, spin, drift = [], [], [], [], []

    def rec(t):
        nex = R - np.abs(S[:, 2])
        times.append(t)
        nex_m.append(nex.mean())
        nex_e.append(nex.std(ddof=1) / math.sqrt(len(nex)) if len(nex) > 1 else 0.0)
        spin.append(S.mean(axis=0))
        drift.append(float(np.max(np.abs(np.linalg.norm(S, axis=1) / R - 1.0))))

    t = 0.0
    rec(t)
    for seg in schedule.segments:
        if getattr(seg, "event", None) is not None:
            S = apply_event_classical(S, seg.event)
        if seg.duration <= 0:
            continue
        J0, D0 = seg.controls(0.0)
        probe = S[: min(probe_points, len(S))]
        rate = energy_drift_probe(probe, max(J0, 1e-12), D0, U, dt, NU)
        if rate > ENERGY_DRIFT_TOL:
            raise NumericalError(
                f"RK4 energy drift {rate:.2e} N U per unit time exceeds {ENERGY_DRIFT_TOL:g}; reduce dt"
            )
        n = max(1, int(math.ceil(seg.duration / dt - 1e-9)))
        h = seg.duration / n
        for k in range(n):
            S = rk4_step(S, h, seg.controls, U, k * h)
            if record_every and (k + 1) % record_every == 0 and k + 1 < n:
                rec(t + (k + 1) * h)
        t += seg.duration
        rec(t)
    return CloudTrajectory(np.array(times), np.array(nex_m), np.array(nex_e),
                           np.array(spin), np.array(drift), ClassicalCloud(cloud.N, S, cloud.seed))


@dataclass(frozen=True)
class CrossoverEstimate:
    """Spreading angle along the separatrix and the rates where it equals
    ``2 pi s`` for ``s = 0.9`` (adiabatic border) and ``s = 0.1`` (diabatic)."""

    theta: float
    adiabatic_border: float
    diabatic_border: float
    coefficient: float


def crossover_theta(dotJ: float, params: ModelParams, s_adiabatic: float = 0.9,
                    s_diabatic: float = 0.1) -> CrossoverEstimate:
    """``theta = (pi^2 / 8) (N U)^2 / ln(N) / dotJ``."""
    if not dotJ > 0:
        raise InvalidParameterError("dotJ must be positive")
    if params.N < 2:
        raise InvalidParameterError("the estimate needs N >= 2")
    K = (math.pi**2 / 8.0) * params.NU**2 / math.log(params.N)
    return CrossoverEstimate(
        theta=K / dotJ,
        adiabatic_border=K / (2 * math.pi * s_adiabatic),
        diabatic_border=K / (2 * math.pi * s_diabatic),
        coefficient=K,
    )
