"""Exact time stepping of dimer states under time-dependent controls.

Each step applies ``exp(-i dt H(t_mid))`` through the eigendecomposition of the
tridiagonal Hamiltonian at the step midpoint, which is unitary to rounding.
Schedules are consumed by duck typing: anything with ``segments`` whose items
expose ``duration``, ``controls(tau) -> (J, Delta)``, ``max_rate()`` and an
optional ``event`` (with ``apply(amps) -> amps``) will do.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import (
    ModelParams,
    QuantumState,
    TridiagonalHamiltonian,
    build_hamiltonian,
    spin_expectation,
    sx_offdiagonal,
    sz_diagonal,
)
from .errors import InvalidParameterError, NumericalError
from .spectrum import SpectrumSnapshot, eigensystem


@dataclass(frozen=True)
class EvolutionPolicy:
    """Step control for :func:`evolve`.

    ``dt`` is an upper bound; the driver shortens steps further so that no
    control parameter moves by more than ``control_tol * N U`` per step.
    ``snapshot_stride`` is the number of steps between recorded samples
    (0 records only segment boundaries).
    """

    dt: float = 0.1
    unitarity_tol: float = 1e-12
    snapshot_stride: int = 100
    levels: int = 6
    control_tol: float = 1e-3

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError("dt must be positive")
        if self.snapshot_stride < 0 or self.levels < 1:
            raise InvalidParameterError("snapshot_stride >= 0 and levels >= 1 required")


@dataclass
class TrajectoryRecord:
    """Samples collected along a trajectory.

    ``populations[k, j]`` is the weight of adiabatic level ``j + 1`` at
    ``times[k]``; ``doublet`` holds ``p_1 + p_2``, which stays meaningful when
    the two lowest levels are quasi-degenerate.
    """

    times: np.ndarray
    J: np.ndarray
    Delta: np.ndarray
    populations: np.ndarray
    doublet: np.ndarray
    n_mean: np.ndarray
    n_ex: np.ndarray
    spin: np.ndarray
    norm: np.ndarray
    final_state: QuantumState
    labels: list = field(default_factory=list)

    @staticmethod
    def concatenate(records):
        records = list(records)
        cat = lambda name: np.concatenate([getattr(r, name) for r in records])
        return TrajectoryRecord(
            times=cat("times"), J=cat("J"), Delta=cat("Delta"),
            populations=cat("populations"), doublet=cat("doublet"),
            n_mean=cat("n_mean"), n_ex=cat("n_ex"), spin=cat("spin"),
            norm=cat("norm"), final_state=records[-1].final_state,
            labels=sum((r.labels for r in records), []),
        )


def _amps(state) -> np.ndarray:
    if isinstance(state, QuantumState):
        return np.array(state.amps)
    return np.asarray(state, dtype=complex)


def _propagate(amps: np.ndarray, diag, offdiag, dt: float) -> np.ndarray:
    if len(diag) == 1:
        return amps * np.exp(-1j * diag[0] * dt)
    E, V = eigh_tridiagonal(diag, offdiag)
    return V @ (np.exp(-1j * E * dt) * (V.T @ amps))


def step(state, H: TridiagonalHamiltonian, dt: float, unitarity_tol: float = 1e-12) -> QuantumState:
    """Apply ``exp(-i dt H)`` exactly.

    Raises :class:`NumericalError` if the norm moves by more than
    ``unitarity_tol``.
    """
    amps = _amps(state)
    if amps.shape[0] != H.dim:
        raise InvalidParameterError(f"state dimension {amps.shape[0]} != {H.dim}")
    before = np.linalg.norm(amps)
    out = _propagate(amps, H.diag, H.offdiag, dt)
    drift = abs(np.linalg.norm(out) - before)
    if drift > unitarity_tol:
        raise NumericalError(f"norm drift {drift:.3e} exceeds {unitarity_tol:.1e}")
    return QuantumState.from_vector(out)


def adiabatic_populations(state, snapshot: SpectrumSnapshot) -> np.ndarray:
    """``p_nu = |<E_nu|psi>|^2`` for every level in the snapshot."""
    amps = _amps(state)
    if amps.shape[0] != snapshot.vectors.shape[0]:
        raise InvalidParameterError("state and snapshot dimensions differ")
    return np.abs(snapshot.vectors.T @ amps) ** 2


def doublet_populations(populations: np.ndarray) -> np.ndarray:
    """Pairwise sums ``p_1 + p_2, p_3 + p_4, ...`` of a population vector."""
    p = np.asarray(populations)
    if p.shape[-1] % 2:
        p = np.concatenate([p, np.zeros(p.shape[:-1] + (1,))], axis=-1)
    return p[..., 0::2] + p[..., 1::2]


def observables(amps: np.ndarray) -> dict:
    """``<n>``, ``<n_ex>``, ``<S>`` and the norm of an amplitude vector."""
    N = amps.shape[0] - 1
    P = np.abs(amps) ** 2
    n = np.arange(N + 1)
    return {
        "n_mean": float(np.dot(n, P)),
        "n_ex": float(np.dot(N / 2.0 - np.abs(sz_diagonal(N)), P)),
        "spin": spin_expectation(amps),
        "norm": float(np.sqrt(P.sum())),
    }


class _Recorder:
    def __init__(self, params: ModelParams, levels: int):
        self.params = params
        self.levels = min(levels, params.N + 1)
        self.rows = []

    def __call__(self, t, J, Delta, amps, label=""):
        p = self.params.replace(J=J, Delta=Delta)
        snap = eigensystem(build_hamiltonian(p), self.levels)
        pops = adiabatic_populations(amps, snap)
        obs = observables(amps)
        self.rows.append((t, J, Delta, pops, obs, label))

    def record(self, amps) -> TrajectoryRecord:
        rows = self.rows
        k = self.levels
        pops = np.array([r[3] for r in rows]).reshape(len(rows), k)
        return TrajectoryRecord(
            times=np.array([r[0] for r in rows]),
            J=np.array([r[1] for r in rows]),
            Delta=np.array([r[2] for r in rows]),
            populations=pops,
            doublet=pops[:, :2].sum(axis=1),
            n_mean=np.array([r[4]["n_mean"] for r in rows]),
            n_ex=np.array([r[4]["n_ex"] for r in rows]),
            spin=np.array([r[4]["spin"] for r in rows]).reshape(len(rows), 3),
            norm=np.array([r[4]["norm"] for r in rows]),
            final_state=QuantumState.from_vector(amps),
            labels=[r[5] for r in rows],
        )


def segment_steps(segment, policy: EvolutionPolicy, NU: float) -> int:
    """Number of steps used for one segment under ``policy``."""
    if segment.duration <= 0:
        return 0
    rate = segment.max_rate()
    dt = policy.dt
    if rate > 0:
        dt = min(dt, policy.control_tol * NU / rate)
    return max(1, int(math.ceil(segment.duration / dt - 1e-9)))


def evolve(state, schedule, params: ModelParams, policy: Optional[EvolutionPolicy] = None,
           direction: int = 1, t0: float = 0.0) -> TrajectoryRecord:
    """Propagate ``state`` through every segment of ``schedule``.

    ``params`` supplies ``N`` and ``U``; ``J`` and ``Delta`` come from the
    schedule.  ``direction=-1`` applies the inverse propagator on each step,
    which together with a reversed schedule undoes a forward run.
    """
    policy = policy or EvolutionPolicy()
    if direction not in (1, -1):
        raise InvalidParameterError("direction must be +1 or -1")
    amps = _amps(state).copy()
    if amps.shape[0] != params.N + 1:
        raise InvalidParameterError("state dimension does not match params.N")
    rec = _Recorder(params, policy.levels)
    NU = params.NU
    N = params.N
    sz = sz_diagonal(N)
    sxo = sx_offdiagonal(N)
    t = t0
    start_norm = np.linalg.norm(amps)
    for seg in schedule.segments:
        label = getattr(seg, "label", "")
        if getattr(seg, "event", None) is not None:
            amps = seg.event.apply(amps)
        J0, D0 = seg.controls(0.0)
        rec(t, J0, D0, amps, label)
        n = segment_steps(seg, policy, NU)
        if n == 0:
            continue
        h = seg.duration / n
        for k in range(n):
            J, D = seg.controls((k + 0.5) * h)
            diag = -params.U * sz**2 - D * sz
            amps = _propagate(amps, diag, -J * sxo, direction * h)
            if policy.snapshot_stride and (k + 1) % policy.snapshot_stride == 0 and k + 1 < n:
                Jr, Dr = seg.controls((k + 1) * h)
                rec(t + (k + 1) * h, Jr, Dr, amps, label)
        t += seg.duration
        J1, D1 = seg.controls(seg.duration)
        rec(t, J1, D1, amps, label)
        drift = abs(np.linalg.norm(amps) - start_norm)
        if drift > policy.unitarity_tol * max(n, 1):
            raise NumericalError(f"norm drift {drift:.3e} over segment {label!r}")
    return rec.record(amps)


def ground_state(params: ModelParams) -> QuantumState:
    """Exact ground state of ``H(params)`` with the spectrum sign convention."""
    snap = eigensystem(build_hamiltonian(params), 1)
    return QuantumState.from_vector(snap.vectors[:, 0].astype(complex), normalize=True)
