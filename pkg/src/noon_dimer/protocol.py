"""Control schedules for the interferometry protocol and its runner.

The protocol has five stages:

    (a) Delta = 0, J: J_max -> 0      splitting into a cat state
    (b) instantaneous phase encoding c_n -> c_n exp(i n phi)
    (c) Delta = 0, J: 0 -> J_max      merging
    (d) J = J_max, Delta: 0 -> Delta_max
    (e) Delta = Delta_max, J: J_max -> 0   branching onto the two ports

Sweeps of J are either at a constant rate or adaptive, where the rate is
``lam / F_eff(J)`` so that the scaled sweep rate of the relevant channels
stays at ``lam``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.linalg import eigh_tridiagonal

from .core import ModelParams, QuantumState, coherent_state, critical_coupling, sx_offdiagonal
from .errors import DegeneracyError, DomainError, InvalidParameterError
from .estimation import OccupationDistribution, distribution
from .propagator import EvolutionPolicy, TrajectoryRecord, evolve, ground_state, step
from .core import build_hamiltonian
from .spectrum import check_gap, f_susceptibility, matrix_element, spectrum

SPLITTING = ((1, 3),)
BRANCHING = ((1, 2), (1, 3))
J_FLOOR = 1e-4  # in units of N U


# --------------------------------------------------------------------------
# control laws and schedules

@dataclass(frozen=True)
class Linear:
    """Straight ramp from ``start`` to ``end`` over the segment."""

    start: float
    end: float

    def value(self, tau: float, duration: float) -> float:
        if duration <= 0:
            return self.end
        x = min(max(tau / duration, 0.0), 1.0)
        return self.start + (self.end - self.start) * x

    def max_rate(self, duration: float) -> float:
        return 0.0 if duration <= 0 else abs(self.end - self.start) / duration

    def reversed(self) -> "Linear":
        return Linear(self.end, self.start)

    def describe(self) -> dict:
        return {"law": "linear", "start": self.start, "end": self.end}


def Constant(value: float) -> Linear:
    return Linear(value, value)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolation through ``(times, values)``."""

    times: tuple
    values: tuple

    def value(self, tau: float, duration: float) -> float:
        return float(np.interp(tau, self.times, self.values))

    def max_rate(self, duration: float) -> float:
        t, v = np.asarray(self.times), np.asarray(self.values)
        dt = np.diff(t)
        ok = dt > 0
        if not ok.any():
            return 0.0
        return float(np.max(np.abs(np.diff(v)[ok] / dt[ok])))

    def reversed(self) -> "Tabulated":
        t = np.asarray(self.times)
        return Tabulated(tuple(t[-1] - t[::-1]), tuple(self.values[::-1]))

    @property
    def start(self):
        return self.values[0]

    @property
    def end(self):
        return self.values[-1]

    def describe(self) -> dict:
        return {"law": "tabulated", "start": self.values[0], "end": self.values[-1],
                "points": len(self.times)}


@dataclass(frozen=True)
class Event:
    """Instantaneous operation applied to the state at a segment boundary.

    ``kind`` is ``"phase"`` (``c_n -> c_n exp(i n value)``) or ``"rotate_y"``
    (``exp(-i value S_y)``).
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("phase", "rotate_y"):
            raise InvalidParameterError(f"unknown event kind {self.kind!r}")

    def apply(self, amps: np.ndarray) -> np.ndarray:
        if self.kind == "phase":
            return encode_phase_amps(amps, self.value)
        return rotate_y_amps(amps, self.value)

    def inverse(self) -> "Event":
        return Event(self.kind, -self.value)


@dataclass(frozen=True)
class Segment:
    """One stage of a schedule, running over local time ``[0, duration]``."""

    label: str
    duration: float
    J: object
    Delta: object
    event: Optional[Event] = None

    def __post_init__(self):
        if self.duration < 0 or not math.isfinite(self.duration):
            raise InvalidParameterError(f"segment {self.label!r}: invalid duration")

    def controls(self, tau: float) -> tuple:
        return (max(self.J.value(tau, self.duration), 0.0),
                self.Delta.value(tau, self.duration))

    def max_rate(self) -> float:
        return max(self.J.max_rate(self.duration), self.Delta.max_rate(self.duration))

    def reversed(self) -> "Segment":
        return Segment(self.label, self.duration, self.J.reversed(), self.Delta.reversed(),
                       None if self.event is None else self.event.inverse())

    def describe(self) -> dict:
        d = {"label": self.label, "duration": self.duration,
             "J": self.J.describe(), "Delta": self.Delta.describe()}
        if self.event is not None:
            d["event"] = {"kind": self.event.kind, "value": self.event.value}
        return d


@dataclass(frozen=True)
class ControlSchedule:
    """Ordered segments.  Events fire at the start of their segment."""

    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        for a, b in zip(segs, segs[1:]):
            ja, da = a.controls(a.duration)
            jb, db = b.controls(0.0)
            if abs(ja - jb) > 1e-9 * max(1.0, abs(ja)) or abs(da - db) > 1e-12 * max(1.0, abs(da)):
                raise InvalidParameterError(
                    f"controls jump between segments {a.label!r} and {b.label!r}"
                )

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def controls(self, t: float) -> tuple:
        """``(J, Delta)`` at global time ``t``."""
        edges = self.boundaries()
        k = int(np.searchsorted(edges, t, side="right") - 1)
        k = min(max(k, 0), len(self.segments) - 1)
        return self.segments[k].controls(t - edges[k])

    def reversed(self) -> "ControlSchedule":
        """Schedule traversed backwards, with inverse events.

        An event that fired at the start of a forward segment fires at the end
        of the same reversed segment, so it is moved to the next one.
        """
        segs = list(self.segments)[::-1]
        events = [s.event for s in segs]
        out = []
        for k, s in enumerate(segs):
            moved = events[k - 1] if k > 0 else None
            out.append(Segment(s.label, s.duration, s.J.reversed(), s.Delta.reversed(),
                               None if moved is None else moved.inverse()))
        if events[-1] is not None:
            j, d = out[-1].controls(out[-1].duration)
            out.append(Segment(out[-1].label, 0.0, Constant(j), Constant(d), events[-1].inverse()))
        return ControlSchedule(tuple(out))

    def sample(self, points_per_segment: int = 50) -> np.ndarray:
        """Table of ``(t, J, Delta)`` for export."""
        rows = []
        t = 0.0
        for s in self.segments:
            for tau in np.linspace(0.0, s.duration, points_per_segment if s.duration > 0 else 1):
                J, D = s.controls(tau)
                rows.append((t + tau, J, D))
            t += s.duration
        return np.array(rows)

    def describe(self) -> list:
        return [s.describe() for s in self.segments]


# --------------------------------------------------------------------------
# instantaneous operations

def encode_phase_amps(amps: np.ndarray, phi: float) -> np.ndarray:
    n = np.arange(amps.shape[0])
    return amps * np.exp(1j * n * phi)


def encode_phase(state: QuantumState, phi: float) -> QuantumState:
    """Multiply ``c_n`` by ``exp(i n phi)``: a rotation by ``phi`` about z."""
    return QuantumState(state.N, encode_phase_amps(np.asarray(state.amps), phi))


def rotate_y_amps(amps: np.ndarray, angle: float) -> np.ndarray:
    N = amps.shape[0] - 1
    if N == 0 or angle == 0:
        return np.array(amps, dtype=complex)
    # S_y = D S_x D^dagger with D = diag(i^n), and S_x is real tridiagonal.
    d = 1j ** (np.arange(N + 1) % 4)
    m, V = eigh_tridiagonal(np.zeros(N + 1), sx_offdiagonal(N))
    x = np.conj(d) * amps
    x = V @ (np.exp(-1j * angle * m) * (V.T @ x))
    return d * x


def rotate_y(state: QuantumState, angle: float) -> QuantumState:
    """Apply ``exp(-i angle S_y)``; ``angle = pi/2`` is a Ramsey pulse."""
    out = rotate_y_amps(np.asarray(state.amps), angle)
    return QuantumState.from_vector(out, normalize=True)


# --------------------------------------------------------------------------
# adiabaticity

def adiabaticity_parameter(params: ModelParams, dotJ: float, dotDelta: float,
                           channel: tuple = (1, 3)) -> float:
    """Scaled sweep rate ``|<mu|dH/dt|nu>| / (E_mu - E_nu)^2``.

    ``dH/dt = -dotJ S_x - dotDelta S_z``.
    """
    nu, mu = channel
    if dotJ == 0 and dotDelta == 0:
        return 0.0
    snap = spectrum(params, levels=max(nu, mu))
    x = matrix_element(snap, mu, nu, "x")
    z = matrix_element(snap, mu, nu, "z")
    if snap.parity is not None:
        # S_x preserves mirror parity and S_z flips it.
        if snap.parity[nu - 1] == snap.parity[mu - 1]:
            z = 0.0
        else:
            x = 0.0
    element = dotJ * x + dotDelta * z
    if element == 0.0:
        return 0.0
    gap = check_gap(snap, mu, nu)
    return abs(element) / gap**2


def f_effective(params: ModelParams, channels: Sequence[tuple]) -> float:
    """Largest susceptibility over the listed channels.

    Channels that are degenerate (parity-forbidden doublets at zero bias)
    contribute nothing.
    """
    snap = spectrum(params, levels=max(max(c) for c in channels))
    best = 0.0
    for nu, mu in channels:
        try:
            best = max(best, f_susceptibility(params, nu, mu, snapshot=snap))
        except DegeneracyError:
            continue
    return best


def bias_ramp_bound(params: ModelParams, J_Delta: float) -> float:
    """Upper scale ``(J_Delta - N U) J_Delta / sqrt(N)`` for the bias ramp rate."""
    if J_Delta <= params.NU:
        raise DomainError(f"J_Delta = {J_Delta} must exceed N U = {params.NU}")
    return (J_Delta - params.NU) * J_Delta / math.sqrt(params.N)


def sweep_time_T(params: ModelParams, channels: Sequence[tuple] = SPLITTING,
                 J_max: Optional[float] = None) -> float:
    """``T = int_0^{J_max} F_eff(J) dJ``; an adaptive sweep lasts ``T / lam``.

    ``params.Delta`` fixes the bias during the sweep; ``J_max`` defaults to
    ``params.J``.
    """
    J_max = params.J if J_max is None else float(J_max)
    if J_max <= 0:
        return 0.0
    f = lambda J: f_effective(params.replace(J=J), channels)
    breaks = [0.0]
    try:
        Jc = critical_coupling(params.N, params.U, params.Delta)
        for b in (0.8 * Jc, Jc):
            if 0 < b < J_max:
                breaks.append(b)
    except DomainError:
        pass
    breaks.append(J_max)
    total = 0.0
    for a, b in zip(breaks, breaks[1:]):
        total += quad(f, a, b, limit=200, epsrel=1e-7)[0]
    return total


# --------------------------------------------------------------------------
# configuration and schedule builders

@dataclass(frozen=True)
class ProtocolConfig:
    """Everything needed to run the protocol once.

    ``params.J`` is read as ``J_max``.  ``Delta_max`` defaults to ``U/2``.
    ``mode`` is ``"constant"`` (rates ``dotJ``, ``dotDelta``) or
    ``"adaptive"`` (scaled rate ``lam``; the bias ramp keeps ``dotDelta``).
    """

    params: ModelParams
    phi: float = 0.0
    Delta_max: Optional[float] = None
    mode: str = "constant"
    dotJ: float = 1e-4
    dotDelta: float = 1e-4
    lam: float = 0.1
    merge_dotJ: Optional[float] = None
    policy: EvolutionPolicy = field(default_factory=EvolutionPolicy)
    seed: int = 0
    J_floor: float = J_FLOOR
    table_points: int = 801

    def __post_init__(self):
        p = self.params
        if self.Delta_max is None:
            object.__setattr__(self, "Delta_max", p.U / 2.0)
        if not 0 < self.Delta_max < p.U:
            raise InvalidParameterError(
                f"Delta_max = {self.Delta_max} must satisfy 0 < Delta_max < U = {p.U}"
            )
        if p.J <= p.NU:
            raise InvalidParameterError(
                f"J_max = {p.J} must exceed the critical coupling N U = {p.NU}"
            )
        if self.mode not in ("constant", "adaptive"):
            raise InvalidParameterError(f"unknown sweep mode {self.mode!r}")
        for name in ("dotJ", "dotDelta", "lam"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")

    @property
    def J_max(self) -> float:
        return self.params.J


def linear_sweep(label: str, J_from: float, J_to: float, rate: float, Delta: float = 0.0) -> Segment:
    if rate <= 0:
        raise InvalidParameterError("sweep rate must be positive")
    return Segment(label, abs(J_to - J_from) / rate, Linear(J_from, J_to), Constant(Delta))


def adaptive_sweep(params: ModelParams, lam: float, channels: Sequence[tuple] = SPLITTING,
                   J_max: Optional[float] = None, label: str = "a",
                   J_floor: float = J_FLOOR, points: int = 801) -> Segment:
    """Downward sweep ``J_max -> 0`` with ``dJ/dt = -lam / F_eff(J)``.

    ``F_eff`` is tabulated on a grid that is dense around the critical
    coupling, and the time to reach each grid point follows from the
    cumulative integral of ``F_eff / lam``.  Below ``J_floor * N U`` the sweep
    continues at the constant rate reached there.
    """
    if not lam > 0:
        raise InvalidParameterError("lam must be positive")
    J_max = params.J if J_max is None else float(J_max)
    floor = J_floor * params.NU
    if J_max <= floor:
        raise InvalidParameterError("J_max must lie above the adaptive floor")
    try:
        Jc = critical_coupling(params.N, params.U, params.Delta)
    except DomainError:
        Jc = J_max
    # Cosine clustering near both ends plus a dense band around J_c.
    u = 0.5 * (1 - np.cos(np.linspace(0, math.pi, points)))
    grid = floor + (J_max - floor) * u
    band = np.linspace(max(floor, 0.7 * Jc), min(J_max, 1.2 * Jc), points // 2)
    grid = np.unique(np.concatenate([grid, band[(band > floor) & (band < J_max)]]))
    F = np.array([f_effective(params.replace(J=J), channels) for J in grid])
    # time to go from J_max down to each grid point
    tau = cumulative_trapezoid(F[::-1], -grid[::-1], initial=0.0) / lam
    times = tau
    values = grid[::-1]
    F_floor = F[0]
    tail = floor * F_floor / lam if F_floor > 0 else 0.0
    times = np.append(times, times[-1] + tail)
    values = np.append(values, 0.0)
    Delta = params.Delta
    return Segment(label, float(times[-1]), Tabulated(tuple(times), tuple(values)), Constant(Delta))


def _stage_segments(cfg: ProtocolConfig, split: Segment, branch: Segment) -> ControlSchedule:
    p = cfg.params
    J_max, D_max = cfg.J_max, cfg.Delta_max
    if cfg.mode == "adaptive" and cfg.merge_dotJ is None:
        merge = Segment("c", split.duration, split.J.reversed(), Constant(0.0))
    else:
        rate = cfg.merge_dotJ or cfg.dotJ
        merge = linear_sweep("c", 0.0, J_max, rate)
    phase = Segment("b", 0.0, Constant(0.0), Constant(0.0), Event("phase", cfg.phi))
    ramp = Segment("d", D_max / cfg.dotDelta, Constant(J_max), Linear(0.0, D_max))
    return ControlSchedule((split, phase, merge, ramp, branch))


def constant_schedule(cfg: ProtocolConfig) -> ControlSchedule:
    """Stages (a)-(e) with constant sweep rates."""
    split = linear_sweep("a", cfg.J_max, 0.0, cfg.dotJ)
    branch = linear_sweep("e", cfg.J_max, 0.0, cfg.dotJ, Delta=cfg.Delta_max)
    return _stage_segments(cfg, split, branch)


def adaptive_schedule(cfg: ProtocolConfig, channels: Optional[dict] = None) -> ControlSchedule:
    """Stages (a)-(e) with adaptive J sweeps.

    ``channels`` may override ``{"split": ((1, 3),), "branch": ((1, 2), (1, 3))}``.
    Merging retraces the splitting table unless ``merge_dotJ`` is set.
    """
    ch = {"split": SPLITTING, "branch": BRANCHING}
    ch.update(channels or {})
    p = cfg.params
    split = adaptive_sweep(p.replace(Delta=0.0), cfg.lam, ch["split"], label="a",
                           J_floor=cfg.J_floor, points=cfg.table_points)
    branch = adaptive_sweep(p.replace(Delta=cfg.Delta_max), cfg.lam, ch["branch"], label="e",
                            J_floor=cfg.J_floor, points=cfg.table_points)
    return _stage_segments(cfg, split, branch)


def build_schedule(cfg: ProtocolConfig) -> ControlSchedule:
    return adaptive_schedule(cfg) if cfg.mode == "adaptive" else constant_schedule(cfg)


# --------------------------------------------------------------------------
# runners

@dataclass
class RunResult:
    """Outcome of a protocol run."""

    final_state: QuantumState
    distribution: OccupationDistribution
    stages: dict
    trajectory: TrajectoryRecord
    schedule: ControlSchedule
    metadata: dict

    @property
    def probabilities(self) -> np.ndarray:
        return self.distribution.probabilities


def run_schedule(params: ModelParams, schedule: ControlSchedule, initial=None,
                 policy: Optional[EvolutionPolicy] = None, metadata: Optional[dict] = None) -> RunResult:
    """Evolve from ``initial`` (default: ground state at the first controls)."""
    J0, D0 = schedule.controls(0.0)
    if initial is None:
        initial = ground_state(params.replace(J=J0, Delta=D0))
    policy = policy or EvolutionPolicy()
    stages = {}
    records = []
    state = initial
    t = 0.0
    for seg in schedule.segments:
        rec = evolve(state, ControlSchedule((seg,)), params, policy, t0=t)
        stages.setdefault(seg.label, []).append(rec)
        records.append(rec)
        state = rec.final_state
        t += seg.duration
    traj = TrajectoryRecord.concatenate(records)
    meta = {
        "params": {"N": params.N, "U": params.U},
        "policy": {"dt": policy.dt, "unitarity_tol": policy.unitarity_tol,
                   "snapshot_stride": policy.snapshot_stride, "levels": policy.levels,
                   "control_tol": policy.control_tol},
        "schedule": schedule.describe(),
        "duration": schedule.duration,
    }
    meta.update(metadata or {})
    return RunResult(state, distribution(state), stages, traj, schedule, meta)


def run_protocol(cfg: ProtocolConfig, schedule: Optional[ControlSchedule] = None) -> RunResult:
    """Run stages (a)-(e) from the ground state at ``(J_max, Delta = 0)``."""
    schedule = schedule or build_schedule(cfg)
    meta = {"phi": cfg.phi, "mode": cfg.mode, "dotJ": cfg.dotJ, "dotDelta": cfg.dotDelta,
            "lam": cfg.lam, "Delta_max": cfg.Delta_max, "J_max": cfg.J_max, "seed": cfg.seed}
    init = ground_state(cfg.params.replace(Delta=0.0))
    return run_schedule(cfg.params, schedule, init, cfg.policy, meta)


def splitting_schedule(params: ModelParams, dotJ: Optional[float] = None, lam: Optional[float] = None,
                       J_max: Optional[float] = None, J_end: float = 0.0,
                       Delta: float = 0.0) -> ControlSchedule:
    """Stage (a) alone, at constant rate ``dotJ`` or adaptive rate ``lam``."""
    J_max = params.J if J_max is None else J_max
    if (dotJ is None) == (lam is None):
        raise InvalidParameterError("give exactly one of dotJ or lam")
    if dotJ is not None:
        return ControlSchedule((linear_sweep("a", J_max, J_end, dotJ, Delta),))
    return ControlSchedule((adaptive_sweep(params.replace(J=J_max, Delta=Delta), lam, SPLITTING),))


def quench(params: ModelParams, duration: float, initial: Optional[QuantumState] = None) -> QuantumState:
    """Evolve ``|X>`` (or ``initial``) for ``duration`` at fixed ``J`` and ``Delta``."""
    if duration < 0:
        raise InvalidParameterError("duration must be non-negative")
    state = initial or coherent_state(params.N, math.pi / 2, 0.0)
    if duration == 0:
        return state
    return step(state, build_hamiltonian(params), duration, unitarity_tol=1e-10)
