import math

import numpy as np
import pytest

from noon_dimer.core import ModelParams, build_hamiltonian, cat_state, coherent_state, fock_state
from noon_dimer.errors import InvalidParameterError
from noon_dimer.propagator import (
    EvolutionPolicy,
    adiabatic_populations,
    doublet_populations,
    evolve,
    ground_state,
    step,
)
from noon_dimer.protocol import (
    Constant,
    ControlSchedule,
    Linear,
    ProtocolConfig,
    Segment,
    build_schedule,
    run_protocol,
)
from noon_dimer.spectrum import spectrum

from oracles import brute_force_hamiltonian, dense_evolve, ode_evolve


def static(J, Delta, duration):
    return ControlSchedule((Segment("s", duration, Constant(J), Constant(Delta)),))


def test_eigenvector_acquires_phase():
    p = ModelParams(6, 0.2, 0.7, 0.1)
    snap = spectrum(p)
    v = snap.vectors[:, 2].astype(complex)
    out = step(v, build_hamiltonian(p), 0.37)
    assert np.allclose(out.amps, np.exp(-1j * snap.energies[2] * 0.37) * v, atol=1e-13)


def test_many_steps_match_dense_exponential():
    p = ModelParams(8, 0.15, 0.6, 0.05)
    psi0 = coherent_state(8, 1.1, 0.4)
    rec = evolve(psi0, static(p.J, p.Delta, 50.0), p, EvolutionPolicy(dt=0.05))
    ref = dense_evolve(np.asarray(psi0.amps), brute_force_hamiltonian(8, 0.15, 0.6, 0.05), 50.0)
    assert np.max(np.abs(rec.final_state.amps - ref)) < 1e-10


@pytest.mark.slow
def test_norm_after_a_million_steps():
    p = ModelParams.reduced(4, 0.7)
    rec = evolve(coherent_state(4, 1.0, 0.2), static(0.7, 0.0, 1e6), p,
                 EvolutionPolicy(dt=1.0, snapshot_stride=0))
    assert abs(np.linalg.norm(rec.final_state.amps) - 1) < 1e-8


def test_ground_state_stays_put():
    p = ModelParams.reduced(12, 0.8, Delta=0.01)
    rec = evolve(ground_state(p), static(p.J, p.Delta, 200.0), p, EvolutionPolicy(snapshot_stride=10))
    assert np.max(np.abs(rec.populations[:, 0] - 1)) < 1e-10


def test_population_of_an_eigenstate():
    p = ModelParams.reduced(10, 0.5)
    snap = spectrum(p)
    pops = adiabatic_populations(snap.vectors[:, 2], snap)
    expected = np.zeros(11)
    expected[2] = 1
    assert np.allclose(pops, expected, atol=1e-14)


def test_cat_state_fills_the_lowest_doublet():
    pops = adiabatic_populations(cat_state(10, 0.0), spectrum(ModelParams.reduced(10, 0.0)))
    assert doublet_populations(pops)[0] == pytest.approx(1.0, abs=1e-14)


def test_populations_match_fock_weights_at_zero_hopping_with_bias():
    p = ModelParams.reduced(8, 0.0, Delta=0.03)
    psi = coherent_state(8, 1.2, 0.0)
    pops = adiabatic_populations(psi, spectrum(p))
    assert np.allclose(np.sort(pops), np.sort(psi.probabilities), atol=1e-14)


def test_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        evolve(fock_state(3, 0), static(0.5, 0.0, 1.0), ModelParams.reduced(4, 0.5))


def test_forward_then_backward_returns_initial_state():
    p = ModelParams.reduced(10, 1.1)
    cfg = ProtocolConfig(p, phi=0.3, dotJ=0.01, dotDelta=0.01)
    sched = build_schedule(cfg)
    psi0 = ground_state(p)
    pol = EvolutionPolicy(snapshot_stride=0)
    fwd = evolve(psi0, sched, p, pol)
    back = evolve(fwd.final_state, sched.reversed(), p, pol, direction=-1)
    assert back.final_state.fidelity(psi0) > 1 - 1e-6


def test_full_protocol_against_runge_kutta():
    p = ModelParams.reduced(6, 1.1)
    cfg = ProtocolConfig(p, phi=math.pi / 12, dotJ=0.02, dotDelta=0.02,
                         policy=EvolutionPolicy(dt=0.02, snapshot_stride=0))
    res = run_protocol(cfg)
    H = lambda t: brute_force_hamiltonian(6, p.U, *res.schedule.controls(t))
    psi = np.asarray(ground_state(p).amps)
    t = 0.0
    for seg in res.schedule.segments:
        if seg.event is not None:
            psi = seg.event.apply(psi)
        if seg.duration > 0:
            psi = ode_evolve(psi, H, t, t + seg.duration)
        t += seg.duration
    fid = abs(np.vdot(psi, res.final_state.amps)) ** 2 / np.vdot(psi, psi).real
    assert fid > 1 - 1e-8


def test_norm_is_recorded_along_trajectory():
    p = ModelParams.reduced(10, 1.1)
    sched = ControlSchedule((Segment("a", 110.0, Linear(1.1, 0.0), Constant(0.0)),))
    rec = evolve(ground_state(p), sched, p, EvolutionPolicy(snapshot_stride=50))
    assert np.max(np.abs(rec.norm - 1)) < 1e-10
    assert rec.times[0] == 0 and rec.times[-1] == pytest.approx(110.0)
    assert np.all(np.diff(rec.times) > 0)
