import math

import numpy as np
import pytest

from noon_dimer.core import ModelParams, coherent_state
from noon_dimer.errors import InvalidParameterError, NumericalError
from noon_dimer.propagator import EvolutionPolicy, evolve
from noon_dimer.protocol import Constant, ControlSchedule, Segment, linear_sweep
from noon_dimer.semiclassical import (
    classical_derivative,
    classical_energy,
    crossover_theta,
    propagate_cloud,
    sample_cloud,
)
from noon_dimer.wkb import omega_J


def test_x_pole_is_a_fixed_point():
    p = ModelParams.reduced(50, 0.6)
    assert np.allclose(classical_derivative([25.0, 0.0, 0.0], p), 0.0)


@pytest.mark.parametrize("J", [0.2, 0.5, 0.9])
def test_self_trapped_minima_are_fixed_points(J):
    N = 40
    p = ModelParams.reduced(N, J)
    u = p.NU / J
    for sign in (1, -1):
        S = np.array([N / 2 / u, 0.0, sign * math.sqrt(1 - u**-2) * N / 2])
        assert np.max(np.abs(classical_derivative(S, p))) < 1e-12


def _ehrenfest_errors(N, J=0.5, theta=1.2, phi=0.3, frac=0.95):
    """Relative distance between quantum <S>(t) and one classical trajectory."""
    p = ModelParams.reduced(N, J)
    T = frac / omega_J(p)
    sched = ControlSchedule((Segment("s", T, Constant(J), Constant(0.0)),))
    rec = evolve(coherent_state(N, theta, phi), sched, p, EvolutionPolicy(dt=T / 40, snapshot_stride=4))
    cloud = sample_cloud(theta, phi, N, count=1, mode="circle", ring_cos=1.0)
    tr = propagate_cloud(cloud, sched, p, dt=T / 400, record_every=40)
    assert np.allclose(tr.times, rec.times)
    return np.linalg.norm(tr.spin_mean - rec.spin, axis=1) / (N / 2)


def test_short_time_ehrenfest_agreement():
    assert np.max(_ehrenfest_errors(100)) < 0.01


def test_ehrenfest_deviation_is_a_one_over_N_effect():
    e1 = np.max(_ehrenfest_errors(100))
    e4 = np.max(_ehrenfest_errors(400))
    assert e1 / e4 == pytest.approx(4.0, rel=0.1)


def test_gaussian_cloud_moments():
    N = 400
    cloud = sample_cloud(math.pi / 2, 0.0, N, count=40000, seed=3)
    m = cloud.mean()
    assert m[0] == pytest.approx(N / 2, rel=5 / N)
    assert abs(m[2]) < 5 * math.sqrt(N / 4 / 40000)
    # coherent-state variance of S_z on |X> is N/4
    assert cloud.points[:, 2].var() == pytest.approx(N / 4, rel=0.03)
    assert np.allclose(np.linalg.norm(cloud.points, axis=1), N / 2)


def test_circle_cloud_has_fixed_offset():
    N = 50
    cloud = sample_cloud(0.7, 0.4, N, count=64, mode="circle")
    c = N / 2 * np.array([math.sin(0.7) * math.cos(0.4), math.sin(0.7) * math.sin(0.4), math.cos(0.7)])
    proj = cloud.points @ c / (N / 2) ** 2
    assert np.allclose(proj, 1 - 1 / (4 * N))


def test_cloud_is_reproducible():
    a = sample_cloud(1.0, 0.0, 30, count=10, seed=7).points
    b = sample_cloud(1.0, 0.0, 30, count=10, seed=7).points
    assert np.array_equal(a, b)


def test_bad_cloud_arguments():
    with pytest.raises(InvalidParameterError):
        sample_cloud(1.0, 0.0, 10, count=0)
    with pytest.raises(InvalidParameterError):
        sample_cloud(1.0, 0.0, 10, mode="square")


def _final_nex(dotJ, N=100, dt=0.02):
    p = ModelParams.reduced(N, 0.0)
    sched = ControlSchedule((linear_sweep("a", 1.0, 0.0, dotJ),))
    cloud = sample_cloud(math.pi / 2, 0.0, N, count=500, seed=1)
    tr = propagate_cloud(cloud, sched, p, dt=dt, record_every=0)
    return tr, tr.n_ex_mean[-1]


def test_diabatic_limit_keeps_leakage_maximal():
    _, nex = _final_nex(50.0, dt=0.001)
    assert nex == pytest.approx(50.0, rel=0.1)


def test_adiabatic_limit_removes_leakage():
    _, nex = _final_nex(0.005)
    assert nex < 0.05 * 50


def test_sphere_constraint_conserved():
    tr, _ = _final_nex(0.1)
    assert np.max(tr.radius_drift) < 1e-6


def test_energy_drift_guard():
    p = ModelParams.reduced(100, 0.5)
    sched = ControlSchedule((Segment("s", 10.0, Constant(0.5), Constant(0.0)),))
    with pytest.raises(NumericalError):
        propagate_cloud(sample_cloud(1.0, 0.0, 100, count=10), sched, p, dt=2.0)


def test_energy_conserved_at_frozen_controls():
    p = ModelParams.reduced(100, 0.5)
    cloud = sample_cloud(1.0, 0.3, 100, count=50, seed=2)
    sched = ControlSchedule((Segment("s", 20.0, Constant(0.5), Constant(0.0)),))
    tr = propagate_cloud(cloud, sched, p, dt=0.02, record_every=0)
    E0 = classical_energy(cloud.points, 0.5, 0.0, p.U)
    E1 = classical_energy(tr.final.points, 0.5, 0.0, p.U)
    assert np.max(np.abs(E1 - E0)) / 20.0 < 1e-6 * p.NU


def test_crossover_reference_values():
    c = crossover_theta(1.0, ModelParams.reduced(100, 0.0))
    assert c.theta == pytest.approx(0.2679, rel=1e-3)
    assert c.adiabatic_border == pytest.approx(0.0474, rel=1e-3)
    assert c.diabatic_border == pytest.approx(0.4264, rel=1e-3)


def test_crossover_theta_inverse_in_rate():
    p = ModelParams.reduced(100, 0.0)
    assert crossover_theta(0.2, p).theta == pytest.approx(5 * crossover_theta(1.0, p).theta)
