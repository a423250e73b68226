import math

import numpy as np
import pytest

from noon_dimer.core import ModelParams
from noon_dimer.errors import DomainError
from noon_dimer.spectrum import spectrum
from noon_dimer.wkb import (
    WkbContext,
    area_derivative,
    omega_E,
    omega_from_area,
    omega_J,
    omega_x,
    phase_space_area,
    wkb_levels,
)


def test_area_derivative_at_top_of_harmonic_well():
    ctx = WkbContext(ModelParams.reduced(500, 2.0))
    assert area_derivative(1e-9, ctx) == pytest.approx(2 * math.pi / math.sqrt(2), rel=1e-6)


def test_quadrature_against_log_form_at_omega_J():
    p = ModelParams.reduced(500, 0.4)
    E = omega_J(p)
    assert omega_from_area(E, WkbContext(p)) == pytest.approx(omega_E(E, p), rel=0.10)


def test_area_derivative_diverges_towards_separatrix():
    ctx = WkbContext(ModelParams.reduced(500, 0.4))
    Es = [0.5, 0.1, 1e-2, 1e-4, 1e-8]
    values = [area_derivative(E, ctx) for E in Es]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_area_derivative_needs_positive_energy():
    with pytest.raises(DomainError):
        area_derivative(-0.1, WkbContext(ModelParams.reduced(50, 0.4)))


@pytest.mark.parametrize("J,expected", [(2.0, math.sqrt(2)), (1.0, 0.0), (0.4, math.sqrt(0.24))])
def test_omega_J(J, expected):
    assert omega_J(ModelParams.reduced(100, J)) == pytest.approx(expected, abs=1e-15)


def test_omega_J_matches_exact_gap_deep_in_harmonic_regime():
    p = ModelParams.reduced(1000, 2.0)
    E = spectrum(p, levels=2).energies
    assert E[1] - E[0] == pytest.approx(math.sqrt(2), rel=0.02)


def test_omega_x_reference_point():
    p = ModelParams.reduced(30, 0.5)
    assert 16 * omega_J(p) ** 3 / (30 * 0.5 * p.U**2) == pytest.approx(120.0)
    assert omega_x(p) == pytest.approx(0.5 * math.pi / math.log(120.0), rel=1e-14)
    assert omega_x(p) == pytest.approx(0.3279, rel=1e-3)
    assert math.pi / omega_x(p) == pytest.approx(9.58, abs=0.01)


def test_omega_x_vanishes_in_classical_limit():
    w = [omega_x(ModelParams.reduced(N, 0.5)) for N in (10**2, 10**4, 10**8, 10**16)]
    assert all(b < a for a, b in zip(w, w[1:]))
    # the decay is only logarithmic in N
    assert w[-1] < 0.2 * w[0]


def test_omega_x_needs_separatrix():
    with pytest.raises(DomainError):
        omega_x(ModelParams.reduced(30, 1.2))


def test_omega_E_at_omega_J_is_omega_x():
    p = ModelParams.reduced(500, 0.4)
    assert omega_E(omega_J(p), p) == pytest.approx(omega_x(p), rel=1e-14)


def test_omega_E_grows_away_from_separatrix():
    p = ModelParams.reduced(500, 0.4)
    w = [omega_E(E, p) for E in (1e-4, 1e-3, 1e-2, 0.1)]
    assert all(b > a for a, b in zip(w, w[1:]))


def test_omega_E_window():
    with pytest.raises(DomainError):
        omega_E(-0.1, ModelParams.reduced(500, 0.4))
    with pytest.raises(DomainError):
        omega_E(1e3, ModelParams.reduced(500, 0.4))


@pytest.mark.parametrize("J", [0.1, 0.2, 0.3])
@pytest.mark.parametrize("E", [0.01, 0.03, 0.1])
def test_quadrature_and_log_form_agree(J, E):
    p = ModelParams.reduced(500, J)
    q = 2 * math.pi / area_derivative(E, WkbContext(p))
    assert q == pytest.approx(omega_E(E, p), rel=0.15)


def test_total_phase_space_area():
    for J in (0.4, 2.0):
        ctx = WkbContext(ModelParams.reduced(500, J))
        assert phase_space_area(ctx.E_max, ctx) == pytest.approx(2 * math.pi * 500, rel=1e-10)


def test_wkb_levels_harmonic_regime():
    p = ModelParams.reduced(500, 2.0)
    exact = spectrum(p, levels=10).energies
    approx = wkb_levels(WkbContext(p), 10)
    spacing = np.diff(exact)
    assert np.max(np.abs(approx - exact)) < 0.01 * spacing.min()


def test_harmonic_spacing_is_uniform():
    p = ModelParams.reduced(1000, 20.0)
    gaps = np.diff(spectrum(p, levels=8).energies)
    assert np.ptp(gaps) / gaps.mean() < 0.01
    assert gaps.mean() == pytest.approx(omega_J(p), rel=0.01)


def test_wkb_levels_reproduce_doublets():
    p = ModelParams.reduced(100, 0.4)
    lv = wkb_levels(WkbContext(p), 6)
    assert lv[0] == lv[1] and lv[2] == lv[3]
    exact = spectrum(p, levels=6).energies
    assert np.max(np.abs(lv - exact)) < 0.05 * (exact[2] - exact[0])


def test_omega_x_below_omega_J():
    for J in np.linspace(0.05, 0.95, 10):
        p = ModelParams.reduced(1000, J)
        assert omega_x(p) < omega_J(p)
