import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from noon_dimer.core import (
    ModelParams,
    QuantumState,
    build_hamiltonian,
    cat_state,
    coherent_state,
    critical_coupling,
    fock_state,
)
from noon_dimer.errors import DomainError, InvalidParameterError

from oracles import brute_force_hamiltonian


def test_single_atom_elements():
    H = build_hamiltonian(ModelParams(1, 1.0, 0.5, 0.2))
    assert np.allclose(H.diag, [-0.25 - 0.1, -0.25 + 0.1], atol=1e-15)
    assert np.allclose(H.offdiag, [-0.25], atol=1e-15)


def test_two_atoms_without_hopping():
    H = build_hamiltonian(ModelParams(2, 1.0, 0.0, 0.0))
    assert np.allclose(H.diag, [-1, 0, -1])
    assert np.allclose(H.offdiag, [0, 0])


def test_three_atoms_against_second_quantization():
    H = build_hamiltonian(ModelParams(3, 0.3, 0.8, 0.1)).to_dense()
    ref = brute_force_hamiltonian(3, 0.3, 0.8, 0.1)
    assert np.max(np.abs(H - ref)) < 1e-14


@settings(max_examples=60, deadline=None)
@given(
    N=st.integers(1, 6),
    U=st.floats(0.01, 3.0),
    J=st.floats(0.0, 3.0),
    Delta=st.floats(-2.0, 2.0),
)
def test_tridiagonal_matches_brute_force(N, U, J, Delta):
    H = build_hamiltonian(ModelParams(N, U, J, Delta)).to_dense()
    assert np.max(np.abs(H - brute_force_hamiltonian(N, U, J, Delta))) < 1e-14
    assert np.array_equal(H, H.T)


@given(N=st.integers(1, 40), J=st.floats(0, 5))
def test_mirror_symmetric_diagonal_at_zero_bias(N, J):
    H = build_hamiltonian(ModelParams.reduced(N, J))
    assert np.allclose(H.diag, H.diag[::-1], rtol=0, atol=1e-14)


def test_matvec_agrees_with_dense():
    H = build_hamiltonian(ModelParams(7, 0.2, 0.9, -0.3))
    v = np.random.default_rng(1).normal(size=8)
    assert np.allclose(H.matvec(v), H.to_dense() @ v, atol=1e-14)


def test_invalid_parameters_rejected():
    with pytest.raises(InvalidParameterError):
        ModelParams(0, 1.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(4, 1.0, J=-1.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(4, float("nan"))


@pytest.mark.parametrize("Delta,expected", [(0.0, 1.0), (1.0, 0.0)])
def test_critical_coupling_limits(Delta, expected):
    assert critical_coupling(10, 0.1, Delta) == pytest.approx(expected, abs=1e-15)


def test_critical_coupling_half_bias():
    # (1 - 0.5^(2/3))^(3/2)
    assert critical_coupling(10, 0.1, 0.5) == pytest.approx(0.2250982322, rel=1e-9)


def test_critical_coupling_domain():
    with pytest.raises(DomainError):
        critical_coupling(10, 0.1, 1.5)


def test_coherent_state_north_pole():
    assert np.allclose(coherent_state(4, 0.0, 1.234).amps, [1, 0, 0, 0, 0])


def test_coherent_state_equator_two_atoms():
    assert np.allclose(coherent_state(2, math.pi / 2, 0.0).amps, [0.5, 1 / math.sqrt(2), 0.5])


def test_coherent_state_alternating_binomial():
    N = 30
    # expand (a1^+ - a2^+)^N / sqrt(N! 2^N) term by term
    ref = np.array([(-1) ** n * math.sqrt(comb(N, n, exact=True)) / 2 ** (N / 2) for n in range(N + 1)])
    assert np.allclose(coherent_state(N, math.pi / 2, math.pi).amps, ref, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(N=st.integers(1, 200), theta=st.floats(0, math.pi), phi=st.floats(-math.pi, math.pi))
def test_coherent_state_norm_and_polarization(N, theta, phi):
    psi = coherent_state(N, theta, phi)
    assert abs(np.linalg.norm(psi.amps) - 1) < 1e-12
    assert psi.expect_spin()[2] == pytest.approx(N / 2 * math.cos(theta), abs=1e-10 * max(N, 1))


def test_large_coherent_state_does_not_overflow():
    psi = coherent_state(2000, 1.0, 0.3)
    assert np.isfinite(psi.amps).all()


def test_cat_states():
    even, odd = cat_state(10, 0.0), cat_state(10, math.pi)
    assert np.allclose(even.amps[[0, -1]], [1 / math.sqrt(2)] * 2)
    assert np.allclose(odd.amps[[0, -1]], [1 / math.sqrt(2), -1 / math.sqrt(2)])
    assert abs(even.overlap(odd)) < 1e-15


def test_state_must_be_normalized():
    with pytest.raises(InvalidParameterError):
        QuantumState(2, np.array([1.0, 1.0, 0.0]))
    psi = QuantumState.from_vector([1.0, 1.0, 0.0], normalize=True)
    assert psi.fidelity(fock_state(2, 0)) == pytest.approx(0.5)
