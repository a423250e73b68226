"""Eigensystem of the dimer Hamiltonian, parity labels, gaps and the
adiabaticity susceptibility F(J).

At zero bias the Hamiltonian commutes with the mirror ``n -> N - n`` and is
diagonalized block by block.  This keeps eigenvectors parity-pure even when
the doublet splitting underflows double precision, which a full
diagonalization cannot guarantee.  Levels are numbered from 1 (ground state).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .core import (
    ModelParams,
    TridiagonalHamiltonian,
    build_hamiltonian,
    sx_offdiagonal,
    sz_diagonal,
)
from .errors import DegeneracyError, DomainError, InvalidParameterError, NumericalError

DEGENERACY_RTOL = 1e-13
EVEN, ODD = "even", "odd"


@dataclass(frozen=True)
class SpectrumSnapshot:
    """Lowest ``len(energies)`` levels of ``H`` with their eigenvectors.

    ``vectors[:, k]`` belongs to level ``k + 1``.  ``parity`` is only filled
    in at zero bias.
    """

    energies: np.ndarray
    vectors: np.ndarray
    params: ModelParams
    parity: Optional[tuple] = None

    @property
    def count(self) -> int:
        return self.energies.shape[0]

    def vector(self, level: int) -> np.ndarray:
        _check_level(level, self.count)
        return self.vectors[:, level - 1]


def _check_level(level: int, count: int) -> None:
    if not 1 <= level <= count:
        raise InvalidParameterError(f"level {level} outside 1..{count}")


def _fix_sign(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _solve(d, e, count):
    if d.shape[0] == 1:
        return d.copy(), np.ones((1, 1))
    try:
        if count >= d.shape[0]:
            return eigh_tridiagonal(d, e)
        return eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    except LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc


def parity_blocks(H: TridiagonalHamiltonian):
    """Split a zero-bias Hamiltonian into its mirror-even and mirror-odd blocks.

    Returns ``((d_even, o_even), (d_odd, o_odd))`` in the symmetrized bases
    ``(|k> +- |N-k>)/sqrt(2)`` for ``k < N/2`` (plus ``|N/2>`` in the even
    block when N is even).
    """
    N = H.params.N
    d, o = H.diag, H.offdiag
    if N % 2 == 0:
        m = N // 2
        de, oe = d[: m + 1].copy(), o[:m].copy()
        oe[-1] *= np.sqrt(2.0)
        do, oo = d[:m].copy(), o[: m - 1].copy()
    else:
        m = (N + 1) // 2
        de, oe = d[:m].copy(), o[: m - 1].copy()
        do, oo = d[:m].copy(), o[: m - 1].copy()
        de[-1] += o[m - 1]
        do[-1] -= o[m - 1]
    return (de, oe), (do, oo)


def _embed(N: int, w: np.ndarray, even: bool) -> np.ndarray:
    """Map block eigenvectors back to the full Fock basis."""
    v = np.zeros((N + 1, w.shape[1]))
    r = 1.0 / np.sqrt(2.0)
    if N % 2 == 0 and even:
        m = N // 2
        v[:m] = w[:m] * r
        v[m] = w[m]
        v[m + 1:] = (w[:m] * r)[::-1]
    else:
        m = w.shape[0]
        v[:m] = w * r
        v[N - m + 1:] = ((-r if not even else r) * w)[::-1]
    return v


def eigensystem(H: TridiagonalHamiltonian, levels: Optional[int] = None) -> SpectrumSnapshot:
    """Lowest ``levels`` eigenpairs of ``H`` (all of them by default).

    Eigenvectors follow the sign convention of :func:`_fix_sign`.  At zero
    bias the spectrum is assembled from the two parity blocks; for ``J > 0``
    the even and odd ladders strictly interleave, starting with an even
    ground state.
    """
    dim = H.dim
    count = dim if levels is None else int(levels)
    if not 1 <= count <= dim:
        raise InvalidParameterError(f"levels must lie in 1..{dim}, got {levels}")
    p = H.params
    if p.Delta != 0.0:
        E, V = _solve(np.asarray(H.diag), np.asarray(H.offdiag), count)
        return SpectrumSnapshot(E, _fix_sign(V), p, None)

    (de, oe), (do, oo) = parity_blocks(H)
    n_even = (count + 1) // 2
    n_odd = count // 2
    Ee, We = _solve(de, oe, n_even)
    E = np.empty(count)
    V = np.empty((dim, count))
    E[0::2] = Ee
    V[:, 0::2] = _embed(p.N, We, True)
    if n_odd:
        Eo, Wo = _solve(do, oo, n_odd)
        E[1::2] = Eo
        V[:, 1::2] = _embed(p.N, Wo, False)
    # Interleaving holds exactly; enforce it against last-bit rounding.
    E = np.maximum.accumulate(E)
    parity = tuple(EVEN if k % 2 == 0 else ODD for k in range(count))
    return SpectrumSnapshot(E, _fix_sign(V), p, parity)


def spectrum(params: ModelParams, levels: Optional[int] = None) -> SpectrumSnapshot:
    """Shortcut for ``eigensystem(build_hamiltonian(params), levels)``."""
    return eigensystem(build_hamiltonian(params), levels)


def _parity_of(v: np.ndarray) -> str:
    return EVEN if float(np.dot(v, v[::-1])) >= 0 else ODD


def classify_parity(snapshot: SpectrumSnapshot) -> tuple:
    """Mirror parity (``"even"``/``"odd"``) of every level in the snapshot."""
    if snapshot.params.Delta != 0.0:
        raise DomainError("parity is only defined at zero bias")
    if snapshot.parity is not None:
        return snapshot.parity
    return tuple(_parity_of(snapshot.vectors[:, k]) for k in range(snapshot.count))


def apply_sx(v: np.ndarray) -> np.ndarray:
    """``S_x v`` for a vector (or columns of a matrix) in the Fock basis."""
    N = v.shape[0] - 1
    s = sx_offdiagonal(N)
    if v.ndim == 2:
        s = s[:, None]
    out = np.zeros_like(v)
    out[:-1] += s * v[1:]
    out[1:] += s * v[:-1]
    return out


def matrix_element(snapshot: SpectrumSnapshot, mu: int, nu: int, op: str = "x") -> float:
    """``<mu|S_op|nu>`` between two levels, ``op`` in ``{"x", "z"}``."""
    a, b = snapshot.vector(mu), snapshot.vector(nu)
    if op == "x":
        return float(np.dot(a, apply_sx(b)))
    if op == "z":
        return float(np.dot(a, sz_diagonal(snapshot.params.N) * b))
    raise InvalidParameterError(f"unknown operator {op!r}")


def check_gap(snapshot: SpectrumSnapshot, mu: int, nu: int) -> float:
    """Return ``E_mu - E_nu``; raise if the pair is degenerate."""
    gap = float(snapshot.energies[mu - 1] - snapshot.energies[nu - 1])
    scale = build_hamiltonian(snapshot.params).norm_bound()
    if abs(gap) <= DEGENERACY_RTOL * max(scale, 1e-300):
        raise DegeneracyError(
            f"levels {nu} and {mu} are degenerate (gap {gap:.3e}) at {snapshot.params}"
        )
    return gap


def f_susceptibility(params: ModelParams, from_level: int = 1, to_level: int = 3,
                     snapshot: Optional[SpectrumSnapshot] = None) -> float:
    """Susceptibility ``F = |<mu|S_x|nu>| / (E_mu - E_nu)^2``.

    The rate ``dJ/dt = lam / F`` keeps the scaled sweep rate of the channel
    ``nu -> mu`` equal to ``lam``.  At zero bias a channel joining opposite
    parities has a vanishing matrix element and returns 0 without looking at
    the (possibly underflowed) gap.
    """
    nu, mu = int(from_level), int(to_level)
    if nu == mu:
        raise InvalidParameterError("from_level and to_level must differ")
    if snapshot is None:
        snapshot = spectrum(params, levels=max(nu, mu))
    _check_level(max(nu, mu), snapshot.count)
    if snapshot.parity is not None and snapshot.parity[nu - 1] != snapshot.parity[mu - 1]:
        return 0.0
    gap = check_gap(snapshot, mu, nu)
    return abs(matrix_element(snapshot, mu, nu, "x")) / gap**2


def frequency_from_spectrum(snapshot: SpectrumSnapshot, level: int) -> float:
    """Level spacing ``E_{level+1} - E_level``."""
    if not 1 <= level < snapshot.count:
        raise InvalidParameterError(
            f"level {level} needs 1 <= level < {snapshot.count}"
        )
    return float(snapshot.energies[level] - snapshot.energies[level - 1])


def level_spacings(snapshot: SpectrumSnapshot) -> np.ndarray:
    return np.diff(snapshot.energies)
