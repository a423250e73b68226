"""Semiclassical spectrum of the zero-bias dimer.

Phase space is parametrized by the pair ``(n, phi)`` measured relative to the
x pole of the Bloch sphere.  With energies taken from ``E_x = -J N / 2`` the
classical Hamiltonian reads ``E = J n - U (N - n) n sin^2(phi)``, so an orbit
of energy ``E`` follows

    n_pm(phi) = [-(J - NU s) +- sqrt(D)] / (2 U s),   s = sin^2(phi),
    D = (J - NU s)^2 + 4 E U s.

Levels follow from the area condition ``A(E) = (nu' + 1/2) h`` with the Planck
cell ``h = 2 pi N / (N + 1)``.  Below the separatrix (``E < 0``, ``J < NU``)
the orbits split into two mirror wells and only doublet centres are
produced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .core import ModelParams
from .errors import DomainError, InvalidParameterError, NumericalError

QUAD_RTOL = 1e-8
_LIMIT = 400


@dataclass(frozen=True)
class WkbContext:
    """Classical phase space of a zero-bias dimer.

    With ``langer=True`` the classical spin length is taken as ``(N + 1)/2``
    and the Planck cell as ``2 pi``.  Spacings are practically unchanged, but
    absolute levels then carry the correct zero-point offset, which the plain
    length ``N/2`` misses by about ``J/2``.
    """

    params: ModelParams
    langer: bool = False

    def __post_init__(self):
        p = self.params
        if p.Delta != 0.0:
            raise DomainError("the WKB analysis is formulated at zero bias")
        if p.J <= 0 or p.U <= 0:
            raise DomainError("WKB analysis needs J > 0 and U > 0")

    @property
    def n_eff(self) -> float:
        return self.params.N + (1 if self.langer else 0)

    @property
    def J(self) -> float:
        return self.params.J

    @property
    def U(self) -> float:
        return self.params.U

    @property
    def NU(self) -> float:
        return self.n_eff * self.params.U

    @property
    def E_x(self) -> float:
        """Energy origin: the classical energy of the x pole."""
        return -self.J * self.n_eff / 2.0

    @property
    def planck_cell(self) -> float:
        if self.langer:
            return 2.0 * math.pi
        N = self.params.N
        return 2.0 * math.pi * N / (N + 1.0)

    @property
    def E_min(self) -> float:
        """Bottom of the classical landscape, relative to ``E_x``."""
        if self.J >= self.NU:
            return 0.0
        return -((self.NU - self.J) ** 2) / (4.0 * self.U)

    @property
    def E_max(self) -> float:
        """Top of the landscape (the -x pole), relative to ``E_x``."""
        return self.J * self.n_eff

    @property
    def has_separatrix(self) -> bool:
        return self.J < self.NU


def _disc(E, s, J, NU, U):
    return (J - NU * s) ** 2 + 4.0 * E * U * s


def _quad(f, a, b, **kw):
    val, err = quad(f, a, b, epsrel=QUAD_RTOL, epsabs=0.0, limit=_LIMIT, **kw)
    if not math.isfinite(val):
        raise NumericalError("quadrature returned a non-finite value")
    return val


def area_derivative(E: float, ctx: WkbContext) -> float:
    """``A'(E) = 4 int_0^{pi/2} dphi / sqrt(D)`` for ``E > 0``.

    The integrand peaks sharply at ``phi_r = arcsin(sqrt(J/NU))`` close to the
    separatrix, so the range is split there.  Level spacing follows as
    ``h / A'(E)``.
    """
    if not E > 0:
        raise DomainError(
            f"A'(E) diverges or is undefined for E = {E} <= 0; "
            "use well_area_derivative below the separatrix"
        )
    J, NU, U = ctx.J, ctx.NU, ctx.U

    def f(phi):
        s = math.sin(phi) ** 2
        return 1.0 / math.sqrt(_disc(E, s, J, NU, U))

    if ctx.has_separatrix:
        phi_r = math.asin(math.sqrt(J / NU))
        total = _quad(f, 0.0, phi_r) + _quad(f, phi_r, math.pi / 2)
    else:
        total = _quad(f, 0.0, math.pi / 2)
    return 4.0 * total


def _well_edge(E: float, ctx: WkbContext) -> float:
    """Angle where an orbit of energy ``E < 0`` touches ``D = 0``."""
    J, NU, U = ctx.J, ctx.NU, ctx.U
    b = 4.0 * E * U - 2.0 * J * NU
    disc = b * b - 4.0 * NU**2 * J**2
    s_hi = (-b + math.sqrt(max(disc, 0.0))) / (2.0 * NU**2)
    return math.asin(min(1.0, math.sqrt(s_hi)))


def _check_well(E, ctx):
    if not ctx.has_separatrix:
        raise DomainError("no separatrix for J >= N U: the wells do not exist")
    if not ctx.E_min < E < 0:
        raise DomainError(f"E = {E} lies outside the wells ({ctx.E_min}, 0)")


def well_area_derivative(E: float, ctx: WkbContext) -> float:
    """``dA/dE`` of a single well orbit, ``E_min < E < 0``.

    Equals ``4 int_{phi_w}^{pi/2} dphi / sqrt(D)`` with ``phi_w`` the turning
    angle; the inverse square-root edge singularity is handled with an
    algebraic quadrature weight.  The doublet-centre spacing is
    ``h / well_area_derivative``.
    """
    _check_well(E, ctx)
    J, NU, U = ctx.J, ctx.NU, ctx.U
    a = _well_edge(E, ctx)

    def g(phi):
        s = math.sin(phi) ** 2
        d = _disc(E, s, J, NU, U)
        x = phi - a
        if d <= 0.0 or x <= 0.0:
            # limit of sqrt(x / D) at the turning point
            dd = -2.0 * (J - NU * s) * NU * math.sin(2 * phi) + 4.0 * E * U * math.sin(2 * phi)
            return 1.0 / math.sqrt(abs(dd)) if dd != 0 else 0.0
        return math.sqrt(x / d)

    return 4.0 * _quad(g, a, math.pi / 2, weight="alg", wvar=(-0.5, 0.0))


def phase_space_area(E: float, ctx: WkbContext) -> float:
    """Phase-space area ``A(E)`` enclosed by the orbit(s) of energy ``E``.

    For ``E >= 0`` this is the area around the x pole; below the separatrix it
    is the combined area of both wells.  ``A(E_max) = 2 pi N``.
    """
    J, NU, U = ctx.J, ctx.NU, ctx.U
    if E < 0:
        _check_well(E, ctx)
        a = _well_edge(E, ctx)

        def w(phi):
            s = math.sin(phi) ** 2
            return math.sqrt(max(_disc(E, s, J, NU, U), 0.0)) / (U * s)

        if math.pi / 2 - a < 1e-6:
            return 0.0  # orbit shrunk onto the well bottom
        # near E = 0 the integrand develops a kink at phi_r
        phi_r = math.asin(math.sqrt(J / NU))
        pts = [phi_r] if a < phi_r < math.pi / 2 else None
        return 4.0 * _quad(w, a, math.pi / 2, points=pts)
    if E > ctx.E_max * (1 + 1e-12):
        raise DomainError(f"E = {E} exceeds the top of the spectrum {ctx.E_max}")

    def n_plus(phi):
        s = math.sin(phi) ** 2
        b = J - NU * s
        root = math.sqrt(max(_disc(E, s, J, NU, U), 0.0))
        if b > 0:
            return 2.0 * E / (b + root)
        return (root - b) / (2.0 * U * s)

    pts = None
    if ctx.has_separatrix:
        pts = [math.asin(math.sqrt(J / NU))]
    return 4.0 * _quad(n_plus, 0.0, math.pi / 2, points=pts)


def omega_J(params: ModelParams) -> float:
    """``sqrt(|J - NU| J)``: small-oscillation frequency at the x pole.

    For ``J < NU`` it is the instability exponent of the hyperbolic point.
    """
    if params.J < 0:
        raise InvalidParameterError("J must be non-negative")
    return math.sqrt(abs(params.J - params.NU) * params.J)


def _log_argument(params: ModelParams, E: float) -> float:
    wJ = omega_J(params)
    return 16.0 * wJ**4 / (params.N * params.J * params.U**2 * E)


def omega_x(params: ModelParams) -> float:
    """Effective level spacing along the separatrix.

    ``omega_x = omega_J / [(1/pi) ln(16 omega_J^3 / (N J U^2))]``.
    """
    if not 0 < params.J < params.NU:
        raise DomainError("omega_x needs 0 < J < N U (a separatrix must exist)")
    arg = _log_argument(params, omega_J(params))
    if arg <= 1.0:
        raise DomainError(f"log argument {arg:.4g} <= 1: approximation invalid")
    return omega_J(params) * math.pi / math.log(arg)


def omega_E(E: float, params: ModelParams) -> float:
    """Logarithmic approximation ``omega(E) = pi omega_J / ln(16 omega_J^4/(N J U^2 E))``.

    Valid above the separatrix (``E > 0`` from ``E_x``) for ``J < J_c`` and
    as long as the result stays below ``omega_J``, i.e. the logarithm exceeds
    ``pi``.
    """
    if not 0 < params.J < params.NU:
        raise DomainError("omega(E) needs 0 < J < N U")
    if not E > 0:
        raise DomainError(f"omega(E) needs E > 0, got {E}")
    L = math.log(_log_argument(params, E))
    if L <= math.pi:
        raise DomainError(f"E = {E} is outside the logarithmic window (ln = {L:.3f})")
    return math.pi * omega_J(params) / L


def omega_from_area(E: float, ctx: WkbContext) -> float:
    """Level spacing ``h / A'(E)``; uses the single-well derivative for ``E < 0``."""
    if E < 0:
        return ctx.planck_cell / well_area_derivative(E, ctx)
    return ctx.planck_cell / area_derivative(E, ctx)


def _solve_area(target: float, lo: float, hi: float, ctx: WkbContext) -> float:
    f = lambda e: phase_space_area(e, ctx) - target
    try:
        return brentq(f, lo, hi, xtol=1e-13 * max(1.0, abs(hi - lo)), rtol=1e-12)
    except ValueError as exc:
        raise NumericalError(f"could not bracket area {target}: {exc}") from exc


def wkb_levels(ctx: WkbContext, count: int) -> np.ndarray:
    """Lowest ``count`` WKB energies (absolute, comparable with the exact spectrum).

    Below the separatrix each doublet centre solves ``A(E) = (2k + 1) h`` and is
    listed twice; above it ``A(E) = (nu' + 1/2) h``.  The quantization is done
    in the Langer-corrected phase space whatever ``ctx.langer`` says, since
    the uncorrected one shifts every level by roughly ``J/2``.
    """
    if not ctx.langer:
        ctx = WkbContext(ctx.params, langer=True)
    N = ctx.params.N
    if not 1 <= count <= N + 1:
        raise InvalidParameterError(f"count must lie in 1..{N + 1}")
    h = ctx.planck_cell
    A_sep = phase_space_area(0.0, ctx) if ctx.has_separatrix else 0.0
    e_lo_well = ctx.E_min * (1 - 1e-14)
    levels = []
    for nu in range(count):
        k = nu // 2
        if ctx.has_separatrix and (2 * k + 1) * h < A_sep:
            E = _solve_area((2 * k + 1) * h, e_lo_well, -1e-300, ctx)
        else:
            target = (nu + 0.5) * h
            if target <= A_sep:
                E = 0.0
            else:
                E = _solve_area(target, 0.0, ctx.E_max, ctx)
        levels.append(E + ctx.E_x)
    return np.array(levels)
