"""Order-of-magnitude numbers for an optical-tweezer realization, in SI units.

All inputs and outputs are SI; frequencies are angular (rad/s) unless the
name ends in ``_hz``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy import constants as C

from .errors import InvalidParameterError

K39_MASS = 38.96370649 * C.atomic_mass
COLLAPSE_PREFACTOR = 0.57


@dataclass(frozen=True)
class TrapSpec:
    """Trap and atom parameters.  ``a`` is negative for attractive atoms."""

    V0: float = 1.28e-27
    sigma: float = 10e-6
    lambda0: float = 1064e-9
    m: float = K39_MASS
    rho: float = 1e20
    a: float = -5 * C.physical_constants["Bohr radius"][0]
    P0: float = 0.1
    tau: float = 1e-3

    def __post_init__(self):
        for name in ("V0", "sigma", "lambda0", "m", "rho", "P0", "tau"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {v!r}")
        if not math.isfinite(self.a) or self.a == 0:
            raise InvalidParameterError("scattering length a must be finite and non-zero")


@dataclass(frozen=True)
class TrapFrequencies:
    Omega_r: float
    Omega_z: float
    Z_r: float


@dataclass(frozen=True)
class CondensateNumbers:
    N: int
    N_exact: float
    U: float          # interaction energy over hbar (rad/s)
    NU: float         # scale of the hopping J at the bifurcation (rad/s)
    N_c: float
    w_r: float
    w_z: float
    collapse_risk: bool


def trap_frequencies(spec: TrapSpec) -> TrapFrequencies:
    """Harmonic frequencies at the bottom of a Gaussian tweezer."""
    Z_r = math.pi * spec.sigma**2 / spec.lambda0
    Omega_r = math.sqrt(4 * spec.V0 / (spec.m * spec.sigma**2))
    Omega_z = math.sqrt(2 * spec.V0 / (spec.m * Z_r**2))
    return TrapFrequencies(Omega_r, Omega_z, Z_r)


def condensate_numbers(spec: TrapSpec) -> CondensateNumbers:
    """Atom number, interaction scale and collapse threshold.

    ``U = 4 pi hbar^2 rho |a| / m`` (returned divided by hbar) and
    ``N_c = 0.57 (w_r^2 w_z)^(1/3) / |a|``.
    """
    f = trap_frequencies(spec)
    hbar = C.hbar
    w_r = math.sqrt(hbar / (spec.m * f.Omega_r))
    w_z = math.sqrt(hbar / (spec.m * f.Omega_z))
    N_exact = spec.rho * math.pi**1.5 * w_r**2 * w_z
    N = int(round(N_exact))
    U = 4 * math.pi * hbar * spec.rho * abs(spec.a) / spec.m
    N_c = COLLAPSE_PREFACTOR * (w_r**2 * w_z) ** (1.0 / 3.0) / abs(spec.a)
    return CondensateNumbers(N, N_exact, U, N * U, N_c, w_r, w_z, N >= N_c)


def intensity_shot_noise(spec: TrapSpec) -> float:
    """Relative photon shot noise ``sqrt(h c / (lambda tau P0))``."""
    return math.sqrt(C.h * C.c / (spec.lambda0 * spec.tau * spec.P0))


def required_power_stability(spec: TrapSpec, bias_fraction: float = 0.01) -> float:
    """Relative power stability that keeps bias noise below ``bias_fraction * U``."""
    U_joule = condensate_numbers(spec).U * C.hbar
    return bias_fraction * U_joule / spec.V0


def sweep_time_estimate(spec: TrapSpec, lambda_rate: float, C_const: float) -> float:
    """Duration ``(C / lam) (U / h)^-1`` of an optimized sweep, in seconds."""
    if not (lambda_rate > 0 and C_const > 0):
        raise InvalidParameterError("lambda_rate and C must be positive")
    U_hz = condensate_numbers(spec).U / (2 * math.pi)
    return C_const / lambda_rate / U_hz


def feasibility_report(spec: TrapSpec, lambda_rate: float = 0.1, C_split: float = 0.07,
                       C_branch: float = 0.02) -> dict:
    """All derived numbers in one flat dictionary."""
    f = trap_frequencies(spec)
    c = condensate_numbers(spec)
    two_pi = 2 * math.pi
    noise = intensity_shot_noise(spec)
    need = required_power_stability(spec)
    return {
        "spec": asdict(spec),
        "Omega_r_hz": f.Omega_r / two_pi,
        "Omega_z_hz": f.Omega_z / two_pi,
        "Z_r_m": f.Z_r,
        "w_r_m": c.w_r,
        "w_z_m": c.w_z,
        "N": c.N,
        "N_exact": c.N_exact,
        "U_hz": c.U / two_pi,
        "NU_hz": c.NU / two_pi,
        "N_c": c.N_c,
        "collapse_risk": c.collapse_risk,
        "shot_noise": noise,
        "required_stability": need,
        "stability_margin": need / noise,
        "sweep_time_split_s": sweep_time_estimate(spec, lambda_rate, C_split),
        "sweep_time_branch_s": sweep_time_estimate(spec, lambda_rate, C_branch),
        "hierarchy_ok": c.NU <= 1.05 * f.Omega_r,
    }
