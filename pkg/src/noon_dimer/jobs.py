"""Batch experiments behind the CLI subcommands.

Every job takes a resolved :class:`~noon_dimer.config.JobConfig` and returns
a :class:`JobOutput` holding plain numeric tables plus a summary; the CLI
only formats and writes them.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import estimation as est
from .config import JobConfig, build_config
from .core import ModelParams, cat_state, coherent_state, critical_coupling
from .errors import ConfigError, DomainError
from .feasibility import K39_MASS, TrapSpec, feasibility_report
from .husimi import husimi_grid
from .propagator import EvolutionPolicy, evolve, ground_state
from .protocol import (
    BRANCHING,
    SPLITTING,
    ControlSchedule,
    ProtocolConfig,
    build_schedule,
    f_effective,
    linear_sweep,
    adaptive_sweep,
    quench,
    rotate_y,
    run_protocol,
    sweep_time_T,
)
from .semiclassical import crossover_theta, propagate_cloud, sample_cloud
from .spectrum import f_susceptibility, spectrum
from .wkb import (
    WkbContext,
    omega_E,
    omega_from_area,
    omega_J,
    omega_x,
    wkb_levels,
)


@dataclass
class Table:
    name: str
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)


@dataclass
class JobOutput:
    tables: list
    summary: dict = field(default_factory=dict)
    extra_files: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# helpers

def model_params(cfg: JobConfig, J: Optional[float] = None, Delta: Optional[float] = None) -> ModelParams:
    m = cfg.model
    J = m["J"] if J is None else J
    J = m["J_max"] if J is None else J
    return ModelParams(m["N"], cfg.U, J, m["Delta"] if Delta is None else Delta)


def delta_max(cfg: JobConfig) -> float:
    d = cfg.model["Delta_max"]
    return cfg.U / 2.0 if d is None else d


def scan_values(cfg: JobConfig, default_var: str, start: float, stop: float,
                log: Optional[bool] = None) -> tuple:
    sc = cfg.scan
    var = default_var if sc["variable"] == "auto" else sc["variable"]
    if sc["values"] is not None:
        return var, list(sc["values"])
    a = start if sc["start"] is None else sc["start"]
    b = stop if sc["stop"] is None else sc["stop"]
    use_log = sc["log"] if log is None else (sc["log"] or log)
    if use_log:
        if a <= 0 or b <= 0:
            raise ConfigError("logarithmic scans need positive bounds")
        vals = np.geomspace(a, b, sc["steps"])
    else:
        vals = np.linspace(a, b, sc["steps"])
    return var, [float(v) for v in vals]


def derived_seed(seed: int, index: int) -> int:
    """Independent, reproducible seed for scan point ``index``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def parallel_map(fn: Callable, items: list, threads: int = 1) -> list:
    """Order-preserving map over independent scan points."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def policy_of(cfg: JobConfig) -> EvolutionPolicy:
    s = cfg.schedule
    return EvolutionPolicy(dt=s["dt"], snapshot_stride=s["record_stride"], levels=s["levels"])


def protocol_config(cfg: JobConfig, phi: Optional[float] = None) -> ProtocolConfig:
    s = cfg.schedule
    return ProtocolConfig(
        params=model_params(cfg, J=cfg.model["J_max"], Delta=0.0),
        phi=s["phi"] if phi is None else phi,
        Delta_max=delta_max(cfg),
        mode=s["mode"],
        dotJ=s["dotJ"],
        dotDelta=s["dotDelta"],
        lam=s["lambda"],
        policy=policy_of(cfg),
        seed=cfg.ensemble["seed"],
        J_floor=s["J_floor"],
    )


def _nan(f, *args):
    try:
        return f(*args)
    except DomainError:
        return float("nan")


# --------------------------------------------------------------------------
# spectrum

def job_spectrum(cfg: JobConfig, threads: int = 1) -> JobOutput:
    K = cfg.schedule["levels"]
    var, Js = scan_values(cfg, "J", 0.0, cfg.model["J_max"])
    if var != "J":
        raise ConfigError("spectrum scans J only")
    K = min(K, cfg.model["N"] + 1)
    rows = parallel_map(_spectrum_row, [(cfg.to_dict(), J, K) for J in Js], threads)
    cols = ["J"] + [f"E{k}" for k in range(1, K + 1)] + [f"gap{k}" for k in range(1, K)]
    return JobOutput([Table("spectrum.csv", cols, rows, {"N": cfg.model["N"], "U": cfg.U,
                                                          "Delta": cfg.model["Delta"]})])


def _spectrum_row(args):
    d, J, K = args
    cfg = build_config(d)
    snap = spectrum(model_params(cfg, J=J), K)
    E = snap.energies
    return [J] + list(E) + list(np.diff(E))


# --------------------------------------------------------------------------
# wkb

def job_wkb(cfg: JobConfig, threads: int = 1) -> JobOutput:
    J = cfg.model["J"] if cfg.model["J"] is not None else 0.4
    p = model_params(cfg, J=J, Delta=0.0)
    ctx = WkbContext(p)
    snap = spectrum(p)
    E = snap.energies
    count = min(cfg.model["N"] + 1, max(cfg.scan["steps"], 2))
    levels = wkb_levels(ctx, count)
    lev_rows = [[k + 1, E[k], levels[k]] for k in range(count)]
    spacing_rows = []
    Erel = E - ctx.E_x
    if ctx.has_separatrix:
        below = np.where(Erel < 0)[0]
        below = below[: 2 * (len(below) // 2)]
        centres = 0.5 * (Erel[below[0::2]] + Erel[below[1::2]]) if len(below) > 1 else np.array([])
        for a, b in zip(centres, centres[1:]):
            mid = 0.5 * (a + b)
            spacing_rows.append([mid, b - a, _nan(omega_from_area, mid, ctx), float("nan")])
        start = below[-1] + 1 if len(below) else 0
    else:
        start = 0
    for k in range(start, len(E) - 1):
        mid = 0.5 * (Erel[k] + Erel[k + 1])
        if mid <= 0:
            continue
        spacing_rows.append([mid, Erel[k + 1] - Erel[k], _nan(omega_from_area, mid, ctx),
                             _nan(omega_E, mid, p)])
    Jgrid = np.linspace(0.02, 1.5, 75) * p.NU
    omega_rows = []
    for Jv in Jgrid:
        q = p.replace(J=float(Jv))
        s = spectrum(q)
        idx = int(np.argmin(np.abs(s.energies + Jv * q.N / 2.0)))
        idx = min(idx, len(s.energies) - 2)
        omega_rows.append([float(Jv), float(s.energies[idx + 1] - s.energies[idx]),
                           omega_J(q), _nan(omega_x, q)])
    tables = [
        Table("wkb_levels.csv", ["level", "E_exact", "E_wkb"], lev_rows, {"N": p.N, "J": J, "U": p.U}),
        Table("wkb_spacing.csv", ["E_minus_Ex", "omega_exact", "omega_quadrature", "omega_log"],
              spacing_rows, {"N": p.N, "J": J, "U": p.U}),
        Table("omega_vs_J.csv", ["J", "omega_exact_near_Ex", "omega_J", "omega_x"], omega_rows,
              {"N": p.N, "U": p.U}),
    ]
    return JobOutput(tables, {"E_x": ctx.E_x, "E_min_rel": ctx.E_min})


# --------------------------------------------------------------------------
# quench

def job_quench(cfg: JobConfig, threads: int = 1) -> JobOutput:
    J = cfg.model["J"] if cfg.model["J"] is not None else 0.5
    p = model_params(cfg, J=J, Delta=cfg.model["Delta"])
    T = cfg.schedule["duration"]
    if T is None:
        T = math.pi / omega_x(p)
    init = coherent_state(p.N, math.pi / 2, 0.0)
    final = quench(p, T, init)
    n = np.arange(p.N + 1)
    pn_rows = [[int(k), float(a), float(b)] for k, a, b in
               zip(n, init.probabilities, final.probabilities)]
    times = np.linspace(0.0, T, max(cfg.scan["steps"], 2))
    trace = []
    for t in times:
        P = quench(p, float(t), init).probabilities
        trace.append([float(t), P[0], P[-1], est.mean_n_ex(P)])
    tables = [
        Table("quench_pn.csv", ["n", "P_initial", "P_final"], pn_rows, {"N": p.N, "J": J, "duration": T}),
        Table("quench_time.csv", ["t", "P0", "PN", "n_ex"], trace, {"N": p.N, "J": J}),
    ]
    return JobOutput(tables, {"duration": T, "P0": final.probabilities[0], "PN": final.probabilities[-1]})


# --------------------------------------------------------------------------
# protocol

def job_protocol(cfg: JobConfig, threads: int = 1) -> JobOutput:
    N = cfg.model["N"]
    if cfg.scan["variable"] == "phi" or cfg.scan["values"] is not None and cfg.scan["variable"] == "auto":
        _, phis = scan_values(cfg, "phi", 0.0, 2 * math.pi / N)
        rows = parallel_map(_phase_row, [(cfg.to_dict(), phi) for phi in phis], threads)
        cols = ["phi", "N_phi", "n_mean_over_N", "n_filtered_over_N", "ratio", "P0_plus_PN",
                "ideal_sin2"]
        return JobOutput([Table("phase_scan.csv", cols, rows, {"N": N, "mode": cfg.schedule["mode"]})])
    pc = protocol_config(cfg)
    result = run_protocol(pc)
    tr = result.trajectory
    K = tr.populations.shape[1]
    pop_rows = [[t, J, D] + list(p) + [dbl, nm, nx, nr] for t, J, D, p, dbl, nm, nx, nr in
                zip(tr.times, tr.J, tr.Delta, tr.populations, tr.doublet, tr.n_mean, tr.n_ex, tr.norm)]
    pop_cols = ["t", "J", "Delta"] + [f"p{k}" for k in range(1, K + 1)] + ["p1_plus_p2", "n_mean", "n_ex", "norm"]
    sched = result.schedule.sample()
    P = result.probabilities
    tables = [
        Table("populations.csv", pop_cols, pop_rows, {"N": N, "phi": pc.phi}),
        Table("schedule.csv", ["t", "J", "Delta"], sched.tolist(), {"duration": result.schedule.duration}),
        Table("final_pn.csv", ["n", "P"], [[int(k), float(v)] for k, v in enumerate(P)], {"N": N}),
    ]
    summary = {"n_mean_over_N": est.mean_n(P) / N, "P0": float(P[0]), "PN": float(P[-1]),
               "max_norm_error": float(np.max(np.abs(tr.norm - 1.0))),
               "duration": result.schedule.duration}
    if P[0] + P[-1] > 0:
        summary["ratio"] = est.two_port_ratio(P)
    M = cfg.ensemble["M"]
    if M > 0:
        sample = est.synthesize_measurements(result.distribution, M, cfg.ensemble["seed"])
        tables.append(Table("final_samples.csv", ["n", "P_hat"],
                            [[int(k), float(v)] for k, v in enumerate(sample.probabilities)],
                            {"M": M, "seed": cfg.ensemble["seed"]}))
    return JobOutput(tables, summary)


def _phase_row(args):
    d, phi = args
    cfg = build_config(d)
    pc = protocol_config(cfg, phi=phi)
    P = run_protocol(pc).probabilities
    N = pc.params.N
    s = P[0] + P[-1]
    filt = est.filtered_mean(P) / N if s > 0 else float("nan")
    ratio = est.two_port_ratio(P) if s > 0 else float("nan")
    return [phi, N * phi, est.mean_n(P) / N, filt, ratio, s, math.sin(N * phi / 2) ** 2]


# --------------------------------------------------------------------------
# n_ex scans (quantum and truncated Wigner)

def _split_initial(cfg: JobConfig, p: ModelParams, J0: float):
    kind = cfg.schedule["initial"]
    if kind == "ground":
        return ground_state(p.replace(J=J0)), "ground"
    return coherent_state(p.N, math.pi / 2, 0.0), "X"


def job_nex_scan(cfg: JobConfig, threads: int = 1) -> JobOutput:
    p = model_params(cfg, Delta=0.0)
    N = p.N
    adaptive = cfg.schedule["mode"] == "adaptive"
    if adaptive:
        var, vals = scan_values(cfg, "lambda", 0.02, 0.5, log=True)
    else:
        var, vals = scan_values(cfg, "dotJ", 0.005, 2.0, log=True)
    items = [(cfg.to_dict(), v, derived_seed(cfg.ensemble["seed"], i)) for i, v in enumerate(vals)]
    rows = parallel_map(_nex_row, items, threads)
    if adaptive:
        cols = ["lambda", "duration", "nex_quantum"]
        return JobOutput([Table("nex_vs_lambda.csv", cols, rows, {"N": N})])
    cross = crossover_theta(1.0, p)
    cols = ["dotJ", "nex_quantum", "nex_semiclassical", "nex_semiclassical_stderr",
            "border_adiabatic", "border_diabatic", "theta"]
    return JobOutput([Table("nex_vs_rate.csv", cols, rows, {"N": N})],
                     {"border_adiabatic": cross.adiabatic_border, "border_diabatic": cross.diabatic_border})


def _nex_row(args):
    d, value, seed = args
    cfg = build_config(d)
    p = model_params(cfg, Delta=0.0)
    pol = policy_of(cfg)
    if cfg.schedule["mode"] == "adaptive":
        J0 = cfg.schedule["J_start"] or cfg.model["J_max"]
        if cfg.schedule["initial"] == "auto":
            cfg.schedule["initial"] = "ground"
        seg = adaptive_sweep(p.replace(J=J0), value, SPLITTING, J_floor=cfg.schedule["J_floor"])
        sched = ControlSchedule((seg,))
        init, _ = _split_initial(cfg, p, J0)
        rec = evolve(init, sched, p, pol)
        return [value, seg.duration, est.mean_n_ex(rec.final_state.probabilities)]
    J0 = cfg.schedule["J_start"] or critical_coupling(p.N, p.U, 0.0)
    sched = ControlSchedule((linear_sweep("a", J0, 0.0, value),))
    init, _ = _split_initial(cfg, p, J0)
    rec = evolve(init, sched, p, pol)
    nq = est.mean_n_ex(rec.final_state.probabilities)
    cloud = sample_cloud(math.pi / 2, 0.0, p.N, cfg.ensemble["points"], seed, cfg.ensemble["mode"])
    tr = propagate_cloud(cloud, sched, p, dt=cfg.ensemble["dt"], record_every=0)
    cross = crossover_theta(value, p)
    return [value, nq, float(tr.n_ex_mean[-1]), float(tr.n_ex_stderr[-1]),
            cross.adiabatic_border, cross.diabatic_border, cross.theta]


# --------------------------------------------------------------------------
# F(J) and sweep times

def job_fscan(cfg: JobConfig, threads: int = 1) -> JobOutput:
    var = cfg.scan["variable"]
    if var == "N":
        _, Ns = scan_values(cfg, "N", 250, 1000, log=True)
        Ns = [int(round(n)) for n in Ns]
        rows = parallel_map(_sweep_time_row, [(cfg.to_dict(), n) for n in Ns], threads)
        logs = np.log([r[0] for r in rows])
        summary = {}
        if len(rows) > 1:
            slope = float(np.polyfit(logs, np.log([r[1] for r in rows]), 1)[0])
            summary["alpha_split"] = slope - 1.0
        cols = ["N", "T_split", "T_split_U", "T_branch", "T_branch_U"]
        return JobOutput([Table("sweep_time.csv", cols, rows, {"NU": cfg.model["NU"]})], summary)
    _, Js = scan_values(cfg, "J", 0.0, cfg.model["J_max"])
    rows = parallel_map(_f_row, [(cfg.to_dict(), J) for J in Js], threads)
    cols = ["J", "F13_split", "F12_branch", "F13_branch", "F_eff_branch"]
    p = model_params(cfg, Delta=0.0)
    summary = {"T_split": sweep_time_T(p.replace(J=cfg.model["J_max"]), SPLITTING),
               "T_branch": sweep_time_T(p.replace(J=cfg.model["J_max"], Delta=delta_max(cfg)), BRANCHING)}
    return JobOutput([Table("fscan.csv", cols, rows, {"N": p.N, "U": p.U, "Delta_branch": delta_max(cfg)})],
                     summary)


def _f_row(args):
    d, J = args
    cfg = build_config(d)
    p = model_params(cfg, J=J, Delta=0.0)
    b = p.replace(Delta=delta_max(cfg))
    return [J, f_susceptibility(p, 1, 3),
            _safe_f(b, 1, 2), _safe_f(b, 1, 3), f_effective(b, BRANCHING)]


def _safe_f(p, nu, mu):
    from .errors import DegeneracyError
    try:
        return f_susceptibility(p, nu, mu)
    except DegeneracyError:
        return float("nan")


def _sweep_time_row(args):
    d, N = args
    cfg = build_config(d)
    NU = cfg.model["NU"]
    U = NU / N
    p = ModelParams(N, U, cfg.model["J_max"], 0.0)
    Ts = sweep_time_T(p, SPLITTING)
    Tb = sweep_time_T(p.replace(Delta=U / 2.0), BRANCHING)
    return [N, Ts, Ts * U, Tb, Tb * U]


# --------------------------------------------------------------------------
# bias tolerance

def bias_scan_rate(N: int, base: float = 1e-3, N_ref: int = 10) -> float:
    """Default stage-(a) rate for bias scans, ``base * sqrt(N_ref / N)``."""
    return base * math.sqrt(N_ref / N)


def job_bias_scan(cfg: JobConfig, threads: int = 1) -> JobOutput:
    _, vals = scan_values(cfg, "Delta_over_U", 1e-3, 0.1, log=True)
    rows = parallel_map(_bias_row, [(cfg.to_dict(), v) for v in vals], threads)
    cols = ["Delta_over_U", "n_mean_over_N", "n_ex", "P0", "PN"]
    return JobOutput([Table("bias_scan.csv", cols, rows, {"N": cfg.model["N"], "dotJ": cfg.schedule["dotJ"]})])


def _bias_row(args):
    d, frac = args
    cfg = build_config(d)
    p = model_params(cfg, J=cfg.model["J_max"], Delta=frac * cfg.U)
    sched = ControlSchedule((linear_sweep("a", p.J, 0.0, cfg.schedule["dotJ"], Delta=p.Delta),))
    rec = evolve(ground_state(p), sched, p, policy_of(cfg))
    P = rec.final_state.probabilities
    return [frac, est.mean_n(P) / p.N, est.mean_n_ex(P), float(P[0]), float(P[-1])]


# --------------------------------------------------------------------------
# husimi and feasibility

def job_husimi(cfg: JobConfig, threads: int = 1) -> JobOutput:
    st = cfg.state
    N = cfg.model["N"]
    kind = st["kind"]
    if kind == "X":
        state = coherent_state(N, math.pi / 2, 0.0)
    elif kind == "Z":
        state = coherent_state(N, 0.0, 0.0)
    elif kind == "coherent":
        state = coherent_state(N, st["theta"], st["phi"])
    elif kind == "even_cat":
        state = cat_state(N, 0.0)
    elif kind == "odd_cat":
        state = cat_state(N, math.pi)
    else:
        state = ground_state(model_params(cfg))
    if st["rotate_y"]:
        state = rotate_y(state, st["rotate_y"])
    res = tuple(int(r) for r in st["resolution"])
    grid = husimi_grid(state, res)
    th, ph, q = grid.peak()
    return JobOutput([], {"normalization": grid.normalization(), "peak_theta": th, "peak_phi": ph,
                          "peak_value": q}, {"husimi.csv": grid.to_csv()})


def trap_spec(cfg: JobConfig) -> TrapSpec:
    t = dict(cfg.trap)
    for k in ("lambda_rate", "C_split", "C_branch"):
        t.pop(k)
    if t["m"] is None:
        t["m"] = K39_MASS
    if t["a"] is None:
        t.pop("a")
    return TrapSpec(**t)


def job_feasibility(cfg: JobConfig, threads: int = 1) -> JobOutput:
    t = cfg.trap
    rep = feasibility_report(trap_spec(cfg), t["lambda_rate"], t["C_split"], t["C_branch"])
    rows = [[k, v] for k, v in rep.items() if k != "spec"]
    return JobOutput([Table("feasibility.csv", ["quantity", "value"], rows)], {"report": rep})


JOBS = {
    "spectrum": job_spectrum,
    "wkb": job_wkb,
    "quench": job_quench,
    "protocol": job_protocol,
    "nex-scan": job_nex_scan,
    "fscan": job_fscan,
    "bias-scan": job_bias_scan,
    "husimi": job_husimi,
    "feasibility": job_feasibility,
}
