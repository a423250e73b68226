"""Leakage out of the lowest doublet when J is ramped to zero at a constant
rate, quantum versus truncated Wigner, with the estimated crossover borders.

    python3 demos/crossover_scan.py [--N 100] [--points 800]
"""
import argparse
import math

import numpy as np

from noon_dimer import ModelParams
from noon_dimer.core import coherent_state, critical_coupling
from noon_dimer.estimation import mean_n_ex
from noon_dimer.propagator import EvolutionPolicy, evolve
from noon_dimer.protocol import ControlSchedule, linear_sweep
from noon_dimer.semiclassical import crossover_theta, propagate_cloud, sample_cloud


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--points", type=int, default=800, help="cloud size")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    N = args.N
    p = ModelParams.reduced(N, 0.0)
    Jc = critical_coupling(N, p.U)
    cross = crossover_theta(1.0, p)
    print(f"estimated borders: adiabatic {cross.adiabatic_border:.4f}, diabatic {cross.diabatic_border:.4f}")
    print(f"{'dJ/dt':>9} {'quantum':>9} {'TWA':>9}   (<n_ex> / (N/2))")
    cloud = sample_cloud(math.pi / 2, 0.0, N, args.points, seed=args.seed)
    for rate in np.geomspace(0.01, 3.0, 10):
        sched = ControlSchedule((linear_sweep("a", Jc, 0.0, rate),))
        rec = evolve(coherent_state(N, math.pi / 2), sched, p,
                     EvolutionPolicy(dt=min(0.02, 5e-4 / rate), snapshot_stride=0))
        tr = propagate_cloud(cloud, sched, p, dt=0.02, record_every=0)
        q = mean_n_ex(rec.final_state.probabilities) / (N / 2)
        print(f"{rate:9.4f} {q:9.4f} {tr.n_ex_mean[-1] / (N / 2):9.4f}")


if __name__ == "__main__":
    main()
