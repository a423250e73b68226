"""Compare exact level spacings with the semiclassical (area-quantization)
frequency across the separatrix of the dimer.

    python3 demos/wkb_spacing.py [--N 500] [--J 0.4]
"""
import argparse

import numpy as np

from noon_dimer import ModelParams
from noon_dimer.spectrum import spectrum
from noon_dimer.wkb import WkbContext, omega_E, omega_from_area, omega_J, omega_x


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=500)
    ap.add_argument("--J", type=float, default=0.4)
    ap.add_argument("--every", type=int, default=8, help="print every k-th spacing")
    args = ap.parse_args()

    p = ModelParams.reduced(args.N, args.J)
    ctx = WkbContext(p)
    E = spectrum(p).energies - ctx.E_x
    print(f"omega_J = {omega_J(p):.5f}, omega_x = {omega_x(p):.5f}")
    print(f"{'E - E_x':>12} {'exact':>10} {'quadrature':>11} {'log form':>10}")

    below = E[E < 0]
    below = below[: 2 * (below.size // 2)]
    centers = 0.5 * (below[0::2] + below[1::2])   # tunnelling doublets
    above = E[E > 0]
    rows = [(0.5 * (a + b), b - a) for a, b in zip(centers, centers[1:])]
    rows += [(0.5 * (a + b), b - a) for a, b in zip(above, above[1:])]
    for Em, gap in rows[:: args.every]:
        try:
            log_form = f"{omega_E(Em, p):10.5f}"
        except Exception:
            log_form = f"{'-':>10}"
        print(f"{Em:12.5f} {gap:10.5f} {omega_from_area(Em, ctx):11.5f} {log_form}")


if __name__ == "__main__":
    main()
