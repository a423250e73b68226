"""Print the laboratory-unit numbers for a 39K condensate in a single
optical tweezer, and how they move with the peak density.  At fixed
depth the trap frequencies stay put while N and U both grow with density.
"""
from dataclasses import replace

from noon_dimer.feasibility import TrapSpec, feasibility_report

base = TrapSpec()
r = feasibility_report(base)
for key in ("Omega_r_hz", "Omega_z_hz", "N", "U_hz", "NU_hz", "N_c", "shot_noise",
            "required_stability", "sweep_time_split_s", "sweep_time_branch_s"):
    print(f"{key:>22}: {r[key]:.4g}")

print("\ndensity scan:")
print(f"{'rho m^-3':>9} {'N':>6} {'U/2pi Hz':>10} {'NU/2pi Hz':>10} {'sweep ms':>9} {'collapse?':>10}")
for rho in (3e19, 1e20, 3e20, 1e21, 3e21):
    rr = feasibility_report(replace(base, rho=rho))
    print(f"{rho:9.1e} {rr['N']:6d} {rr['U_hz']:10.2f} {rr['NU_hz']:10.1f} "
          f"{1e3 * rr['sweep_time_split_s']:9.3f} {str(rr['collapse_risk']):>10}")
