"""Relaxation toward local equilibrium and the size of the defect.

A non-equilibrium seed decays to a quasi-steady fluctuation whose norm is
proportional to the scale parameter: halving the scale halves the defect.
"""

import numpy as np

from dataclasses import replace

from kinetic_gpc import default_scenario, fit_loglog_slope, run_scenario

scn = default_scenario()
scn = replace(scn, init=replace(scn.init, delta=0.5))

print("=== defect trajectory at eps = 0.25 ===")
res = run_scenario(replace(scn, eps=0.25), t_end=0.5, diag_every=10)
for row in res.diagnostics:
    print(f"  t = {row['t']:.3f}   defect = {row['defect_norm']:.6f}   "
          f"energy = {row['gamma_norm']:.6f}")

print("\n=== defect at t = 0.5 versus scale ===")
eps_list = (0.5, 0.25, 0.125)
defects = []
for eps in eps_list:
    res = run_scenario(replace(scn, eps=eps), t_end=0.5, diag_every=0)
    defects.append(res.diagnostics[-1]["defect_norm"])
    print(f"  eps = {eps:<6g} defect = {defects[-1]:.6f}")
slope = fit_loglog_slope(eps_list, defects)
print(f"fitted log-log slope: {slope:.3f}  (linear-in-scale defect)")
print(f"halving ratios: "
      + ", ".join(f"{a / b:.3f}" for a, b in zip(defects[:-1], defects[1:])))
