"""Uniform spectral convergence of the Galerkin solution.

For each scale, a matched collocation ensemble serves as the reference and
the Galerkin error is split into its projection and coefficient parts.
The resolution needed for a fixed accuracy does not grow as the scale
vanishes.
"""

import numpy as np

from dataclasses import replace

from kinetic_gpc import (build_ensemble, build_operators, default_scenario,
                         gauss_rule, micromacro_dt, run_scenario, sg_error)
from kinetic_gpc.collision import fixed_z_operator

scn = default_scenario(t_end=0.5)
rule = gauss_rule("legendre", 40)
k_list = (2, 4, 6, 8, 10, 12)

for eps in (1.0, 1e-2, 1e-6):
    scn_ref = replace(scn, eps=eps, k_gpc=max(k_list))
    ops_ref = build_operators(scn_ref)
    dt = micromacro_dt(ops_ref, eps)
    for z_edge in (rule.nodes[0], rule.nodes[-1]):
        op = fixed_z_operator(scn.kernel, ops_ref.vgrid, float(z_edge))
        dt = min(dt, micromacro_dt(ops_ref, eps, op=op))
    ens = build_ensemble(scn_ref, ops_ref, rule, dt, scn.t_end)
    print(f"=== eps = {eps:g}  (shared dt = {ens.meta['dt']:.5f}) ===")
    print(f"  {'K':>3s} {'total':>12s} {'projection':>12s} {'coefficient':>12s}")
    prev = None
    for k in k_list:
        scn_k = replace(scn, eps=eps, k_gpc=k)
        ops_k = build_operators(scn_k, check_kernel=False)
        res = run_scenario(scn_k, ops=ops_k, dt=ens.meta["dt"], diag_every=0)
        err = sg_error(res.state, ens, ops_k.xgrid.dx, ops_k.vgrid,
                       run_meta=res.meta)
        note = f"  ratio {err.total / prev:.4f}" if prev and prev > 1e-10 else ""
        print(f"  {k:3d} {err.total:12.3e} {err.projection:12.3e} "
              f"{err.galerkin:12.3e}{note}")
        prev = err.total
    print()
