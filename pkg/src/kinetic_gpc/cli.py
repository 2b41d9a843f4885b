"""Command-line harness: runs, sweeps, scaling studies, and self-tests.

Exit codes: 0 success, 1 self-test failure, 2 configuration or kernel
validation failure, 3 numerical failure (non-finite state or a violated
stability bound).  Physics invariants fail hard; empirical decay-rate
checks print warnings here and are asserted in the test suite.

All numeric CSV cells are written with shortest round-trip formatting, so
identical configs reproduce byte-identical files in serial mode (runtime
columns excepted, since wall time is not a function of the input).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics, solver
from .collision import validate_kernel
from .config import ConfigError, load_config, scenario_from_config
from .diffusion import drift_diffusion_solve
from .gpc_basis import build_basis, gauss_rule, gram_matrix
from .selftest import run_selftest
from .solver import NumericalError, build_operators, run_scenario

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

DEFAULT_SWEEP_K = (2, 4, 6, 8, 10, 12)
DEFAULT_SWEEP_EPS = (1.0, 1e-1, 1e-2, 1e-4, 1e-6)
DEFAULT_SCALING_EPS = (0.5, 0.25, 0.125)
DEFAULT_LIMIT_EPS = (1e-1, 1e-2, 1e-4, 1e-6)
DEFAULT_REGULARITY_EPS = (1.0, 1e-2, 1e-6)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _map_fn(serial: bool):
    if serial:
        return map
    env = os.environ.get("KINETIC_GPC_THREADS")
    workers = max(1, int(env)) if env else min(8, os.cpu_count() or 1)
    if workers == 1:
        return map

    def mapper(fn, items):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return mapper


def _scenario_id(scn) -> str:
    return (f"{scn.kernel.family}-nx{scn.nx}-nv{scn.nv}-k{scn.k_gpc}"
            f"-{scn.z_family}")


def _load_scenario(args):
    cfg = load_config(args.config)
    scn = scenario_from_config(cfg)
    return cfg, scn


def cmd_run(args) -> int:
    cfg, scn = _load_scenario(args)
    out = Path(args.out)
    ops = build_operators(scn)   # validates the kernel
    res = run_scenario(scn, ops=ops)
    header = list(solver.DIAG_COLUMNS)
    rows = [[row[c] for c in header] for row in res.diagnostics]
    _write_csv(out / "run_diagnostics.csv", header, rows)
    state = res.state
    dump = {
        "schema_version": 1,
        "t": state.t,
        "epsilon": scn.eps,
        "scheme": res.meta["scheme"],
        "dt": res.dt,
        "n_steps": res.n_steps,
        "shape": {"nx": scn.nx, "nv": scn.nv, "k_gpc": res.meta["k"]},
        "rho_hat": np.asarray(state.rho).tolist(),
        "g_hat": np.asarray(state.g).tolist(),
    } if hasattr(state, "rho") else {
        "schema_version": 1,
        "t": state.t,
        "epsilon": scn.eps,
        "scheme": res.meta["scheme"],
        "dt": res.dt,
        "n_steps": res.n_steps,
        "shape": {"nx": scn.nx, "nv": scn.nv, "k_gpc": 1},
        "h": np.asarray(state.h).tolist(),
        "z_value": state.z,
    }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "final_state.json", "w") as fh:
        json.dump(dump, fh, indent=1)
    masses = np.array([row["mass_mode0"] for row in res.diagnostics])
    drift = float(np.max(np.abs(masses - masses[0]))) / max(1e-300, abs(masses[0]))
    if drift > 1e-10:
        print(f"error: mass drift {drift:.3e} exceeds 1e-10", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, scn = _load_scenario(args)
    sweep_cfg = cfg.get("sweep", {})
    k_list = [int(k) for k in sweep_cfg.get("k_list", DEFAULT_SWEEP_K)]
    eps_list = [float(e) for e in sweep_cfg.get("eps_list", DEFAULT_SWEEP_EPS)]
    q_ref = int(sweep_cfg.get("q_ref", 40))
    t_end = float(sweep_cfg.get("t_end", scn.t_end))
    if any(e <= 0 for e in eps_list):
        print("error: sweep eps values must be positive", file=sys.stderr)
        return EXIT_VALIDATION
    if q_ref < 2 * max(k_list) + 4:
        print(f"error: reference rule q_ref={q_ref} below 2*max(K)+4 "
              f"= {2 * max(k_list) + 4}", file=sys.stderr)
        return EXIT_VALIDATION
    mapper = _map_fn(args.serial)
    rule = gauss_rule(scn.z_family, q_ref)
    rows = []
    warnings = []
    from dataclasses import replace
    for eps in eps_list:
        scn_eps = replace(scn, eps=eps, k_gpc=max(k_list))
        ops_ref = build_operators(scn_eps)
        dt = solver.micromacro_dt(ops_ref, eps)
        for z_edge in (rule.nodes[0], rule.nodes[-1]):
            from .collision import fixed_z_operator
            op_c = fixed_z_operator(scn.kernel, ops_ref.vgrid, float(z_edge))
            dt = min(dt, solver.micromacro_dt(ops_ref, eps, op=op_c))
        ens = solver.build_ensemble(scn_eps, ops_ref, rule, dt, t_end, map_fn=mapper)

        def one_k(k):
            scn_k = replace(scn, eps=eps, k_gpc=k)
            ops_k = build_operators(scn_k, check_kernel=False)
            res = run_scenario(scn_k, ops=ops_k, dt=ens.meta["dt"], t_end=t_end,
                               diag_every=0)
            err = metrics.sg_error(res.state, ens, ops_k.xgrid.dx, ops_k.vgrid,
                                   run_meta=res.meta)
            defect = res.diagnostics[-1]["defect_norm"]
            return (k, err, defect, res.runtime_ms)

        for k, err, defect, ms in mapper(one_k, k_list):
            rows.append([_scenario_id(scn), eps, k, scn.nx, scn.nv, t_end,
                         err.total, err.projection, err.galerkin, defect, ms])
        errs = {r[2]: r[6] for r in rows if r[1] == eps}
        pairs = list(zip(k_list[:-1], k_list[1:]))
        for ka, kb in pairs:
            if errs[ka] > 1e-10 and errs[kb] / errs[ka] > 0.5:
                warnings.append(f"eps={eps:g}: err({kb})/err({ka}) "
                                f"= {errs[kb] / errs[ka]:.3f} > 0.5")
    out = Path(args.out)
    _write_csv(out / "sweep.csv",
               ["scenario_id", "eps", "K", "nx", "nv", "t_end", "err_total",
                "err_RK", "err_eK", "defect", "runtime_ms"], rows)
    k_star = {}
    for eps in eps_list:
        hits = [r[2] for r in rows if r[1] == eps and r[6] <= 1e-6]
        k_star[eps] = min(hits) if hits else None
    reached = [k for k in k_star.values() if k is not None]
    if reached and max(reached) - min(reached) > 2:
        warnings.append(f"K needed for 1e-6 varies by more than 2: {k_star}")
    for msg in warnings:
        print("warning:", msg, file=sys.stderr)
    return EXIT_OK


def cmd_scaling(args) -> int:
    cfg, scn = _load_scenario(args)
    sec = cfg.get("scaling", {})
    eps_list = [float(e) for e in sec.get("eps_list", DEFAULT_SCALING_EPS)]
    t_end = float(sec.get("t_end", scn.t_end))
    from dataclasses import replace
    defects = []
    for eps in eps_list:
        scn_eps = replace(scn, eps=eps)
        ops = build_operators(scn_eps)
        res = run_scenario(scn_eps, ops=ops, t_end=t_end, diag_every=0)
        defects.append(res.diagnostics[-1]["defect_norm"])
    slope = metrics.fit_loglog_slope(eps_list, defects)
    rows = [[_scenario_id(scn), eps, t_end, d, slope]
            for eps, d in zip(eps_list, defects)]
    _write_csv(Path(args.out) / "scaling.csv",
               ["scenario_id", "eps", "t_end", "defect", "fitted_slope"], rows)
    if not 0.8 <= slope <= 1.2:
        print(f"warning: defect scaling slope {slope:.3f} outside [0.8, 1.2]",
              file=sys.stderr)
    return EXIT_OK


def cmd_limit(args) -> int:
    cfg, scn = _load_scenario(args)
    sec = cfg.get("limit", {})
    eps_list = [float(e) for e in sec.get("eps_list", DEFAULT_LIMIT_EPS)]
    t_end = float(sec.get("t_end", scn.t_end))
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])) and len(eps_list) > 1:
        print("error: limit eps list must be strictly descending", file=sys.stderr)
        return EXIT_VALIDATION
    from dataclasses import replace
    from .diffusion import assemble_frequency_D
    ops0 = build_operators(scn)
    d_freq = assemble_frequency_D(scn.kernel, ops0.vgrid, ops0.basis)
    d_exact = ops0.d_exact
    gap = float(np.linalg.norm(d_exact - d_freq) / np.linalg.norm(d_exact))
    print("diffusion matrix, closed-form frequency variant:")
    print(np.array2string(d_freq, precision=8))
    print("diffusion matrix, inverse-collision variant:")
    print(np.array2string(d_exact, precision=8))
    print(f"relative Frobenius gap: {gap:.6e}")
    rho0 = solver.initial_state(scn, ops0).rho
    rho_limit = drift_diffusion_solve(d_exact, ops0.xgrid.dx, rho0, t_end,
                                      cfl=scn.cfl)
    rows = []
    dists = []
    for eps in eps_list:
        scn_eps = replace(scn, eps=eps)
        res = run_scenario(scn_eps, ops=build_operators(scn_eps, check_kernel=False),
                           t_end=t_end, diag_every=0)
        dist = float(np.linalg.norm(res.state.rho - rho_limit)
                     / np.linalg.norm(rho_limit))
        dists.append(dist)
        rows.append([_scenario_id(scn), eps, t_end, scn.nx, scn.k_gpc, dist])
    _write_csv(Path(args.out) / "limit.csv",
               ["scenario_id", "eps", "t_end", "nx", "K", "distance"], rows)
    if any(b > a * (1 + 1e-9) for a, b in zip(dists, dists[1:])):
        print("warning: kinetic-vs-diffusion distance is not non-increasing",
              file=sys.stderr)
    return EXIT_OK


def cmd_regularity(args) -> int:
    cfg, scn = _load_scenario(args)
    sec = cfg.get("regularity", {})
    eps_list = [float(e) for e in sec.get("eps_list", DEFAULT_REGULARITY_EPS)]
    k_max = int(sec.get("k_max", 2))
    t_end = float(sec.get("t_end", 1.0))
    if k_max > min(4, scn.k_gpc - 1):
        print(f"error: k_max {k_max} exceeds min(4, K-1)", file=sys.stderr)
        return EXIT_VALIDATION
    from dataclasses import replace
    rows = []
    sup = {}
    for eps in eps_list:
        scn_eps = replace(scn, eps=eps)
        ops = build_operators(scn_eps)
        res = run_scenario(scn_eps, ops=ops, t_end=t_end, track_transport=True)
        for k in range(k_max + 1):
            key = "gamma_norm" if k == 0 else f"dk{k}_norm"
            sup_f = max(row[key] for row in res.diagnostics)
            sup_t = max(row[f"vdx_dk{k}_norm"] for row in res.diagnostics)
            sup[(eps, k)] = (sup_f, sup_t)
            rows.append([_scenario_id(scn), eps, t_end, k, sup_f, sup_t])
    _write_csv(Path(args.out) / "regularity.csv",
               ["scenario_id", "eps", "t_end", "k", "sup_dk_norm",
                "sup_vdx_dk_norm"], rows)
    base = eps_list[0]
    for eps in eps_list[1:]:
        for k in range(k_max + 1):
            for idx, what in ((0, "solution"), (1, "transport")):
                ratio = sup[(eps, k)][idx] / max(1e-300, sup[(base, k)][idx])
                if ratio > 2.0:
                    print(f"warning: {what} derivative-{k} norm at eps={eps:g} "
                          f"is {ratio:.2f}x the eps={base:g} value",
                          file=sys.stderr)
    return EXIT_OK


def cmd_basis(args) -> int:
    basis = build_basis(args.family, args.k, args.quad)
    writer = csv.writer(sys.stdout)
    writer.writerow(["section", "i", "j", "value"])
    gram = gram_matrix(basis)
    for i in range(basis.k):
        for j in range(basis.k):
            writer.writerow(["gram", i, j, _fmt(gram[i, j])])
    for i, (node, weight) in enumerate(zip(basis.quad.nodes, basis.quad.weights)):
        writer.writerow(["node", i, "", _fmt(node)])
        writer.writerow(["weight", i, "", _fmt(weight)])
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest(stream=sys.stdout)
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}",
              file=sys.stderr)
        return EXIT_SELFTEST
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinetic-gpc",
        description="chaos-Galerkin kinetic solver and verification harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("sweep", cmd_sweep),
                     ("scaling", cmd_scaling), ("limit", cmd_limit),
                     ("regularity", cmd_regularity)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--serial", action="store_true")
        p.set_defaults(fn=fn)
    p = sub.add_parser("basis")
    p.add_argument("--family", choices=("legendre", "hermite"), default="legendre")
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--quad", type=int, default=None)
    p.set_defaults(fn=cmd_basis)
    p = sub.add_parser("selftest")
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, solver.CFLError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
