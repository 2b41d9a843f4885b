"""Render harness CSV files into figures with fitted-number sidecars."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fitting import fit_loglog_slope, pairwise_ratios

FIGURE_KINDS = ("convergence_vs_k", "defect_scaling", "ap_distance")

_REQUIRED_COLUMNS = {
    "convergence_vs_k": ("eps", "K", "err_total", "err_RK", "err_eK"),
    "defect_scaling": ("eps", "defect", "fitted_slope"),
    "ap_distance": ("eps", "distance"),
}


class MissingColumnError(ValueError):
    def __init__(self, column: str, path: str):
        self.column = column
        super().__init__(f"column {column!r} missing from {path}")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: str
    image_path: str
    title: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"choose from {FIGURE_KINDS}")


def _read_rows(spec: FigureSpec) -> list[dict]:
    with open(spec.csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in _REQUIRED_COLUMNS[spec.kind]:
            if column not in header:
                raise MissingColumnError(column, spec.csv_path)
        return list(reader)


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=120)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _render_convergence(spec: FigureSpec, rows: list[dict]):
    eps_values = sorted({float(r["eps"]) for r in rows}, reverse=True)
    fig, ax = _new_axes()
    sidecar = {"kind": spec.kind, "per_eps": {}}
    for eps in eps_values:
        sub = sorted((r for r in rows if float(r["eps"]) == eps),
                     key=lambda r: int(r["K"]))
        ks = [int(r["K"]) for r in sub]
        errs = [float(r["err_total"]) for r in sub]
        if len(ks) < 2:
            raise ValueError("need at least two resolutions per scale to plot "
                             "a convergence curve")
        ax.semilogy(ks, errs, marker="o", label=f"eps = {eps:g}")
        ratios = {f"{ka}->{kb}": eb / ea
                  for (ka, ea), (kb, eb) in zip(zip(ks, errs), zip(ks[1:], errs[1:]))
                  if ea > 1e-10}
        reached = [k for k, e in zip(ks, errs) if e <= 1e-6]
        sidecar["per_eps"][f"{eps:g}"] = {
            "k": ks,
            "err_total": errs,
            "decay_ratios": ratios,
            "k_for_1e-6": min(reached) if reached else None,
        }
    k_star = [v["k_for_1e-6"] for v in sidecar["per_eps"].values()
              if v["k_for_1e-6"] is not None]
    sidecar["k_for_1e-6_spread"] = (max(k_star) - min(k_star)) if k_star else None
    ax.set_xlabel("chaos resolution K")
    ax.set_ylabel("error vs matched reference")
    ax.set_title(spec.title or "spectral convergence per scale")
    ax.legend()
    return fig, sidecar


def _render_defect(spec: FigureSpec, rows: list[dict]):
    sub = sorted(rows, key=lambda r: -float(r["eps"]))
    eps = [float(r["eps"]) for r in sub]
    defect = [float(r["defect"]) for r in sub]
    if len(set(eps)) < 2:
        raise ValueError("need at least two distinct scales to fit a slope")
    slope = fit_loglog_slope(eps, defect)
    harness_slopes = {float(r["fitted_slope"]) for r in sub}
    fig, ax = _new_axes()
    ax.loglog(eps, defect, marker="o", label="measured defect")
    anchor = defect[0] / eps[0]**slope
    ax.loglog(eps, [anchor * e**slope for e in eps], "--",
              label=f"slope {slope:.3f}")
    ax.set_xlabel("scale parameter")
    ax.set_ylabel("local-equilibrium defect")
    ax.set_title(spec.title or "defect scaling")
    ax.legend()
    sidecar = {
        "kind": spec.kind,
        "eps": eps,
        "defect": defect,
        "fitted_slope": slope,
        "harness_fitted_slope": sorted(harness_slopes)[0],
        "halving_ratios": pairwise_ratios(defect),
    }
    return fig, sidecar


def _render_distance(spec: FigureSpec, rows: list[dict]):
    sub = sorted(rows, key=lambda r: -float(r["eps"]))
    eps = [float(r["eps"]) for r in sub]
    dist = [float(r["distance"]) for r in sub]
    if len(set(eps)) < 2:
        raise ValueError("need at least two distinct scales to plot a trend")
    fig, ax = _new_axes()
    ax.loglog(eps, dist, marker="s", color="tab:red")
    ax.set_xlabel("scale parameter")
    ax.set_ylabel("relative distance to the diffusion solve")
    ax.set_title(spec.title or "approach to the diffusion limit")
    sidecar = {
        "kind": spec.kind,
        "eps": eps,
        "distance": dist,
        "ratios": pairwise_ratios(dist),
        "non_increasing": all(b <= a * (1 + 1e-9)
                              for a, b in zip(dist, dist[1:])),
        "smallest_scale_distance": dist[-1],
    }
    return fig, sidecar


_RENDERERS = {
    "convergence_vs_k": _render_convergence,
    "defect_scaling": _render_defect,
    "ap_distance": _render_distance,
}


def render(spec: FigureSpec) -> dict:
    """Write the figure and its ``<image>.fit.json`` sidecar; returns the
    sidecar dict.  Deterministic: re-rendering reproduces both files."""
    rows = _read_rows(spec)
    if not rows:
        raise ValueError(f"{spec.csv_path} has no data rows")
    fig, sidecar = _RENDERERS[spec.kind](spec, rows)
    out = Path(spec.image_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Software": "kinetic-gpc-plot"})
    plt.close(fig)
    sidecar["source_csv"] = str(spec.csv_path)
    with open(str(out) + ".fit.json", "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
    return sidecar
