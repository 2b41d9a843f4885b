"""Least-squares fits shared, operation for operation, with the harness.

The solver harness writes its fitted slope into the scaling CSV; the
sidecar recomputes it from the raw (scale, defect) columns.  The two must
agree to the last bit, so this formula mirrors the harness's centered
form exactly.
"""

from __future__ import annotations

import numpy as np


def fit_loglog_slope(x, y) -> float:
    """Slope of log10(y) against log10(x), centered least squares."""
    lx = np.log10(np.asarray(x, dtype=float))
    ly = np.log10(np.asarray(y, dtype=float))
    dxc = lx - lx.mean()
    dyc = ly - ly.mean()
    return float(np.sum(dxc * dyc) / np.sum(dxc * dxc))


def pairwise_ratios(values) -> list[float]:
    vals = np.asarray(values, dtype=float)
    return [float(a / b) for a, b in zip(vals[:-1], vals[1:])]
