"""Figures of record for the kinetic-gpc harness CSV outputs.

Three kinds: error versus chaos resolution overlaid per scale, defect
versus scale on log-log axes with the fitted slope, and the kinetic-
versus-diffusion distance.  Every fitted number in the sidecar is
recomputed from the CSV alone with the same arithmetic the harness uses,
so the two agree bit for bit; nothing is re-simulated.
"""

from .figures import FIGURE_KINDS, FigureSpec, MissingColumnError, render
from .fitting import fit_loglog_slope

__version__ = "0.1.0"
