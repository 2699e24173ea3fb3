"""Figure scripts over the simulator's output contracts.

Pure readers: every number rendered is taken verbatim from the run
directory (CSV / JSON / binary); nothing is recomputed.
"""

__version__ = "0.1.0"

from .io import (SchemaError, read_apt_grid, read_spectra_csv, read_summary,
                 read_t22_csv)
from .figures import (FigureRequest, orientation_hue, render)

__all__ = ["SchemaError", "FigureRequest", "orientation_hue", "render",
           "read_apt_grid", "read_spectra_csv", "read_summary",
           "read_t22_csv"]
