"""Post-hoc figures for becpde experiment directories.

Reads only the files documented in each run directory's schema.md
(snapshots.csv, diagnostics.csv, index.csv, summary.json); never imports the
simulator itself.
"""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, SchemaError, render

__all__ = ["FIGURE_KINDS", "SchemaError", "render"]
