"""Hot loops, compiled when available.

The Cython extension is used if it was built and importable; otherwise the
pure-Python reference in :mod:`.gibbs_py` is used.  Setting the environment
variable ``METRIC_BAYES_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import gibbs_py

if os.environ.get("METRIC_BAYES_PURE_PYTHON", "") not in ("", "0"):
    gibbs_sweeps = gibbs_py.gibbs_sweeps
    BACKEND = "python"
else:
    try:
        from ._gibbs import gibbs_sweeps
        BACKEND = "cython"
    except ImportError:
        gibbs_sweeps = gibbs_py.gibbs_sweeps
        BACKEND = "python"

__all__ = ["gibbs_sweeps", "BACKEND", "gibbs_py"]
