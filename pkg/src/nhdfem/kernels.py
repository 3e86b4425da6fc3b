"""Kernel backend selection.

The compiled extension is used when importable; set ``NHDFEM_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active choice.
"""
import os

from . import _kernels_py

try:
    if os.environ.get("NHDFEM_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

weighted_gram = _impl.weighted_gram
weighted_load = _impl.weighted_load
coo_to_csr = _impl.coo_to_csr
csr_matvec = _impl.csr_matvec
ilu0_factor = _impl.ilu0_factor
ilu0_solve = _impl.ilu0_solve


def thread_count():
    """Threads for cell loops, from ``NHDFEM_NUM_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("NHDFEM_NUM_THREADS", "1")))
    except ValueError:
        return 1
