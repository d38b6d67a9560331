"""Hot numeric kernels with two interchangeable backends.

The numba backend is the default.  Set ``MINDVLOG_NUMBA=0`` before import
to force the pure-numpy path (useful for debugging, or on hosts where the
JIT is unwelcome); the numpy path is also the automatic fallback when
numba cannot be imported.  ``benchmarks/bench_kernels.py`` times one
against the other.
"""

import os

_flag = os.environ.get("MINDVLOG_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        from . import numba_impl as _impl
        _backend = "numba"
    except ImportError:
        from . import numpy_impl as _impl
        _backend = "numpy"
else:
    from . import numpy_impl as _impl
    _backend = "numpy"

windowed_frames = _impl.windowed_frames
autocorr_lags = _impl.autocorr_lags
lcs_length = _impl.lcs_length
cosine_scores = _impl.cosine_scores
masked_mse = _impl.masked_mse
softmax_rows = _impl.softmax_rows


def backend():
    """Name of the active kernel backend: 'numba' or 'numpy'."""
    return _backend
