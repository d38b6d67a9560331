"""Pure-numpy reference implementations of the hot kernels.

Every function here has a numba twin in :mod:`mindvlog.kernels.numba_impl`
with identical semantics; :mod:`mindvlog.kernels` picks the backend at
import time.  Keep the two files in lockstep; the kernel agreement tests
compare them elementwise.

All kernels take and return float64 unless stated otherwise.
"""

import numpy as np


def windowed_frames(x, window, hop, n_frames):
    """Slice ``x`` into ``n_frames`` frames of ``len(window)`` samples at
    stride ``hop``, multiplied by ``window``.  The tail is zero-padded."""
    n_fft = window.shape[0]
    padded = np.zeros((n_frames - 1) * hop + n_fft, dtype=np.float64)
    padded[: x.shape[0]] = x
    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    return padded[idx] * window[None, :]


def autocorr_lags(frame, min_lag, max_lag):
    """Autocorrelation of ``frame`` for every lag in [min_lag, max_lag]."""
    n_lags = max_lag - min_lag + 1
    out = np.empty(n_lags, dtype=np.float64)
    n = frame.shape[0]
    for i in range(n_lags):
        lag = min_lag + i
        out[i] = np.dot(frame[: n - lag], frame[lag:])
    return out


def lcs_length(a, b):
    """Length of the longest common subsequence of two int arrays."""
    n, m = a.shape[0], b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        for j in range(m):
            if a[i] == b[j]:
                cur[j + 1] = prev[j] + 1
            else:
                cur[j + 1] = max(prev[j + 1], cur[j])
        prev, cur = cur, prev
    return int(prev[m])


def cosine_scores(queries, entries):
    """Cosine similarity of every query row against every entry row.

    Rows with zero norm score 0 against everything.
    """
    qn = np.linalg.norm(queries, axis=1)
    en = np.linalg.norm(entries, axis=1)
    qn = np.where(qn == 0.0, 1.0, qn)
    en = np.where(en == 0.0, 1.0, en)
    return (queries / qn[:, None]) @ (entries / en[:, None]).T


def masked_mse(pred, target, positions):
    """Mean squared error over the rows listed in ``positions`` only."""
    diff = pred[positions] - target[positions]
    return float(np.mean(diff * diff))


def softmax_rows(x):
    """Numerically stable softmax along the last axis of a 2-D array."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
