"""Numba-jitted twins of the kernels in :mod:`mindvlog.kernels.numpy_impl`.

Loops are written out explicitly; no fastmath, so results stay within
float rounding noise of the numpy path.  First call pays JIT compilation
(cached on disk afterwards).
"""

import numpy as np
from numba import njit

_jit = njit(cache=True, nogil=True)


@_jit
def windowed_frames(x, window, hop, n_frames):
    n_fft = window.shape[0]
    out = np.zeros((n_frames, n_fft), dtype=np.float64)
    n = x.shape[0]
    for f in range(n_frames):
        start = f * hop
        stop = min(start + n_fft, n)
        for t in range(start, stop):
            out[f, t - start] = x[t] * window[t - start]
    return out


@_jit
def autocorr_lags(frame, min_lag, max_lag):
    n_lags = max_lag - min_lag + 1
    out = np.empty(n_lags, dtype=np.float64)
    n = frame.shape[0]
    for i in range(n_lags):
        lag = min_lag + i
        acc = 0.0
        for t in range(n - lag):
            acc += frame[t] * frame[t + lag]
        out[i] = acc
    return out


@_jit
def lcs_length(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        for j in range(m):
            if a[i] == b[j]:
                cur[j + 1] = prev[j] + 1
            else:
                cur[j + 1] = max(prev[j + 1], cur[j])
        for j in range(m + 1):
            prev[j] = cur[j]
    return int(prev[m])


@_jit
def cosine_scores(queries, entries):
    nq, d = queries.shape
    ne = entries.shape[0]
    out = np.empty((nq, ne), dtype=np.float64)
    qn = np.empty(nq, dtype=np.float64)
    en = np.empty(ne, dtype=np.float64)
    for i in range(nq):
        s = 0.0
        for k in range(d):
            s += queries[i, k] * queries[i, k]
        qn[i] = np.sqrt(s) if s > 0.0 else 1.0
    for j in range(ne):
        s = 0.0
        for k in range(d):
            s += entries[j, k] * entries[j, k]
        en[j] = np.sqrt(s) if s > 0.0 else 1.0
    for i in range(nq):
        for j in range(ne):
            s = 0.0
            for k in range(d):
                s += queries[i, k] * entries[j, k]
            out[i, j] = s / (qn[i] * en[j])
    return out


@_jit
def masked_mse(pred, target, positions):
    n_pos = positions.shape[0]
    d = pred.shape[1]
    acc = 0.0
    for i in range(n_pos):
        p = positions[i]
        for k in range(d):
            diff = pred[p, k] - target[p, k]
            acc += diff * diff
    return acc / (n_pos * d)


@_jit
def softmax_rows(x):
    n, m = x.shape
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        mx = x[i, 0]
        for j in range(1, m):
            if x[i, j] > mx:
                mx = x[i, j]
        s = 0.0
        for j in range(m):
            e = np.exp(x[i, j] - mx)
            out[i, j] = e
            s += e
        for j in range(m):
            out[i, j] /= s
    return out
