"""Differentiable layer primitives with explicit backward passes.

Every forward returns (output, cache); the matching backward consumes
(cache, upstream gradient) and returns the input gradient plus the
parameter gradients.  All math is float64, sequences are [L, D] with no
batch axis (batching is an outer loop with gradient accumulation).

GELU uses the tanh approximation: a smooth function keeps central
differences honest during gradient checking.
"""

from __future__ import annotations

import numpy as np

_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_A = 0.044715
LN_EPS = 1e-5


def linear_forward(x, w, b):
    return x @ w + b, (x, w)


def linear_backward(cache, dy):
    x, w = cache
    dx = dy @ w.T
    dw = x.T @ dy
    db = dy.sum(axis=0)
    return dx, dw, db


def layernorm_forward(x, gamma, beta):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return gamma * xhat + beta, (xhat, inv, gamma)


def layernorm_backward(cache, dy):
    xhat, inv, gamma = cache
    d = xhat.shape[-1]
    dxhat = dy * gamma
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    # collapsed form of the mean/variance chain rule
    dx = inv / d * (
        d * dxhat
        - dxhat.sum(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


def gelu_forward(x):
    u = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_backward(cache, dy):
    x, t = cache
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def softmax_last(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_last_backward(y, dy):
    return (dy - (dy * y).sum(axis=-1, keepdims=True)) * y


def attention_forward(x, p, heads):
    """Multi-head self-attention over one [L, D] sequence.

    ``p`` maps {"wq","bq","wk","bk","wv","bv","wo","bo"} to arrays.
    """
    L, d = x.shape
    dh = d // heads
    q, cq = linear_forward(x, p["wq"], p["bq"])
    k, ck = linear_forward(x, p["wk"], p["bk"])
    v, cv = linear_forward(x, p["wv"], p["bv"])
    qh = q.reshape(L, heads, dh).transpose(1, 0, 2)
    kh = k.reshape(L, heads, dh).transpose(1, 0, 2)
    vh = v.reshape(L, heads, dh).transpose(1, 0, 2)
    scale = 1.0 / np.sqrt(dh)
    scores = qh @ kh.transpose(0, 2, 1) * scale
    att = softmax_last(scores)
    ctx = att @ vh
    merged = ctx.transpose(1, 0, 2).reshape(L, d)
    out, co = linear_forward(merged, p["wo"], p["bo"])
    return out, (cq, ck, cv, co, qh, kh, vh, att, scale, heads)


def attention_backward(cache, dy):
    cq, ck, cv, co, qh, kh, vh, att, scale, heads = cache
    L, d = dy.shape
    dh = d // heads
    dmerged, dwo, dbo = linear_backward(co, dy)
    dctx = dmerged.reshape(L, heads, dh).transpose(1, 0, 2)
    datt = dctx @ vh.transpose(0, 2, 1)
    dvh = att.transpose(0, 2, 1) @ dctx
    dscores = softmax_last_backward(att, datt)
    dqh = dscores @ kh * scale
    dkh = dscores.transpose(0, 2, 1) @ qh * scale
    dq = dqh.transpose(1, 0, 2).reshape(L, d)
    dk = dkh.transpose(1, 0, 2).reshape(L, d)
    dv = dvh.transpose(1, 0, 2).reshape(L, d)
    dx_q, dwq, dbq = linear_backward(cq, dq)
    dx_k, dwk, dbk = linear_backward(ck, dk)
    dx_v, dwv, dbv = linear_backward(cv, dv)
    grads = {
        "wq": dwq, "bq": dbq, "wk": dwk, "bk": dbk,
        "wv": dwv, "bv": dbv, "wo": dwo, "bo": dbo,
    }
    return dx_q + dx_k + dx_v, grads


def dropout_forward(x, rate, rng, training):
    if not training or rate <= 0.0:
        return x, None
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(np.float64) / keep
    return x * mask, mask


def dropout_backward(cache, dy):
    return dy if cache is None else dy * cache


def sinusoid_positions(length, dim):
    """Fixed sinusoidal position table [length, dim]."""
    if length == 0:
        return np.zeros((0, dim))
    pos = np.arange(length)[:, None].astype(np.float64)
    i = np.arange((dim + 1) // 2)[None, :].astype(np.float64)
    angle = pos / np.power(10000.0, 2.0 * i / dim)
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle[:, : dim // 2])
    return table
