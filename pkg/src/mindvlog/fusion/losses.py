"""Training losses as pure functions.

These are the reference implementations of the three objectives; the
model's cached training paths reproduce the same math with gradients.
"""

from __future__ import annotations

import numpy as np

from ..errors import BatchMismatch, EmptyMask, InvalidConfig
from ..kernels import masked_mse

BCE_EPS = 1e-12


def bce_loss(y, yhat, eps=BCE_EPS):
    """Binary cross-entropy with the prediction clamped to [eps, 1-eps].

    Accepts scalars or arrays (mean-reduced).
    """
    y = np.asarray(y, dtype=np.float64)
    p = np.clip(np.asarray(yhat, dtype=np.float64), eps, 1.0 - eps)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def masked_reconstruction_loss(decoder_out, targets, mask):
    """MSE over the masked rows only; unmasked rows never contribute."""
    pred = np.asarray(decoder_out, dtype=np.float64)
    tgt = np.asarray(targets, dtype=np.float64)
    if pred.shape != tgt.shape:
        raise BatchMismatch(f"decoder output {pred.shape} vs targets {tgt.shape}")
    positions = np.asarray(mask.positions, dtype=np.int64)
    if positions.size == 0:
        raise EmptyMask("mask record has no positions")
    return masked_mse(pred, tgt, positions)


def contrastive_loss(audio_reprs, video_reprs, temperature=1.0):
    """Symmetric cross-entropy over cosine-similarity logits.

    Matched pairs share an index; every other in-batch pair is a
    negative.  A batch of one has no negatives and scores exactly 0.
    """
    if temperature <= 0:
        raise InvalidConfig(f"temperature must be positive, got {temperature}")
    a = np.atleast_2d(np.asarray(audio_reprs, dtype=np.float64))
    v = np.atleast_2d(np.asarray(video_reprs, dtype=np.float64))
    if a.shape[0] != v.shape[0]:
        raise BatchMismatch(f"{a.shape[0]} audio reprs vs {v.shape[0]} video reprs")
    n = a.shape[0]
    an = a / np.maximum(np.linalg.norm(a, axis=1, keepdims=True), 1e-12)
    vn = v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-12)
    logits = an @ vn.T / temperature
    idx = np.arange(n)
    row_log = logits - _logsumexp_rows(logits)
    col_log = logits.T - _logsumexp_rows(logits.T)
    loss_av = -row_log[idx, idx].mean()
    loss_va = -col_log[idx, idx].mean()
    return float(0.5 * (loss_av + loss_va))


def _logsumexp_rows(x):
    m = x.max(axis=1, keepdims=True)
    return m + np.log(np.exp(x - m).sum(axis=1, keepdims=True))
