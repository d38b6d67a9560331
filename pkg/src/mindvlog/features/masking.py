"""Position masking for masked-reconstruction training.

The number of masked positions is round(rate * seq_len) with exact
half-up rounding (floor(x + 0.5), never banker's rounding), positions
are drawn uniformly without replacement from a seeded generator, and
applying a mask never perturbs the unmasked rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidRate

DEFAULT_TEXT_MASK_RATE = 0.15
DEFAULT_VIDEO_MASK_RATE = 0.25


@dataclass
class MaskRecord:
    """One sampled mask: which rows of which modality were hidden."""

    modality: str
    positions: np.ndarray
    rate: float
    seed: int = 0


def mask_count(seq_len, rate):
    """round(rate * seq_len) with half-up rounding."""
    if not 0.0 <= rate <= 1.0:
        raise InvalidRate(f"mask rate must be in [0, 1], got {rate}")
    return int(np.floor(rate * seq_len + 0.5))


def mask_positions(seq_len, rate, seed=0, modality="text"):
    """Sample sorted masked positions for a sequence of ``seq_len`` rows."""
    count = mask_count(seq_len, rate)
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(seq_len, size=count, replace=False))
    return MaskRecord(modality=modality, positions=positions, rate=rate, seed=seed)


def apply_mask(sequence, record: MaskRecord, fill=0.0):
    """Replace the masked rows with ``fill``; unmasked rows are copied
    bit-identically.  ``fill`` may be a scalar or a row vector."""
    out = np.array(sequence, dtype=np.float64, copy=True)
    if record.positions.size:
        out[record.positions] = fill
    return out
