"""Linguistic feature extraction.

Transcripts are tokenized with the shared package tokenizer and encoded
token-by-token through a pluggable text encoder client, yielding one
embedding row per token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ClientUnavailable, DimensionMismatch, EmptyText
from ..textproc import tokenize


@dataclass
class TextFeatures:
    tokens: list
    embeddings: np.ndarray  # [n_tokens, d_t]


def embed_text(transcript, client):
    """Tokenize and encode one transcript.

    Raises EmptyText when the transcript has no tokens and
    ClientUnavailable when no encoder client is configured.
    """
    if client is None:
        raise ClientUnavailable("no text encoder client configured")
    tokens = tokenize(transcript or "")
    if not tokens:
        raise EmptyText("transcript has no tokens")
    emb = np.asarray(client.encode_tokens(tokens), dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] != len(tokens) or emb.shape[1] != client.dimension:
        raise DimensionMismatch(
            f"text client returned shape {emb.shape}, "
            f"expected [{len(tokens)}, {client.dimension}]"
        )
    return TextFeatures(tokens=tokens, embeddings=emb)
