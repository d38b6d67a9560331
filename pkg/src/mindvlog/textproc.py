"""Shared text tokenization.

One tokenizer serves generation metrics, document chunking, and the stub
text encoders, so token counts agree across the toolkit: lowercase, then
split into word runs (letters/digits/apostrophes) and single punctuation
marks.  Whitespace never survives into a token, which makes
``tokenize(" ".join(tokens)) == tokens`` hold; the chunker relies on it.
"""

import re

TOKENIZER_TAG = "lower-word-punct-v1"

_TOKEN_RE = re.compile(r"[a-z0-9']+|[^\sa-z0-9']")


def tokenize(text):
    """Lowercase + whitespace/punctuation split."""
    return _TOKEN_RE.findall(text.lower())


def detokenize(tokens):
    """Inverse-enough join: re-tokenizing the result yields ``tokens``."""
    return " ".join(tokens)
