"""Retrieval over domain documents: chunking, exact vector index, persistence.

Documents are tokenized with the shared package tokenizer and cut into
chunks of at most 256 tokens (configurable, optional overlap).  Chunk
embeddings are the mean of the client's token embeddings.  Search is an
exact cosine scan; corpora here are a handful of domain documents, so
correctness beats approximate structures.  Ties are broken by chunk_id
lexicographic order so rankings are fully deterministic.

Index file layout (little-endian):

    magic b"MVIX" | version u8 | u32 header_len | UTF-8 JSON header
    {dimension, count, tokenizer} | count * [u32 json_len | chunk JSON
    (chunk_id, doc_id, text, token_count) | dimension * f32 embedding]
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import (
    ClientUnavailable,
    CorruptIndexFile,
    DimensionMismatch,
    EmptyDocument,
    EmptyIndex,
    InvalidConfig,
)
from .kernels import cosine_scores
from .textproc import TOKENIZER_TAG, detokenize, tokenize

DEFAULT_CHUNK_SIZE = 256
DEFAULT_TOP_K = 3

INDEX_MAGIC = b"MVIX"
INDEX_VERSION = 1


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    text: str
    token_count: int
    embedding: Optional[np.ndarray] = None


@dataclass
class VectorIndex:
    dimension: int = 0
    entries: List[Chunk] = field(default_factory=list)
    tokenizer: str = TOKENIZER_TAG

    def __len__(self):
        return len(self.entries)


def chunk_document(text, doc_id, size=DEFAULT_CHUNK_SIZE, overlap=0):
    """Cut one document into token chunks of at most ``size`` tokens.

    At overlap 0 the chunk texts concatenate back to the tokenized
    document with nothing lost or duplicated.
    """
    if not size > overlap >= 0:
        raise InvalidConfig(f"need size > overlap >= 0, got {size}/{overlap}")
    tokens = tokenize(text or "")
    if not tokens:
        raise EmptyDocument(f"document '{doc_id}' has no tokens")
    step = size - overlap
    chunks = []
    for i, start in enumerate(range(0, len(tokens), step)):
        piece = tokens[start : start + size]
        if not piece:
            break
        chunks.append(
            Chunk(
                chunk_id=f"{doc_id}#{i:04d}",
                doc_id=doc_id,
                text=detokenize(piece),
                token_count=len(piece),
            )
        )
        if start + size >= len(tokens) and overlap > 0:
            break
    return chunks


def embed_chunk(chunk, embedder):
    """Mean of the token embeddings, as float64."""
    emb = np.asarray(embedder.encode_tokens(tokenize(chunk.text)), dtype=np.float64)
    return emb.mean(axis=0)


def build_index(chunks, embedder):
    """Embed every chunk and assemble the index.

    The dimension is fixed by the first embedding; later mismatches
    raise DimensionMismatch.  Zero chunks produce an empty valid index.
    """
    if embedder is None:
        raise ClientUnavailable("no embedding client configured")
    index = VectorIndex()
    for chunk in chunks:
        vec = embed_chunk(chunk, embedder)
        if index.dimension == 0:
            index.dimension = int(vec.shape[0])
        elif vec.shape[0] != index.dimension:
            raise DimensionMismatch(
                f"chunk '{chunk.chunk_id}' embedded to dim {vec.shape[0]}, "
                f"index dimension is {index.dimension}"
            )
        entry = Chunk(
            chunk_id=chunk.chunk_id,
            doc_id=chunk.doc_id,
            text=chunk.text,
            token_count=chunk.token_count,
            embedding=vec,
        )
        index.entries.append(entry)
    if index.dimension == 0:
        index.dimension = int(getattr(embedder, "dimension", 0))
    return index


def retrieve(index, query, k=DEFAULT_TOP_K, embedder=None):
    """Exact top-k chunks by cosine similarity, descending.

    Ties are broken by chunk_id lexicographic order.  ``k`` larger than
    the index returns every entry.
    """
    if k < 1:
        raise InvalidConfig(f"k must be >= 1, got {k}")
    if not index.entries:
        raise EmptyIndex("cannot retrieve from an empty index")
    if embedder is None:
        raise ClientUnavailable("no embedding client configured")
    q_tokens = tokenize(query or "")
    if not q_tokens:
        raise EmptyDocument("query has no tokens")
    q = np.asarray(embedder.encode_tokens(q_tokens), dtype=np.float64).mean(axis=0)
    if q.shape[0] != index.dimension:
        raise DimensionMismatch(
            f"query embedded to dim {q.shape[0]}, index dimension {index.dimension}"
        )
    matrix = np.stack([c.embedding for c in index.entries])
    scores = cosine_scores(q[None, :], matrix)[0]
    order = sorted(
        range(len(index.entries)),
        key=lambda i: (-scores[i], index.entries[i].chunk_id),
    )
    return [(index.entries[i], float(scores[i])) for i in order[:k]]


def persist(index, path):
    """Write the index to ``path`` in the binary record format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "dimension": index.dimension,
        "count": len(index.entries),
        "tokenizer": index.tokenizer,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<B", INDEX_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for c in index.entries:
            meta = {
                "chunk_id": c.chunk_id,
                "doc_id": c.doc_id,
                "text": c.text,
                "token_count": c.token_count,
            }
            meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
            fh.write(struct.pack("<I", len(meta_bytes)))
            fh.write(meta_bytes)
            fh.write(np.asarray(c.embedding, dtype="<f4").tobytes(order="C"))
    return path


def load(path):
    """Read an index back; embeddings come back at float32 precision."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CorruptIndexFile(f"cannot read index file: {exc}") from exc
    view = memoryview(raw)
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(raw):
            raise CorruptIndexFile(f"truncated index file while reading {what}")
        piece = view[pos : pos + n]
        pos += n
        return piece

    if bytes(take(4, "magic")) != INDEX_MAGIC:
        raise CorruptIndexFile("bad magic; not an index file")
    version = struct.unpack("<B", take(1, "version"))[0]
    if version != INDEX_VERSION:
        raise CorruptIndexFile(f"unsupported index version {version}")
    (header_len,) = struct.unpack("<I", take(4, "header length"))
    try:
        header = json.loads(bytes(take(header_len, "header")).decode("utf-8"))
        dimension = int(header["dimension"])
        count = int(header["count"])
        tokenizer = header["tokenizer"]
    except (ValueError, KeyError) as exc:
        raise CorruptIndexFile(f"bad index header: {exc}") from exc

    index = VectorIndex(dimension=dimension, tokenizer=tokenizer)
    for _ in range(count):
        (meta_len,) = struct.unpack("<I", take(4, "chunk meta length"))
        try:
            meta = json.loads(bytes(take(meta_len, "chunk meta")).decode("utf-8"))
        except ValueError as exc:
            raise CorruptIndexFile(f"bad chunk metadata: {exc}") from exc
        emb = np.frombuffer(take(4 * dimension, "embedding"), dtype="<f4").astype(
            np.float64
        )
        index.entries.append(
            Chunk(
                chunk_id=meta["chunk_id"],
                doc_id=meta["doc_id"],
                text=meta["text"],
                token_count=meta["token_count"],
                embedding=emb,
            )
        )
    if pos != len(raw):
        raise CorruptIndexFile(f"{len(raw) - pos} trailing bytes after last chunk")
    return index


def index_documents(docs, embedder, size=DEFAULT_CHUNK_SIZE, overlap=0):
    """Chunk and index a {doc_id: text} mapping in sorted doc order."""
    chunks = []
    for doc_id in sorted(docs):
        chunks.extend(chunk_document(docs[doc_id], doc_id, size, overlap))
    return build_index(chunks, embedder)
