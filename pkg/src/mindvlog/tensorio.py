"""Binary tensor containers: feature files and model checkpoints.

Feature file layout (one array per (sample, modality) file)::

    magic   b"MVTC"
    version u8 (currently 1)
    hlen    u32 little-endian
    header  hlen bytes of UTF-8 JSON:
            {"modality": str, "dtype": "float32", "shape": [..],
             "order": "C", ...free-form metadata}
    payload little-endian floats, C order

Feature payloads are float32.  Checkpoints reuse the same framing with
magic b"MVCK"; their header carries the model config, seed, step, and the
tensor directory in sorted-name order, and parameter payloads are stored
as float64 so that save/resume does not perturb training trajectories.
"""

import json
import struct

import numpy as np

from .errors import CorruptCheckpoint, CorruptIndexFile

FEATURE_MAGIC = b"MVTC"
CHECKPOINT_MAGIC = b"MVCK"
VERSION = 1

_DTYPES = {"float32": np.dtype("<f4"), "float64": np.dtype("<f8")}


def _pack_header(obj):
    raw = json.dumps(obj, sort_keys=True).encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise CorruptIndexFile(f"truncated container while reading {what}")
    return buf


def _read_header(fh, magic, what):
    got = _read_exact(fh, 4, "magic")
    if got != magic:
        raise CorruptIndexFile(f"bad magic for {what}: {got!r}")
    version = _read_exact(fh, 1, "version")[0]
    if version != VERSION:
        raise CorruptIndexFile(f"unsupported {what} version {version}")
    (hlen,) = struct.unpack("<I", _read_exact(fh, 4, "header length"))
    try:
        return json.loads(_read_exact(fh, hlen, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptIndexFile(f"unreadable {what} header: {exc}") from exc


def write_feature(path, array, modality, dtype="float32", **meta):
    """Write one feature array.  Extra keyword metadata lands in the header."""
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported dtype {dtype!r}")
    arr = np.ascontiguousarray(array, dtype=_DTYPES[dtype])
    header = {
        "modality": modality,
        "dtype": dtype,
        "shape": list(arr.shape),
        "order": "C",
    }
    header.update(meta)
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(_pack_header(header))
        fh.write(arr.tobytes(order="C"))


def read_feature(path):
    """Read a feature file back as ``(array, header_dict)``."""
    with open(path, "rb") as fh:
        header = _read_header(fh, FEATURE_MAGIC, "feature file")
        dtype = _DTYPES.get(header.get("dtype"))
        if dtype is None:
            raise CorruptIndexFile(f"bad dtype in feature header: {header.get('dtype')}")
        shape = tuple(header.get("shape", ()))
        count = int(np.prod(shape)) if shape else 1
        payload = _read_exact(fh, count * dtype.itemsize, "payload")
        arr = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return arr, header


def write_checkpoint(path, tensors, config, seed=0, step=0):
    """Write named parameter tensors plus run metadata.

    ``tensors`` is a mapping name -> ndarray; serialization order is
    sorted by name so files are byte-stable for identical states.
    """
    names = sorted(tensors)
    directory = [
        {"name": n, "dtype": "float64", "shape": list(np.asarray(tensors[n]).shape)}
        for n in names
    ]
    header = {"config": config, "seed": seed, "step": step, "tensors": directory}
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(_pack_header(header))
        for n in names:
            fh.write(np.ascontiguousarray(tensors[n], dtype="<f8").tobytes(order="C"))


def read_checkpoint(path):
    """Read a checkpoint back as ``(tensors_dict, header_dict)``."""
    try:
        with open(path, "rb") as fh:
            header = _read_header(fh, CHECKPOINT_MAGIC, "checkpoint")
            tensors = {}
            for entry in header["tensors"]:
                dtype = _DTYPES[entry["dtype"]]
                shape = tuple(entry["shape"])
                count = int(np.prod(shape)) if shape else 1
                payload = _read_exact(fh, count * dtype.itemsize, entry["name"])
                tensors[entry["name"]] = (
                    np.frombuffer(payload, dtype=dtype).reshape(shape).astype(np.float64)
                )
    except CorruptIndexFile as exc:
        raise CorruptCheckpoint(str(exc)) from exc
    return tensors, header
