"""Visual feature extraction.

Clips arrive as frame stacks (decoded elsewhere; this package reads
``.npy``/``.npz`` stacks shaped [T, H, W, C]).  A fixed number of frames
is sampled per clip, each frame is resized and center-cropped to a
square, cut into non-overlapping square patches in raster order, and
every patch is linearly embedded to the model width.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    DimensionMismatch,
    EmptyVideo,
    InvalidConfig,
    MissingMedia,
    NonDivisibleDims,
)

PATCH_EMBED_DIM = 768


@dataclass
class VideoConfig:
    frames_per_clip: int = 8
    frame_size: int = 224
    patch_size: int = 16
    seed: int = 0


def load_frames(path):
    """Read a frame stack from .npy or .npz ('frames' key).

    Accepts [T, H, W, C] or [T, H, W] (grayscale, expanded to one channel).
    """
    path = Path(path)
    if not path.is_file():
        raise MissingMedia(f"video file not found: {path}")
    if path.suffix.lower() == ".npz":
        frames = np.load(path)["frames"]
    elif path.suffix.lower() == ".npy":
        frames = np.load(path)
    else:
        raise InvalidConfig(f"unsupported video format: {path.suffix}")
    frames = np.asarray(frames)
    if frames.ndim == 3:
        frames = frames[..., None]
    if frames.ndim != 4:
        raise InvalidConfig(f"expected [T, H, W, C] frames, got shape {frames.shape}")
    return frames


def sample_frames(frames, k, seed=0):
    """Pick ``k`` frame indices uniformly at random, sorted by time.

    Sampling is without replacement whenever the clip has at least ``k``
    frames, with replacement otherwise.  Returns (selected, indices).
    """
    frames = np.asarray(frames)
    n = frames.shape[0]
    if n == 0:
        raise EmptyVideo("clip has no frames")
    if k <= 0:
        raise InvalidConfig(f"frames_per_clip must be positive, got {k}")
    rng = np.random.default_rng(seed)
    replace = n < k
    idx = np.sort(rng.choice(n, size=k, replace=replace))
    return frames[idx], idx


def _bilinear_resize(img, out_h, out_w):
    """Channel-wise bilinear resample of one [H, W, C] frame."""
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.astype(np.float64)
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    img = img.astype(np.float64)
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def prepare_frame(frame, size=224):
    """Resize the shorter side to ``size`` then center-crop to size x size."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 2:
        frame = frame[..., None]
    h, w = frame.shape[:2]
    if h == 0 or w == 0:
        raise EmptyVideo("frame has a zero dimension")
    if h <= w:
        new_h, new_w = size, max(size, int(round(w * size / h)))
    else:
        new_h, new_w = max(size, int(round(h * size / w))), size
    resized = _bilinear_resize(frame, new_h, new_w)
    top = (new_h - size) // 2
    left = (new_w - size) // 2
    return resized[top : top + size, left : left + size]


class PatchProjection:
    """Seeded linear embedding of flattened patches to PATCH_EMBED_DIM."""

    def __init__(self, patch_size=16, channels=3, out_dim=PATCH_EMBED_DIM, seed=0):
        in_dim = patch_size * patch_size * channels
        rng = np.random.default_rng(seed)
        self.weight = rng.standard_normal((in_dim, out_dim)) / np.sqrt(in_dim)
        self.bias = np.zeros(out_dim)
        self.patch_size = patch_size
        self.channels = channels
        self.out_dim = out_dim

    def __call__(self, flat_patches):
        flat_patches = np.asarray(flat_patches, dtype=np.float64)
        if flat_patches.shape[-1] != self.weight.shape[0]:
            raise DimensionMismatch(
                f"patch projection expects dim {self.weight.shape[0]}, "
                f"got {flat_patches.shape[-1]}"
            )
        return flat_patches @ self.weight + self.bias


def patchify(frame, patch_size=16):
    """Cut one [H, W, C] frame into flattened patches in raster order.

    Returns [n_patches, patch_size * patch_size * C].  Raises
    NonDivisibleDims when the frame does not tile exactly.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 2:
        frame = frame[..., None]
    h, w, c = frame.shape
    if h % patch_size or w % patch_size:
        raise NonDivisibleDims(
            f"frame {h}x{w} does not tile into {patch_size}x{patch_size} patches"
        )
    gh, gw = h // patch_size, w // patch_size
    tiles = frame.reshape(gh, patch_size, gw, patch_size, c)
    tiles = tiles.transpose(0, 2, 1, 3, 4)  # raster order: rows, then cols
    return tiles.reshape(gh * gw, patch_size * patch_size * c)


def patchify_embed(frame, projection: PatchProjection):
    """Patch one frame and embed every patch."""
    return projection(patchify(frame, projection.patch_size))


@dataclass
class VideoFeatures:
    """Patch-embedding sequence for one clip."""

    patches: np.ndarray        # [k * patches_per_frame, PATCH_EMBED_DIM]
    frame_indices: np.ndarray  # [k] source frame index per sampled frame
    patches_per_frame: int


def extract_video_features(frames, cfg: VideoConfig | None = None, projection=None):
    """Sample, normalize and embed a clip's frames into one sequence."""
    cfg = cfg or VideoConfig()
    selected, idx = sample_frames(frames, cfg.frames_per_clip, cfg.seed)
    channels = selected.shape[-1] if selected.ndim == 4 else 1
    if projection is None:
        projection = PatchProjection(cfg.patch_size, channels=channels)
    rows = []
    for frame in selected:
        prepared = prepare_frame(frame, cfg.frame_size)
        if prepared.max() > 1.5:          # uint8-style input, rescale
            prepared = prepared / 255.0
        rows.append(patchify_embed(prepared, projection))
    per_frame = rows[0].shape[0]
    return VideoFeatures(
        patches=np.concatenate(rows, axis=0),
        frame_indices=idx,
        patches_per_frame=per_frame,
    )
