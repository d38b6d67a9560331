"""Acoustic feature extraction.

Three feature families per clip:

* log-mel spectrogram: framed, Hann-windowed power spectra through a
  triangular mel filterbank (peak-1 filters, 2595*log10(1+f/700) scale),
  natural log with a 1e-10 floor.  Frame count is ceil(len/hop); the tail
  frame is zero-padded, no centering.
* low-level descriptors: one fixed-length vector of cepstral, spectral,
  temporal and pitch statistics (ordering documented on
  :data:`LOW_LEVEL_LAYOUT`).
* contextual features: pooled output of a pluggable self-supervised
  speech encoder client.

The clip-level audio representation averages the (projected) spectrogram
summary with the contextual vector, elementwise.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import kernels
from ..errors import (
    ClientUnavailable,
    DimensionMismatch,
    EmptySignal,
    InvalidConfig,
    MissingMedia,
)

LOG_FLOOR = 1e-10


@dataclass
class SpectrogramConfig:
    n_fft: int = 1024
    hop: int = 512
    mel_bins: int = 64
    fmin: float = 0.0
    fmax: float | None = None  # defaults to rate / 2

    def validate(self):
        if self.n_fft <= 0 or self.hop <= 0 or self.mel_bins <= 0:
            raise InvalidConfig(
                f"n_fft/hop/mel_bins must be positive, got "
                f"{self.n_fft}/{self.hop}/{self.mel_bins}"
            )


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(mel_bins, n_fft, rate, fmin=0.0, fmax=None):
    """Triangular mel filters over rFFT bins, peak height 1.

    Returns [mel_bins, n_fft // 2 + 1].
    """
    if fmax is None:
        fmax = rate / 2.0
    n_bins = n_fft // 2 + 1
    fft_freqs = np.arange(n_bins) * rate / n_fft
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), mel_bins + 2)
    hz_pts = mel_to_hz(mel_pts)
    fb = np.zeros((mel_bins, n_bins), dtype=np.float64)
    for j in range(mel_bins):
        lo, center, hi = hz_pts[j], hz_pts[j + 1], hz_pts[j + 2]
        rising = (fft_freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - fft_freqs) / max(hi - center, 1e-12)
        fb[j] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def filter_center_freqs(mel_bins, rate, fmin=0.0, fmax=None):
    """Center frequency (Hz) of each mel filter."""
    if fmax is None:
        fmax = rate / 2.0
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), mel_bins + 2)
    return mel_to_hz(mel_pts)[1:-1]


def log_mel_spectrogram(waveform, rate, cfg: SpectrogramConfig | None = None):
    """Log-mel power spectrogram, shape [ceil(len/hop), mel_bins]."""
    cfg = cfg or SpectrogramConfig()
    cfg.validate()
    if rate <= 0:
        raise InvalidConfig(f"sample rate must be positive, got {rate}")
    x = np.asarray(waveform, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptySignal("cannot compute a spectrogram of an empty signal")
    n_frames = int(np.ceil(x.size / cfg.hop))
    window = np.hanning(cfg.n_fft)
    frames = kernels.windowed_frames(x, window, cfg.hop, n_frames)
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    fb = mel_filterbank(cfg.mel_bins, cfg.n_fft, rate, cfg.fmin, cfg.fmax)
    mel_power = power @ fb.T
    return np.log(mel_power + LOG_FLOOR)


# Index layout of the low-level descriptor vector.
LOW_LEVEL_LAYOUT = (
    "mfcc_00..mfcc_12 (13 cepstral coefficients, DCT-II of mean log-mel)",
    "13: spectral centroid mean (Hz)",
    "14: spectral rolloff-85% mean (Hz)",
    "15: zero-crossing rate (sign changes / samples)",
    "16: RMS energy mean",
    "17: RMS energy std",
    "18: F0 mean over voiced frames (Hz, 0 if unvoiced)",
    "19: F0 std over voiced frames (Hz)",
)
LOW_LEVEL_DIM = 20
_N_MFCC = 13


def _dct2(x, n_out):
    n = x.shape[0]
    k = np.arange(n_out)[:, None]
    nn = np.arange(n)[None, :]
    basis = np.cos(np.pi * k * (2 * nn + 1) / (2 * n))
    return basis @ x


def estimate_f0(waveform, rate, fmin=50.0, fmax=500.0, frame_len=1024, hop=512):
    """Per-frame F0 via autocorrelation peak with parabolic refinement.

    Returns an array of per-frame F0 in Hz with 0 marking unvoiced frames.
    """
    x = np.asarray(waveform, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptySignal("cannot estimate F0 of an empty signal")
    min_lag = max(2, int(rate / fmax))
    max_lag = min(int(rate / fmin), frame_len - 2)
    if max_lag <= min_lag:
        return np.zeros(0)
    n_frames = max(1, 1 + (x.size - frame_len) // hop) if x.size >= frame_len else 1
    f0 = np.zeros(n_frames)
    for f in range(n_frames):
        seg = x[f * hop : f * hop + frame_len]
        if seg.size < frame_len:
            padded = np.zeros(frame_len)
            padded[: seg.size] = seg
            seg = padded
        energy = float(np.dot(seg, seg))
        if energy < 1e-12:
            continue
        ac = kernels.autocorr_lags(seg, min_lag - 1, max_lag + 1)
        inner = ac[1:-1]
        peak = int(np.argmax(inner))
        if inner[peak] / energy < 0.3:
            continue  # too weak to call voiced
        lag = min_lag + peak
        # parabolic interpolation around the peak for sub-sample precision
        a, b, c = ac[peak], ac[peak + 1], ac[peak + 2]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if abs(denom) > 1e-12 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
        f0[f] = rate / (lag + shift)
    return f0


def low_level_acoustic(waveform, rate, cfg: SpectrogramConfig | None = None):
    """Fixed-length descriptor vector; see LOW_LEVEL_LAYOUT for ordering."""
    cfg = cfg or SpectrogramConfig()
    x = np.asarray(waveform, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptySignal("cannot extract descriptors from an empty signal")

    log_mel = log_mel_spectrogram(x, rate, cfg)
    mfcc = _dct2(log_mel.mean(axis=0), _N_MFCC)

    n_frames = log_mel.shape[0]
    window = np.hanning(cfg.n_fft)
    frames = kernels.windowed_frames(x, window, cfg.hop, n_frames)
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    freqs = np.arange(power.shape[1]) * rate / cfg.n_fft
    total = power.sum(axis=1)
    safe = np.where(total > 0, total, 1.0)
    centroid = np.where(total > 0, (power * freqs[None, :]).sum(axis=1) / safe, 0.0)
    cum = np.cumsum(power, axis=1)
    roll_idx = np.argmax(cum >= 0.85 * total[:, None], axis=1)
    rolloff = np.where(total > 0, freqs[roll_idx], 0.0)

    signs = np.sign(x)
    signs = signs[signs != 0]
    zcr = float(np.count_nonzero(np.diff(signs))) / x.size if signs.size > 1 else 0.0

    hop = cfg.hop
    n_chunks = int(np.ceil(x.size / hop))
    padded = np.zeros(n_chunks * hop)
    padded[: x.size] = x
    rms = np.sqrt((padded.reshape(n_chunks, hop) ** 2).mean(axis=1))

    f0 = estimate_f0(x, rate)
    voiced = f0[f0 > 0]
    f0_mean = float(voiced.mean()) if voiced.size else 0.0
    f0_std = float(voiced.std()) if voiced.size else 0.0

    vec = np.concatenate(
        [
            mfcc,
            [centroid.mean(), rolloff.mean(), zcr, rms.mean(), rms.std(), f0_mean, f0_std],
        ]
    )
    assert vec.shape[0] == LOW_LEVEL_DIM
    return vec


def acoustic_context(waveform, rate, client):
    """Mean-pool the client's frame outputs into one context vector."""
    if client is None:
        raise ClientUnavailable("no acoustic encoder client configured")
    frames = np.asarray(client.encode(waveform, rate), dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != client.dimension:
        raise DimensionMismatch(
            f"acoustic client returned shape {frames.shape}, "
            f"expected [frames, {client.dimension}]"
        )
    return frames.mean(axis=0)


class SummaryProjection:
    """Fixed seeded linear map from mel space to the context dimension.

    Reduces a spectrogram to one vector: temporal mean over frames, then
    this projection.  Deterministic given (in_dim, out_dim, seed).
    """

    def __init__(self, in_dim, out_dim, seed=0):
        rng = np.random.default_rng(seed)
        self.weight = rng.standard_normal((in_dim, out_dim)) / np.sqrt(in_dim)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.seed = seed

    def __call__(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape[-1] != self.in_dim:
            raise DimensionMismatch(
                f"projection expects dim {self.in_dim}, got {vec.shape[-1]}"
            )
        return vec @ self.weight


def spectrogram_summary(log_mel, projection: SummaryProjection):
    """Temporal mean of the spectrogram, projected to the context dim."""
    return projection(np.asarray(log_mel, dtype=np.float64).mean(axis=0))


def fuse_audio(spect_summary, context):
    """Elementwise mean of the two clip-level audio vectors."""
    s = np.asarray(spect_summary, dtype=np.float64)
    w = np.asarray(context, dtype=np.float64)
    if s.shape != w.shape:
        raise DimensionMismatch(f"cannot fuse shapes {s.shape} and {w.shape}")
    return (s + w) / 2.0


@dataclass
class AudioFeatures:
    """All acoustic artifacts for one clip."""

    spectrogram: np.ndarray      # [frames, mel_bins]
    low_level: np.ndarray        # [LOW_LEVEL_DIM]
    context: np.ndarray          # [d_a]
    fused: np.ndarray            # [d_a]


def extract_audio_features(waveform, rate, client, cfg=None, projection=None):
    """Run the full acoustic pipeline for one clip."""
    cfg = cfg or SpectrogramConfig()
    spect = log_mel_spectrogram(waveform, rate, cfg)
    low = low_level_acoustic(waveform, rate, cfg)
    ctx = acoustic_context(waveform, rate, client)
    if projection is None:
        projection = SummaryProjection(cfg.mel_bins, ctx.shape[0])
    fused = fuse_audio(spectrogram_summary(spect, projection), ctx)
    return AudioFeatures(spectrogram=spect, low_level=low, context=ctx, fused=fused)


def load_waveform(path, default_rate=16000):
    """Read mono audio from .wav (PCM), .npz ('waveform'/'rate'), or .npy."""
    path = Path(path)
    if not path.is_file():
        raise MissingMedia(f"audio file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".wav":
        with wave.open(str(path), "rb") as wf:
            rate = wf.getframerate()
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            raw = wf.readframes(wf.getnframes())
        if width == 2:
            x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
        elif width == 4:
            x = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
        else:
            raise InvalidConfig(f"unsupported wav sample width {width}")
        if channels > 1:
            x = x.reshape(-1, channels).mean(axis=1)
        return x, rate
    if suffix == ".npz":
        data = np.load(path)
        return np.asarray(data["waveform"], dtype=np.float64).ravel(), int(data["rate"])
    if suffix == ".npy":
        return np.asarray(np.load(path), dtype=np.float64).ravel(), default_rate
    raise InvalidConfig(f"unsupported audio format: {path.suffix}")
