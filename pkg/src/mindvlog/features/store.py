"""Feature extraction pipeline and on-disk feature store.

One binary container per (sample, modality) in a flat directory:

    {sample_id}.audio_spect.mvt     log-mel spectrogram  [frames, mel]
    {sample_id}.audio_lowlevel.mvt  descriptor vector    [20]
    {sample_id}.audio_context.mvt   context vector       [d_a]
    {sample_id}.audio_fused.mvt     fused clip vector    [d_a]
    {sample_id}.video.mvt           patch embeddings     [k*P, 768]
    {sample_id}.text.mvt            token embeddings     [n, d_t]

Every array is NaN/Inf-scanned before it is written.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import MissingFeatures, NonFiniteFeatures, TranscriptionFailed
from ..tensorio import read_feature, write_feature
from .audio import (
    AudioFeatures,
    SpectrogramConfig,
    SummaryProjection,
    extract_audio_features,
    load_waveform,
)
from .text import TextFeatures, embed_text
from .video import VideoConfig, VideoFeatures, extract_video_features, load_frames

log = logging.getLogger(__name__)

AUDIO_PARTS = ("audio_spect", "audio_lowlevel", "audio_context", "audio_fused")
ALL_PARTS = AUDIO_PARTS + ("video", "text")

AUDIO_MODES = ("spect", "w2v2_spect")


@dataclass
class FeatureBundle:
    """All extracted features for one sample."""

    sample_id: str
    audio: AudioFeatures
    video: VideoFeatures
    text: TextFeatures


def ensure_finite(name, arr):
    """Reject any feature array containing NaN or Inf."""
    if not np.all(np.isfinite(arr)):
        raise NonFiniteFeatures(f"non-finite values in {name}")
    return arr


def extract_bundle(
    sample,
    acoustic_client,
    text_client,
    transcription_client=None,
    spect_cfg: SpectrogramConfig | None = None,
    video_cfg: VideoConfig | None = None,
    projection: SummaryProjection | None = None,
    patch_projection=None,
):
    """Run all three modality pipelines for one corpus sample."""
    waveform, rate = load_waveform(sample.audio_path)
    audio = extract_audio_features(
        waveform, rate, acoustic_client, cfg=spect_cfg, projection=projection
    )

    frames = load_frames(sample.video_path)
    video = extract_video_features(frames, cfg=video_cfg, projection=patch_projection)

    transcript = sample.effective_transcript()
    if transcript is None:
        if transcription_client is None:
            raise TranscriptionFailed(
                f"sample '{sample.sample_id}' has no transcript and no "
                "transcription client was provided"
            )
        transcript = transcription_client.transcribe(sample.audio_path)
    text = embed_text(transcript, text_client)

    return FeatureBundle(sample_id=sample.sample_id, audio=audio, video=video, text=text)


def _path(root, sample_id, part):
    return Path(root) / f"{sample_id}.{part}.mvt"


def write_bundle(root, bundle: FeatureBundle):
    """Persist every modality of one bundle; returns the written paths."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    sid = bundle.sample_id
    arrays = {
        "audio_spect": bundle.audio.spectrogram,
        "audio_lowlevel": bundle.audio.low_level,
        "audio_context": bundle.audio.context,
        "audio_fused": bundle.audio.fused,
        "video": bundle.video.patches,
        "text": bundle.text.embeddings,
    }
    meta = {
        "video": {
            "frame_indices": [int(i) for i in bundle.video.frame_indices],
            "patches_per_frame": int(bundle.video.patches_per_frame),
        },
        "text": {"n_tokens": len(bundle.text.tokens)},
    }
    paths = []
    for part, arr in arrays.items():
        ensure_finite(f"{sid}.{part}", arr)
        path = _path(root, sid, part)
        write_feature(path, np.asarray(arr), modality=part, **meta.get(part, {}))
        paths.append(path)
    return paths


def read_part(root, sample_id, part):
    """Load one modality array for one sample."""
    path = _path(root, sample_id, part)
    if not path.exists():
        raise MissingFeatures(sample_id, f"(no {part} file at {path})")
    arr, _header = read_feature(path)
    return arr


def model_inputs(root, sample_id, modalities=("video", "audio", "text"), audio_mode="spect"):
    """Assemble per-modality sequences for the fusion model.

    audio_mode 'spect' feeds the frame-level spectrogram; 'w2v2_spect'
    feeds the single fused clip vector as a one-row sequence.
    """
    if audio_mode not in AUDIO_MODES:
        raise ValueError(f"unknown audio mode '{audio_mode}'")
    seqs = {}
    for mod in modalities:
        if mod == "audio":
            if audio_mode == "spect":
                seqs["audio"] = np.asarray(read_part(root, sample_id, "audio_spect"))
            else:
                fused = np.asarray(read_part(root, sample_id, "audio_fused"))
                seqs["audio"] = fused.reshape(1, -1)
        elif mod == "video":
            seqs["video"] = np.asarray(read_part(root, sample_id, "video"))
        elif mod == "text":
            seqs["text"] = np.asarray(read_part(root, sample_id, "text"))
        else:
            raise ValueError(f"unknown modality '{mod}'")
    return seqs


def bundle_exists(root, sample_id, parts=ALL_PARTS):
    return all(_path(root, sample_id, p).exists() for p in parts)
