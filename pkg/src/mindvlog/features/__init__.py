"""Per-modality feature extraction (audio, video, text) and masking."""

from .audio import (
    AudioFeatures,
    LOW_LEVEL_DIM,
    LOW_LEVEL_LAYOUT,
    SpectrogramConfig,
    SummaryProjection,
    acoustic_context,
    estimate_f0,
    extract_audio_features,
    filter_center_freqs,
    fuse_audio,
    hz_to_mel,
    load_waveform,
    log_mel_spectrogram,
    low_level_acoustic,
    mel_filterbank,
    mel_to_hz,
    spectrogram_summary,
)
from .masking import (
    DEFAULT_TEXT_MASK_RATE,
    DEFAULT_VIDEO_MASK_RATE,
    MaskRecord,
    apply_mask,
    mask_count,
    mask_positions,
)
from .store import (
    ALL_PARTS,
    AUDIO_MODES,
    FeatureBundle,
    bundle_exists,
    ensure_finite,
    extract_bundle,
    model_inputs,
    read_part,
    write_bundle,
)
from .text import TextFeatures, embed_text
from .video import (
    PATCH_EMBED_DIM,
    PatchProjection,
    VideoConfig,
    VideoFeatures,
    extract_video_features,
    load_frames,
    patchify,
    patchify_embed,
    prepare_frame,
    sample_frames,
)

__all__ = [
    "ALL_PARTS",
    "AUDIO_MODES",
    "AudioFeatures",
    "DEFAULT_TEXT_MASK_RATE",
    "DEFAULT_VIDEO_MASK_RATE",
    "FeatureBundle",
    "LOW_LEVEL_DIM",
    "LOW_LEVEL_LAYOUT",
    "MaskRecord",
    "PATCH_EMBED_DIM",
    "PatchProjection",
    "SpectrogramConfig",
    "SummaryProjection",
    "TextFeatures",
    "VideoConfig",
    "VideoFeatures",
    "acoustic_context",
    "apply_mask",
    "bundle_exists",
    "embed_text",
    "ensure_finite",
    "estimate_f0",
    "extract_audio_features",
    "extract_bundle",
    "extract_video_features",
    "filter_center_freqs",
    "fuse_audio",
    "hz_to_mel",
    "load_frames",
    "load_waveform",
    "log_mel_spectrogram",
    "low_level_acoustic",
    "mask_count",
    "mask_positions",
    "mel_filterbank",
    "mel_to_hz",
    "model_inputs",
    "patchify",
    "patchify_embed",
    "prepare_frame",
    "read_part",
    "sample_frames",
    "spectrogram_summary",
    "write_bundle",
]
