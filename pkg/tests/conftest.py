"""Shared fixtures: synthetic manifests, media files, and tiny datasets."""
import json
import sys

import numpy as np
import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # echo the acceptance gate's one-line-per-criterion results, which
    # are otherwise swallowed by output capture on passing runs
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

from mindvlog import corpus
from mindvlog.clients import HashAcousticEncoder, HashTextEncoder
from mindvlog.features import store
from mindvlog.features.video import VideoConfig
from mindvlog.fusion.model import FusionConfig, FusionModel
from mindvlog.training import TrainingSample

# demographic cells of the synthetic reference corpus
TABLE_CELLS = {
    ("depression", "male"): 273,
    ("depression", "female"): 406,
    ("non_depression", "male"): 232,
    ("non_depression", "female"): 350,
}


def make_record(i, gender="male", label="depression", **extra):
    rec = {
        "sample_id": f"s{i:04d}",
        "speaker_id": f"spk{i:04d}",
        "gender": gender,
        "label": label,
        "audio_path": f"audio/s{i:04d}.npz",
    }
    rec.update(extra)
    return rec


def write_manifest_lines(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def reference_records():
    """1261 records whose (label, gender) cells match TABLE_CELLS."""
    records = []
    i = 0
    for (label, gender), count in TABLE_CELLS.items():
        for _ in range(count):
            records.append(make_record(i, gender=gender, label=label))
            i += 1
    return records


def synth_waveform(seconds=0.5, rate=16000, freq=220.0, seed=0):
    t = np.arange(int(seconds * rate)) / rate
    rng = np.random.default_rng(seed)
    return np.sin(2 * np.pi * freq * t) + 0.01 * rng.standard_normal(t.shape)


def write_media(root, sid, seed=0, n_frames=3, frame_hw=32):
    """Write one sample's .npz waveform and .npy frame stack; returns paths."""
    audio_dir = root / "audio"
    video_dir = root / "video"
    audio_dir.mkdir(parents=True, exist_ok=True)
    video_dir.mkdir(parents=True, exist_ok=True)
    wav = synth_waveform(seed=seed, freq=200.0 + 10 * seed)
    apath = audio_dir / f"{sid}.npz"
    np.savez(apath, waveform=wav.astype(np.float64), rate=16000)
    rng = np.random.default_rng(seed + 1000)
    frames = rng.integers(0, 256, size=(n_frames, frame_hw, frame_hw, 3), dtype=np.uint8)
    vpath = video_dir / f"{sid}.npy"
    np.save(vpath, frames)
    return apath, vpath


TRANSCRIPTS = [
    "i have been feeling really low and tired lately",
    "today was a good day and i enjoyed the walk outside",
    "i keep thinking nothing will ever work out for me",
    "we cooked dinner together and laughed about old photos",
]


@pytest.fixture
def media_corpus(tmp_path):
    """Four samples with real media files and transcripts on disk."""
    labels = ["depression", "non_depression", "depression", "non_depression"]
    genders = ["male", "female", "female", "male"]
    samples = []
    for i in range(4):
        sid = f"s{i:04d}"
        apath, vpath = write_media(tmp_path, sid, seed=i)
        samples.append(
            corpus.MediaSample(
                sample_id=sid,
                speaker_id=f"spk{i:04d}",
                gender=genders[i],
                label=labels[i],
                audio_path=str(apath),
                video_path=str(vpath),
                transcript=TRANSCRIPTS[i],
            )
        )
    return corpus.Corpus(samples=samples, stats=corpus.CorpusStats.from_samples(samples))


# small video geometry keeps extraction fast; patch math is unchanged
FAST_VIDEO_CFG = VideoConfig(frames_per_clip=2, frame_size=32, patch_size=16)


def extract_all(media, root, video_cfg=FAST_VIDEO_CFG):
    acoustic = HashAcousticEncoder(dimension=64, seed=0)
    text = HashTextEncoder(dimension=768, seed=0)
    for s in media.samples:
        bundle = store.extract_bundle(s, acoustic, text, video_cfg=video_cfg)
        store.write_bundle(root, bundle)
    return root


@pytest.fixture
def feature_root(tmp_path, media_corpus):
    root = tmp_path / "features"
    return extract_all(media_corpus, root)


def tiny_cfg(**over):
    base = dict(
        encoder_layers=1,
        decoder_layers=1,
        model_dim=16,
        heads=2,
        ff_dim=32,
        audio_dim=8,
        video_dim=12,
        text_dim=16,
        max_audio_len=32,
        max_video_len=32,
        max_text_len=32,
        seed=0,
    )
    base.update(over)
    return FusionConfig(**base)


def tiny_model(**over):
    return FusionModel(tiny_cfg(**over))


def toy_inputs(seed=0, t_audio=3, t_video=4, t_text=5, cfg=None):
    cfg = cfg or tiny_cfg()
    rng = np.random.default_rng(seed)
    return {
        "audio": rng.standard_normal((t_audio, cfg.audio_dim)),
        "video": rng.standard_normal((t_video, cfg.video_dim)),
        "text": rng.standard_normal((t_text, cfg.text_dim)),
    }


def separable_dataset(n=24, dim=16, seq_len=4, seed=0):
    """Text-only TrainingSamples with linearly separable class means."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        label = i % 2
        mean = 0.8 if label == 1 else -0.8
        x = mean + 0.1 * rng.standard_normal((seq_len, dim))
        out.append(TrainingSample(sample_id=f"t{i:03d}", inputs={"text": x}, label=label))
    return out
