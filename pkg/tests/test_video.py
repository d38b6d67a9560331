import numpy as np
import pytest

from mindvlog.errors import EmptyVideo, InvalidConfig, NonDivisibleDims
from mindvlog.features import video


def _frames(n, h=32, w=32, c=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(n, h, w, c), dtype=np.uint8)


def test_sample_frames_one_frame_repeats():
    frames = _frames(1)
    selected, idx = video.sample_frames(frames, 4, seed=0)
    assert selected.shape[0] == 4
    assert list(idx) == [0, 0, 0, 0]
    for f in selected:
        np.testing.assert_array_equal(f, frames[0])


def test_sample_frames_without_replacement_when_enough():
    frames = _frames(100)
    _, idx = video.sample_frames(frames, 8, seed=1)
    assert len(idx) == 8
    assert len(set(idx.tolist())) == 8
    assert list(idx) == sorted(idx)
    assert all(0 <= i < 100 for i in idx)


def test_sample_frames_deterministic():
    frames = _frames(50)
    _, a = video.sample_frames(frames, 8, seed=3)
    _, b = video.sample_frames(frames, 8, seed=3)
    np.testing.assert_array_equal(a, b)
    _, c = video.sample_frames(frames, 8, seed=4)
    assert not np.array_equal(a, c)


def test_sample_frames_empty_clip():
    with pytest.raises(EmptyVideo):
        video.sample_frames(np.zeros((0, 8, 8, 3)), 4)


def test_sample_frames_nonpositive_k():
    with pytest.raises(InvalidConfig):
        video.sample_frames(_frames(3), 0)


def test_patchify_224_gives_196_patches():
    frame = np.zeros((224, 224, 3))
    patches = video.patchify(frame, 16)
    assert patches.shape == (196, 16 * 16 * 3)


def test_patchify_non_divisible_rejected():
    with pytest.raises(NonDivisibleDims):
        video.patchify(np.zeros((225, 224, 3)), 16)
    with pytest.raises(NonDivisibleDims):
        video.patchify(np.zeros((224, 225, 3)), 16)


def test_patchify_raster_order():
    # frame of constant-valued 2x2 patches numbered in raster order
    frame = np.arange(4).reshape(2, 2).repeat(2, axis=0).repeat(2, axis=1)[..., None]
    patches = video.patchify(frame.astype(np.float64), 2)
    np.testing.assert_array_equal(patches[:, 0], [0, 1, 2, 3])
    assert np.all(patches == patches[:, :1])


def test_patchify_embed_zero_image_zero_output():
    proj = video.PatchProjection(patch_size=16, channels=3, seed=0)
    out = video.patchify_embed(np.zeros((32, 32, 3)), proj)
    assert out.shape == (4, video.PATCH_EMBED_DIM)
    np.testing.assert_allclose(out, 0.0)


def test_patchify_embed_linearity():
    proj = video.PatchProjection(patch_size=16, channels=3, seed=1)
    rng = np.random.default_rng(5)
    x = rng.standard_normal((32, 32, 3))
    a = video.patchify_embed(x, proj)
    b = video.patchify_embed(2.5 * x, proj)
    np.testing.assert_allclose(b, 2.5 * a, rtol=1e-10)
    y = rng.standard_normal((32, 32, 3))
    np.testing.assert_allclose(
        video.patchify_embed(x + y, proj), a + video.patchify_embed(y, proj), rtol=1e-9, atol=1e-12
    )


def test_prepare_frame_identity_and_resize():
    same = video.prepare_frame(np.ones((224, 224, 3)), 224)
    assert same.shape == (224, 224, 3)
    bigger = video.prepare_frame(np.ones((448, 448, 3)), 224)
    assert bigger.shape == (224, 224, 3)
    np.testing.assert_allclose(bigger, 1.0)
    rect = video.prepare_frame(np.ones((240, 320, 3)), 224)
    assert rect.shape == (224, 224, 3)


def test_prepare_frame_empty():
    with pytest.raises(EmptyVideo):
        video.prepare_frame(np.zeros((0, 10, 3)))


def test_extract_video_features_shapes():
    frames = _frames(6)
    cfg = video.VideoConfig(frames_per_clip=2, frame_size=32, patch_size=16)
    feats = video.extract_video_features(frames, cfg)
    assert feats.patches_per_frame == 4  # (32/16)^2
    assert feats.patches.shape == (2 * 4, video.PATCH_EMBED_DIM)
    assert feats.frame_indices.shape == (2,)
    again = video.extract_video_features(frames, cfg)
    np.testing.assert_array_equal(feats.patches, again.patches)


def test_extract_video_features_default_geometry():
    frames = _frames(3, h=224, w=224)
    cfg = video.VideoConfig(frames_per_clip=1)
    feats = video.extract_video_features(frames, cfg)
    assert feats.patches_per_frame == 196
    assert feats.patches.shape == (196, video.PATCH_EMBED_DIM)


def test_load_frames_npy_and_grayscale(tmp_path):
    path = tmp_path / "v.npy"
    np.save(path, np.zeros((5, 8, 8), dtype=np.uint8))
    frames = video.load_frames(path)
    assert frames.shape == (5, 8, 8, 1)
    npz = tmp_path / "v.npz"
    np.savez(npz, frames=np.zeros((2, 8, 8, 3), dtype=np.uint8))
    assert video.load_frames(npz).shape == (2, 8, 8, 3)


def test_load_frames_bad_suffix(tmp_path):
    path = tmp_path / "v.gif"
    path.write_bytes(b"\x00")
    with pytest.raises(InvalidConfig):
        video.load_frames(path)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
