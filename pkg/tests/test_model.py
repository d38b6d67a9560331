import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mindvlog.errors import (
    CorruptCheckpoint,
    DimensionMismatch,
    EmptyInput,
    InvalidConfig,
    LengthOverflow,
)
from mindvlog.features.masking import mask_positions
from mindvlog.fusion.model import FusionConfig, FusionModel, decision, sigmoid_prob

from conftest import tiny_cfg, tiny_model, toy_inputs


def test_encode_shapes_and_spans():
    model = tiny_model()
    inputs = toy_inputs()
    fused = model.encode(
        audio_seq=inputs["audio"], video_seq=inputs["video"], text_seq=inputs["text"]
    )
    cfg = model.cfg
    assert fused.sequence.shape == (3 + 4 + 5, cfg.model_dim)
    assert fused.pooled.shape == (cfg.model_dim,)
    spans = fused.modality_spans
    assert spans["audio"] == (0, 3)
    assert spans["video"] == (3, 7)
    assert spans["text"] == (7, 12)


def test_encode_single_modality():
    model = tiny_model()
    fused = model.encode(text_seq=toy_inputs()["text"])
    assert fused.sequence.shape == (5, model.cfg.model_dim)
    assert fused.modality_spans["text"] == (0, 5)
    # absent modalities occupy zero-width spans
    assert fused.modality_spans["audio"][0] == fused.modality_spans["audio"][1]
    assert fused.modality_spans["video"][0] == fused.modality_spans["video"][1]


def test_encode_requires_some_input():
    with pytest.raises(EmptyInput):
        tiny_model().encode()


def test_encode_rejects_wrong_feature_dim():
    model = tiny_model()
    with pytest.raises(DimensionMismatch):
        model.encode(text_seq=np.zeros((4, model.cfg.text_dim + 1)))


def test_encode_rejects_overlong_sequence():
    model = tiny_model()
    with pytest.raises(LengthOverflow):
        model.encode(text_seq=np.zeros((model.cfg.max_text_len + 1, model.cfg.text_dim)))


def test_same_seed_same_params_and_outputs():
    a, b = tiny_model(), tiny_model()
    for name in a.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])
    inputs = toy_inputs()
    assert a.predict_proba(inputs) == b.predict_proba(inputs)
    c = tiny_model(seed=1)
    assert a.predict_proba(inputs) != c.predict_proba(inputs)


def test_pooled_is_mean_of_sequence():
    model = tiny_model()
    fused = model.encode(text_seq=toy_inputs()["text"])
    np.testing.assert_allclose(fused.pooled, fused.sequence.mean(axis=0), rtol=1e-12)


@given(logit=st.floats(-1000, 1000, allow_nan=False))
def test_sigmoid_prob_is_open_interval(logit):
    p = sigmoid_prob(logit)
    assert 0.0 < p < 1.0


def test_decision_threshold():
    assert decision(0.7, 0.5) == 1
    assert decision(0.3, 0.5) == 0
    assert decision(0.5, 0.5) == 1  # ties go to the positive class


def test_predict_proba_in_unit_interval():
    model = tiny_model()
    p = model.predict_proba(toy_inputs())
    assert 0.0 < p < 1.0


def test_save_load_round_trip(tmp_path):
    model = tiny_model()
    inputs = toy_inputs(seed=3)
    before = model.predict_proba(inputs)
    path = tmp_path / "m.ckpt"
    model.save(path, step=5)
    again = FusionModel.load(path)
    assert again.cfg == model.cfg
    assert again.predict_proba(inputs) == before
    for name in model.params:
        np.testing.assert_array_equal(model.params[name], again.params[name])


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "m.ckpt"
    tiny_model().save(path)
    data = bytearray(path.read_bytes())
    data[:4] = b"WXYZ"
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptCheckpoint):
        FusionModel.load(path)


def test_load_rejects_truncation(tmp_path):
    path = tmp_path / "m.ckpt"
    tiny_model().save(path)
    data = path.read_bytes()
    path.write_bytes(data[: int(len(data) * 0.8)])
    with pytest.raises(CorruptCheckpoint):
        FusionModel.load(path)


def test_load_rejects_shape_mismatch(tmp_path):
    from mindvlog.tensorio import read_checkpoint, write_checkpoint

    path = tmp_path / "m.ckpt"
    model = tiny_model()
    model.save(path)
    tensors, meta = read_checkpoint(path)
    name = sorted(tensors)[0]
    tensors[name] = np.zeros(np.asarray(tensors[name]).size + 1)
    write_checkpoint(path, tensors, meta["config"], seed=meta["seed"])
    with pytest.raises(CorruptCheckpoint):
        FusionModel.load(path)


def test_load_rejects_missing_param(tmp_path):
    from mindvlog.tensorio import read_checkpoint, write_checkpoint

    path = tmp_path / "m.ckpt"
    tiny_model().save(path)
    tensors, meta = read_checkpoint(path)
    tensors.pop(sorted(tensors)[0])
    write_checkpoint(path, tensors, meta["config"])
    with pytest.raises(CorruptCheckpoint):
        FusionModel.load(path)


def test_invalid_config_rejected():
    with pytest.raises(InvalidConfig):
        FusionModel(tiny_cfg(model_dim=15))  # not divisible by heads
    with pytest.raises(InvalidConfig):
        FusionModel(tiny_cfg(heads=0))
    with pytest.raises(InvalidConfig):
        FusionModel(tiny_cfg(encoder_layers=0))


def test_bce_step_returns_finite_loss_and_grads():
    model = tiny_model()
    loss, grads = model.bce_step(toy_inputs(), 1.0)
    assert np.isfinite(loss) and loss > 0
    assert grads
    for g in grads.values():
        assert np.all(np.isfinite(g))


def test_reconstruction_step_runs():
    model = tiny_model()
    inputs = toy_inputs()
    masks = {"text": mask_positions(5, 0.4, seed=0, modality="text")}
    loss, grads = model.reconstruction_step(inputs, masks)
    assert np.isfinite(loss) and loss >= 0
    assert grads


def test_contrastive_step_runs():
    model = tiny_model()
    rng = np.random.default_rng(0)
    audio = [rng.standard_normal((3, model.cfg.audio_dim)) for _ in range(3)]
    video = [rng.standard_normal((4, model.cfg.video_dim)) for _ in range(3)]
    loss, grads = model.contrastive_step(audio, video)
    assert np.isfinite(loss) and loss > 0
    assert grads


def test_num_parameters_counts_everything():
    model = tiny_model()
    assert model.num_parameters() == sum(p.size for p in model.params.values())


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
