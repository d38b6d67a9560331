import numpy as np
import pytest

from mindvlog.errors import InvalidConfig, NonFiniteGradient
from mindvlog.features.masking import mask_positions
from mindvlog.fusion.gradcheck import gradient_check

from conftest import tiny_model, toy_inputs

TOL = 1e-4


def bce_fn(model, inputs):
    return model.bce_step(inputs, 1.0)


def recon_fn(model, inputs):
    masks = {
        "text": mask_positions(5, 0.4, seed=1, modality="text"),
        "video": mask_positions(4, 0.5, seed=2, modality="video"),
    }
    return model.reconstruction_step(inputs, masks)


def contrastive_fn(model, batch):
    return model.contrastive_step(batch["audio"], batch["video"])


def test_bce_gradients_match_central_difference():
    rel = gradient_check(tiny_model(), bce_fn, toy_inputs(), samples_per_tensor=3)
    assert rel < TOL, rel


def test_reconstruction_gradients_match_central_difference():
    rel = gradient_check(tiny_model(), recon_fn, toy_inputs(), samples_per_tensor=3)
    assert rel < TOL, rel


def test_contrastive_gradients_match_central_difference():
    model = tiny_model()
    rng = np.random.default_rng(0)
    batch = {
        "audio": [rng.standard_normal((3, model.cfg.audio_dim)) for _ in range(3)],
        "video": [rng.standard_normal((4, model.cfg.video_dim)) for _ in range(3)],
    }
    rel = gradient_check(model, contrastive_fn, batch, samples_per_tensor=3)
    assert rel < TOL, rel


def test_eps_outside_stable_range_rejected():
    for eps in (1e-7, 1e-2):
        with pytest.raises(InvalidConfig):
            gradient_check(tiny_model(), bce_fn, toy_inputs(), eps=eps)


def test_nonfinite_gradient_detected():
    model = tiny_model()

    def poisoned(m, inputs):
        loss, grads = m.bce_step(inputs, 1.0)
        name = sorted(grads)[0]
        grads[name] = np.full_like(grads[name], np.nan)
        return loss, grads

    with pytest.raises(NonFiniteGradient):
        gradient_check(model, poisoned, toy_inputs())


def test_nonfinite_loss_detected():
    def bad_loss(m, inputs):
        return float("nan"), {}

    with pytest.raises(NonFiniteGradient):
        gradient_check(tiny_model(), bad_loss, toy_inputs())


def test_gradcheck_deterministic():
    a = gradient_check(tiny_model(), bce_fn, toy_inputs(), seed=3)
    b = gradient_check(tiny_model(), bce_fn, toy_inputs(), seed=3)
    assert a == b


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
