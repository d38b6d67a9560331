"""Training loop, evaluation and the modality-ablation harness.

Training is plain full-batch-loop SGD territory: per-sample forward and
backward passes accumulate gradients (no padding, no batch axis), Adam
applies the averaged step, and the best-validation-F1 epoch wins the
checkpoint.  Everything is float64 and deterministic for a fixed seed.

Ablation variants cover single modalities, pairwise fusions, the full
trimodal model, and three enhancements: masked-text and masked-frame
reconstruction as auxiliary objectives, and the fused clip-vector audio
mode.  Rows are labeled the way the result tables print them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DivergedLoss,
    EmptySet,
    InvalidConfig,
    MissingFeatures,
    UnknownVariant,
)
from .features.masking import mask_count, mask_positions
from .features.store import model_inputs
from .fusion.model import FusionConfig, FusionModel, decision, sigmoid_prob
from .metrics import MetricsReport, prf1

log = logging.getLogger(__name__)

LABEL_TO_INT = {"depression": 1, "non_depression": 0}


@dataclass
class TrainingSample:
    sample_id: str
    inputs: dict          # modality -> [L, d] array
    label: int            # 1 = depression


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 20
    seeds: tuple = (0, 1, 2, 3)
    threshold: float = 0.5
    early_stopping: bool = False
    patience: int = 10
    aux_weight: float = 0.5
    text_mask_rate: float = 0.15
    frame_mask_rate: float = 0.25
    checkpoint_dir: str = "checkpoints"
    wa_mode: str = "balanced"  # or "support"

    def validate(self):
        if self.learning_rate < 0:
            raise InvalidConfig("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if not self.seeds:
            raise InvalidConfig("need at least one seed")
        if self.wa_mode not in ("balanced", "support"):
            raise InvalidConfig(f"unknown wa_mode '{self.wa_mode}'")
        return self

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seeds": list(self.seeds),
            "threshold": self.threshold,
            "early_stopping": self.early_stopping,
            "patience": self.patience,
            "aux_weight": self.aux_weight,
            "text_mask_rate": self.text_mask_rate,
            "frame_mask_rate": self.frame_mask_rate,
            "checkpoint_dir": self.checkpoint_dir,
            "wa_mode": self.wa_mode,
        }


@dataclass
class RunRecord:
    config: dict
    seed: int
    train_losses: list = field(default_factory=list)
    valid_losses: list = field(default_factory=list)
    valid_f1s: list = field(default_factory=list)
    best_epoch: int = -1
    checkpoint_path: Optional[str] = None
    metrics: Optional[dict] = None  # filled once the test pass completes


class Adam:
    """Adaptive-moment optimizer, float64 throughout."""

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m, self.v = {}, {}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * (g * g)
            mhat = self.m[name] / bc1
            vhat = self.v[name] / bc2
            params[name] = params[name] - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def load_training_set(samples, features_dir, modalities=("video", "audio", "text"),
                      audio_mode="spect"):
    """Materialize TrainingSamples from the feature store.

    Raises MissingFeatures for any sample without its feature files.
    """
    out = []
    for s in samples:
        inputs = model_inputs(features_dir, s.sample_id, modalities, audio_mode)
        out.append(
            TrainingSample(
                sample_id=s.sample_id,
                inputs=inputs,
                label=LABEL_TO_INT[s.label],
            )
        )
    return out


def _sample_loss_and_grads(model, sample, cfg, epoch, index, variant=None):
    loss, grads = model.bce_step(sample.inputs, float(sample.label))
    if variant is not None and (variant.text_mask or variant.frame_mask):
        masks = {}
        mask_seed = (epoch + 1) * 100003 + index
        if variant.text_mask and "text" in sample.inputs:
            n = sample.inputs["text"].shape[0]
            if mask_count(n, cfg.text_mask_rate) > 0:
                masks["text"] = mask_positions(n, cfg.text_mask_rate, mask_seed, "text")
        if variant.frame_mask and "video" in sample.inputs:
            n = sample.inputs["video"].shape[0]
            if mask_count(n, cfg.frame_mask_rate) > 0:
                masks["video"] = mask_positions(n, cfg.frame_mask_rate, mask_seed + 1, "video")
        if masks:
            aux_loss, aux_grads = model.reconstruction_step(sample.inputs, masks)
            loss += cfg.aux_weight * aux_loss
            for name, g in aux_grads.items():
                if name in grads:
                    grads[name] = grads[name] + cfg.aux_weight * g
                else:
                    grads[name] = cfg.aux_weight * g
    return loss, grads


def evaluate(model, test_set, threshold=0.5, wa_mode="balanced"):
    """Test metrics (positive-class P/R/F1, weighted accuracy, confusion)."""
    if not test_set:
        raise EmptySet("empty evaluation set")
    preds, gold = [], []
    for sample in test_set:
        p = model.predict_proba(sample.inputs)
        preds.append(int(decision(p, threshold)))
        gold.append(int(sample.label))
    report = prf1(preds, gold, averaging="binary", positive_label=1)
    if wa_mode == "support":
        report.weighted_accuracy = float(np.trace(report.confusion) / len(gold))
    return report


def train(model, train_set, valid_set, cfg: TrainConfig, seed=0, run_name="run",
          variant=None):
    """Fit the classifier head (and everything under it) with BCE.

    Selects the best-validation-F1 epoch, saves that checkpoint, and
    records the loss history.  Deterministic for fixed seed/config/data.
    """
    cfg.validate()
    if not train_set:
        raise EmptySet("empty training set")
    record = RunRecord(config=cfg.to_dict(), seed=seed)
    rng = np.random.default_rng(seed)
    model._rng = np.random.default_rng(seed)  # dropout stream, if any
    opt = Adam(lr=cfg.learning_rate)
    ckpt_dir = Path(cfg.checkpoint_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = ckpt_dir / f"{run_name}_seed{seed}.mvck"

    best_f1 = -1.0
    best_epoch = -1
    since_best = 0
    model.training = True
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_set))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            acc = {}
            batch_loss = 0.0
            for j, i in enumerate(batch):
                loss, grads = _sample_loss_and_grads(
                    model, train_set[i], cfg, epoch, int(i), variant
                )
                batch_loss += loss
                for name, g in grads.items():
                    if name in acc:
                        acc[name] = acc[name] + g
                    else:
                        acc[name] = g
            batch_loss /= len(batch)
            if not np.isfinite(batch_loss):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}")
            for name in acc:
                acc[name] = acc[name] / len(batch)
            opt.step(model.params, acc)
            epoch_losses.append(batch_loss)
        record.train_losses.append(float(np.mean(epoch_losses)))

        model.training = False
        if valid_set:
            v_losses = [
                -np.log(max(1e-7, _prob_for_label(model, s)))
                for s in valid_set
            ]
            record.valid_losses.append(float(np.mean(v_losses)))
            v_report = evaluate(model, valid_set, cfg.threshold, cfg.wa_mode)
            v_f1 = v_report.f1
        else:
            record.valid_losses.append(record.train_losses[-1])
            v_f1 = -np.inf
        record.valid_f1s.append(float(v_f1) if np.isfinite(v_f1) else 0.0)

        improved = v_f1 > best_f1 or best_epoch < 0
        if improved:
            best_f1 = v_f1
            best_epoch = epoch
            since_best = 0
            model.save(ckpt_path, step=epoch)
        else:
            since_best += 1
        model.training = True
        if cfg.early_stopping and since_best >= cfg.patience:
            log.info("early stop at epoch %d (best %d)", epoch, best_epoch)
            break

    model.training = False
    record.best_epoch = best_epoch
    record.checkpoint_path = str(ckpt_path)
    return record


def _prob_for_label(model, sample):
    """Likelihood the model assigns to the sample's true label."""
    p = model.predict_proba(sample.inputs)
    return p if sample.label == 1 else 1.0 - p


def infer_model_config(dataset, **overrides):
    """FusionConfig with modality dims read off the first sample."""
    first = dataset[0].inputs
    kwargs = dict(overrides)
    if "audio" in first:
        kwargs["audio_dim"] = first["audio"].shape[1]
    if "video" in first:
        kwargs["video_dim"] = first["video"].shape[1]
    if "text" in first:
        kwargs["text_dim"] = first["text"].shape[1]
    return FusionConfig(**kwargs)


# ---------------------------------------------------------------------------
# ablation harness

@dataclass(frozen=True)
class VariantSpec:
    key: str
    label: str
    modalities: tuple
    audio_mode: str = "spect"
    text_mask: bool = False
    frame_mask: bool = False


VARIANTS = {
    "T": VariantSpec("T", "T", ("text",)),
    "A": VariantSpec("A", "A", ("audio",)),
    "V": VariantSpec("V", "V", ("video",)),
    "V+A": VariantSpec("V+A", "V + A", ("video", "audio")),
    "V+T": VariantSpec("V+T", "V + T", ("video", "text")),
    "A+T": VariantSpec("A+T", "A + T", ("audio", "text")),
    "V+A+T": VariantSpec("V+A+T", "V + A + T", ("video", "audio", "text")),
    "+TextMask": VariantSpec(
        "+TextMask", "V + A + T(Mask)", ("video", "audio", "text"), text_mask=True
    ),
    "+FrameMask": VariantSpec(
        "+FrameMask", "V(Mask) + A + T", ("video", "audio", "text"), frame_mask=True
    ),
    "+W2V2Spect": VariantSpec(
        "+W2V2Spect", "V + A(W2V2+Spect) + T", ("video", "audio", "text"),
        audio_mode="w2v2_spect",
    ),
}

TABLE5_VARIANTS = ("T", "A", "V", "V+A", "V+T", "A+T", "V+A+T")
TABLE6_VARIANTS = ("V+A+T", "+TextMask", "+W2V2Spect", "+FrameMask")


def resolve_variant(key):
    if key not in VARIANTS:
        raise UnknownVariant(
            f"unknown variant '{key}'; choose from {sorted(VARIANTS)}"
        )
    return VARIANTS[key]


@dataclass
class AblationRow:
    label: str
    precision: float
    recall: float
    f1: float
    per_seed: list = field(default_factory=list)

    def to_dict(self):
        return {
            "label": self.label,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_seed": list(self.per_seed),
        }


def run_ablation(variant_keys, cfg: TrainConfig, dataset_fn, model_cfg_fn=None,
                 run_name="ablation"):
    """Train/evaluate every variant over all seeds; one averaged row each.

    ``dataset_fn(variant)`` must return (train, valid, test) lists of
    TrainingSample built for that variant's modalities and audio mode.
    ``model_cfg_fn(variant, dataset)`` may override model configuration.
    """
    cfg.validate()
    rows = []
    for key in variant_keys:
        variant = resolve_variant(key)
        train_set, valid_set, test_set = dataset_fn(variant)
        per_seed = []
        for seed in cfg.seeds:
            if model_cfg_fn is not None:
                model_cfg = model_cfg_fn(variant, train_set)
            else:
                model_cfg = infer_model_config(train_set, seed=seed)
            model_cfg.seed = seed
            model = FusionModel(model_cfg)
            train(model, train_set, valid_set, cfg, seed=seed,
                  run_name=f"{run_name}_{variant.key}", variant=variant)
            best = FusionModel.load(
                Path(cfg.checkpoint_dir) / f"{run_name}_{variant.key}_seed{seed}.mvck"
            )
            report = evaluate(best, test_set, cfg.threshold, cfg.wa_mode)
            per_seed.append(
                {"seed": seed, "precision": report.precision,
                 "recall": report.recall, "f1": report.f1,
                 "weighted_accuracy": report.weighted_accuracy}
            )
        rows.append(
            AblationRow(
                label=variant.label,
                precision=float(np.mean([r["precision"] for r in per_seed])),
                recall=float(np.mean([r["recall"] for r in per_seed])),
                f1=float(np.mean([r["f1"] for r in per_seed])),
                per_seed=per_seed,
            )
        )
    return rows


def format_ablation_table(rows, title="Modality"):
    """Aligned text table: one row per variant, P/R/F1 columns."""
    header = (title, "Precision", "Recall", "F1-Score")
    width = max([len(header[0])] + [len(r.label) for r in rows]) + 2
    lines = [f"{header[0]:<{width}}{header[1]:>11}{header[2]:>9}{header[3]:>10}"]
    for r in rows:
        lines.append(
            f"{r.label:<{width}}{r.precision:>11.4f}{r.recall:>9.4f}{r.f1:>10.4f}"
        )
    return "\n".join(lines)
