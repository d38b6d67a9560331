"""Multimodal fusion transformer with manual backprop.

Audio, video and text sequences are linearly projected to a shared
width, tagged with a learned modality-type embedding plus sinusoidal
positions (restarting at each modality span), concatenated in the fixed
order audio | video | text, and encoded by a pre-LN transformer stack.
The fused sequence is mean-pooled (or first-token pooled) for a sigmoid
classification head.

Pretraining objectives at toy scale:

* masked reconstruction: the encoder sees masked (zeroed) inputs, the
  decoder consumes the encoder output with masked rows replaced by a
  learned query plus the row's position code, and per-modality linear
  heads reconstruct the original rows; the loss covers masked rows only.
* audio-video alignment: each modality is encoded alone, pooled, and
  matched against its in-batch partner with a symmetric cross-entropy
  over cosine logits.

Every training path returns (loss, grads) with gradients accumulated in
a flat {parameter name: array} dict, which keeps batching (an outer
loop), optimizers and gradient checking trivially composable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..errors import (
    BatchMismatch,
    CorruptCheckpoint,
    DimensionMismatch,
    EmptyInput,
    EmptyMask,
    InvalidConfig,
    LengthOverflow,
)
from ..tensorio import read_checkpoint, write_checkpoint
from . import layers
from .layers import (
    attention_backward,
    attention_forward,
    dropout_backward,
    dropout_forward,
    gelu_backward,
    gelu_forward,
    layernorm_backward,
    layernorm_forward,
    linear_backward,
    linear_forward,
    sinusoid_positions,
)

MODALITIES = ("audio", "video", "text")
PROB_EPS = 1e-12  # keeps classify output strictly inside (0, 1)

_ATTN_KEYS = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")


@dataclass
class FusionConfig:
    encoder_layers: int = 2
    decoder_layers: int = 2
    model_dim: int = 64
    heads: int = 4
    ff_dim: int = 128
    dropout: float = 0.0
    max_audio_len: int = 512
    max_video_len: int = 4096
    max_text_len: int = 1024
    audio_dim: int = 64
    video_dim: int = 768
    text_dim: int = 768
    pooling: str = "mean"  # "mean" or "first"
    temperature: float = 1.0
    seed: int = 0

    def validate(self):
        if self.heads < 1:
            raise InvalidConfig(f"heads must be >= 1, got {self.heads}")
        if self.model_dim % self.heads != 0:
            raise InvalidConfig(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )
        if self.encoder_layers < 1 or self.decoder_layers < 1:
            raise InvalidConfig("encoder_layers and decoder_layers must be >= 1")
        if min(self.audio_dim, self.video_dim, self.text_dim, self.ff_dim) <= 0:
            raise InvalidConfig("all dimensions must be positive")
        if self.pooling not in ("mean", "first"):
            raise InvalidConfig(f"unknown pooling '{self.pooling}'")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidConfig(f"dropout must be in [0, 1), got {self.dropout}")
        if self.temperature <= 0:
            raise InvalidConfig("temperature must be positive")
        return self

    def modality_dim(self, modality):
        return {"audio": self.audio_dim, "video": self.video_dim, "text": self.text_dim}[
            modality
        ]

    def max_len(self, modality):
        return {
            "audio": self.max_audio_len,
            "video": self.max_video_len,
            "text": self.max_text_len,
        }[modality]

    def to_dict(self):
        return {
            "encoder_layers": self.encoder_layers,
            "decoder_layers": self.decoder_layers,
            "model_dim": self.model_dim,
            "heads": self.heads,
            "ff_dim": self.ff_dim,
            "dropout": self.dropout,
            "max_audio_len": self.max_audio_len,
            "max_video_len": self.max_video_len,
            "max_text_len": self.max_text_len,
            "audio_dim": self.audio_dim,
            "video_dim": self.video_dim,
            "text_dim": self.text_dim,
            "pooling": self.pooling,
            "temperature": self.temperature,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d).validate()


@dataclass
class FusedRepresentation:
    """Encoder output: full sequence, pooled vector, span per modality."""

    sequence: np.ndarray
    pooled: np.ndarray
    modality_spans: Dict[str, Tuple[int, int]] = field(default_factory=dict)


class FusionModel:
    def __init__(self, cfg: FusionConfig | None = None):
        self.cfg = (cfg or FusionConfig()).validate()
        self.training = False
        self._rng = np.random.default_rng(self.cfg.seed)
        self.params = self._init_params()

    # ------------------------------------------------------------------
    # parameters

    def _init_params(self):
        cfg = self.cfg
        rng = np.random.default_rng(cfg.seed)
        d = cfg.model_dim
        p = {}

        def lin(name, fan_in, fan_out):
            p[f"{name}.w"] = rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)
            p[f"{name}.b"] = np.zeros(fan_out)

        for mod in MODALITIES:
            lin(f"proj.{mod}", cfg.modality_dim(mod), d)
            p[f"type.{mod}"] = 0.02 * rng.standard_normal(d)
        for stack, n_layers in (("enc", cfg.encoder_layers), ("dec", cfg.decoder_layers)):
            for i in range(n_layers):
                pre = f"{stack}.{i}"
                p[f"{pre}.ln1.g"] = np.ones(d)
                p[f"{pre}.ln1.b"] = np.zeros(d)
                for k in ("wq", "wk", "wv", "wo"):
                    p[f"{pre}.attn.{k}"] = rng.standard_normal((d, d)) / np.sqrt(d)
                for k in ("bq", "bk", "bv", "bo"):
                    p[f"{pre}.attn.{k}"] = np.zeros(d)
                p[f"{pre}.ln2.g"] = np.ones(d)
                p[f"{pre}.ln2.b"] = np.zeros(d)
                lin(f"{pre}.ff.fc1", d, cfg.ff_dim)
                lin(f"{pre}.ff.fc2", cfg.ff_dim, d)
            p[f"{stack}.norm.g"] = np.ones(d)
            p[f"{stack}.norm.b"] = np.zeros(d)
        p["mask_query"] = 0.02 * rng.standard_normal(d)
        for mod in MODALITIES:
            lin(f"recon.{mod}", d, cfg.modality_dim(mod))
        hidden = max(d // 2, 4)
        lin("head.fc1", d, hidden)
        lin("head.fc2", hidden, 1)
        return p

    def parameter_names(self):
        return sorted(self.params)

    def num_parameters(self):
        return int(sum(v.size for v in self.params.values()))

    def zero_grads(self):
        return {}

    @staticmethod
    def _acc(grads, name, g):
        if name in grads:
            grads[name] = grads[name] + g
        else:
            grads[name] = g

    # ------------------------------------------------------------------
    # embedding assembly

    def _assemble(self, inputs):
        """Project, tag and concatenate the present modalities.

        ``inputs`` maps modality name to a [L_m, d_m] array (missing or
        empty entries contribute an empty span).
        """
        cfg = self.cfg
        parts, spans, caches = [], {}, []
        offset = 0
        for mod in MODALITIES:
            seq = inputs.get(mod)
            length = 0 if seq is None else int(np.asarray(seq).shape[0])
            if length == 0:
                spans[mod] = (offset, offset)
                caches.append((mod, 0, None))
                continue
            seq = np.asarray(seq, dtype=np.float64)
            if seq.ndim != 2 or seq.shape[1] != cfg.modality_dim(mod):
                raise DimensionMismatch(
                    f"{mod} sequence has shape {seq.shape}, expected "
                    f"[*, {cfg.modality_dim(mod)}]"
                )
            if length > cfg.max_len(mod):
                raise LengthOverflow(
                    f"{mod} length {length} exceeds max {cfg.max_len(mod)}"
                )
            proj, c_lin = linear_forward(seq, self.params[f"proj.{mod}.w"],
                                         self.params[f"proj.{mod}.b"])
            x = proj + self.params[f"type.{mod}"] + sinusoid_positions(length, cfg.model_dim)
            parts.append(x)
            spans[mod] = (offset, offset + length)
            caches.append((mod, length, c_lin))
            offset += length
        if offset == 0:
            raise EmptyInput("all modality sequences are empty")
        return np.concatenate(parts, axis=0), spans, caches

    def _assemble_backward(self, caches, spans, dx, grads):
        for mod, length, c_lin in caches:
            if length == 0:
                continue
            lo, hi = spans[mod]
            dpart = dx[lo:hi]
            self._acc(grads, f"type.{mod}", dpart.sum(axis=0))
            _, dw, db = linear_backward(c_lin, dpart)
            self._acc(grads, f"proj.{mod}.w", dw)
            self._acc(grads, f"proj.{mod}.b", db)

    # ------------------------------------------------------------------
    # transformer stacks

    def _attn_params(self, prefix):
        return {k: self.params[f"{prefix}.attn.{k}"] for k in _ATTN_KEYS}

    def _block_forward(self, x, prefix):
        p = self.params
        drop = self.cfg.dropout
        ln1, c_ln1 = layernorm_forward(x, p[f"{prefix}.ln1.g"], p[f"{prefix}.ln1.b"])
        att, c_att = attention_forward(ln1, self._attn_params(prefix), self.cfg.heads)
        att, c_d1 = dropout_forward(att, drop, self._rng, self.training)
        h1 = x + att
        ln2, c_ln2 = layernorm_forward(h1, p[f"{prefix}.ln2.g"], p[f"{prefix}.ln2.b"])
        f1, c_f1 = linear_forward(ln2, p[f"{prefix}.ff.fc1.w"], p[f"{prefix}.ff.fc1.b"])
        g, c_g = gelu_forward(f1)
        f2, c_f2 = linear_forward(g, p[f"{prefix}.ff.fc2.w"], p[f"{prefix}.ff.fc2.b"])
        f2, c_d2 = dropout_forward(f2, drop, self._rng, self.training)
        return h1 + f2, (c_ln1, c_att, c_d1, c_ln2, c_f1, c_g, c_f2, c_d2)

    def _block_backward(self, cache, dy, prefix, grads):
        c_ln1, c_att, c_d1, c_ln2, c_f1, c_g, c_f2, c_d2 = cache
        dff = dropout_backward(c_d2, dy)
        dg, dw2, db2 = linear_backward(c_f2, dff)
        self._acc(grads, f"{prefix}.ff.fc2.w", dw2)
        self._acc(grads, f"{prefix}.ff.fc2.b", db2)
        df1 = gelu_backward(c_g, dg)
        dln2, dw1, db1 = linear_backward(c_f1, df1)
        self._acc(grads, f"{prefix}.ff.fc1.w", dw1)
        self._acc(grads, f"{prefix}.ff.fc1.b", db1)
        dh1, dg2, db2n = layernorm_backward(c_ln2, dln2)
        self._acc(grads, f"{prefix}.ln2.g", dg2)
        self._acc(grads, f"{prefix}.ln2.b", db2n)
        dh1 = dh1 + dy
        datt = dropout_backward(c_d1, dh1)
        dln1, attn_grads = attention_backward(c_att, datt)
        for k, v in attn_grads.items():
            self._acc(grads, f"{prefix}.attn.{k}", v)
        dx, dg1, db1n = layernorm_backward(c_ln1, dln1)
        self._acc(grads, f"{prefix}.ln1.g", dg1)
        self._acc(grads, f"{prefix}.ln1.b", db1n)
        return dx + dh1

    def _stack_forward(self, x, stack, n_layers):
        caches = []
        for i in range(n_layers):
            x, c = self._block_forward(x, f"{stack}.{i}")
            caches.append(c)
        y, c_norm = layernorm_forward(
            x, self.params[f"{stack}.norm.g"], self.params[f"{stack}.norm.b"]
        )
        return y, (caches, c_norm)

    def _stack_backward(self, cache, dy, stack, grads):
        caches, c_norm = cache
        dx, dg, db = layernorm_backward(c_norm, dy)
        self._acc(grads, f"{stack}.norm.g", dg)
        self._acc(grads, f"{stack}.norm.b", db)
        for i in reversed(range(len(caches))):
            dx = self._block_backward(caches[i], dx, f"{stack}.{i}", grads)
        return dx

    def _encode_cached(self, inputs):
        x, spans, a_cache = self._assemble(inputs)
        y, s_cache = self._stack_forward(x, "enc", self.cfg.encoder_layers)
        return y, spans, (a_cache, spans, s_cache)

    def _encode_backward(self, cache, dy, grads):
        a_cache, spans, s_cache = cache
        dx = self._stack_backward(s_cache, dy, "enc", grads)
        self._assemble_backward(a_cache, spans, dx, grads)

    # ------------------------------------------------------------------
    # pooling + public encode/classify

    def _pool(self, seq):
        if self.cfg.pooling == "first":
            return seq[0]
        return seq.mean(axis=0)

    def _pool_backward(self, dpooled, length):
        d = self.cfg.model_dim
        dseq = np.zeros((length, d))
        if self.cfg.pooling == "first":
            dseq[0] = dpooled
        else:
            dseq[:] = dpooled / length
        return dseq

    def encode(self, audio_seq=None, video_seq=None, text_seq=None):
        """Fuse up to three modality sequences; see FusedRepresentation."""
        seq, spans, _ = self._encode_cached(
            {"audio": audio_seq, "video": video_seq, "text": text_seq}
        )
        return FusedRepresentation(sequence=seq, pooled=self._pool(seq), modality_spans=spans)

    def head_params(self):
        return {k: self.params[k] for k in ("head.fc1.w", "head.fc1.b", "head.fc2.w", "head.fc2.b")}

    def _head_forward(self, pooled):
        x = pooled[None, :]
        z1, c1 = linear_forward(x, self.params["head.fc1.w"], self.params["head.fc1.b"])
        a1, cg = gelu_forward(z1)
        z2, c2 = linear_forward(a1, self.params["head.fc2.w"], self.params["head.fc2.b"])
        return float(z2[0, 0]), (c1, cg, c2)

    def _head_backward(self, cache, dlogit, grads):
        c1, cg, c2 = cache
        dz2 = np.array([[dlogit]])
        da1, dw2, db2 = linear_backward(c2, dz2)
        self._acc(grads, "head.fc2.w", dw2)
        self._acc(grads, "head.fc2.b", db2)
        dz1 = gelu_backward(cg, da1)
        dx, dw1, db1 = linear_backward(c1, dz1)
        self._acc(grads, "head.fc1.w", dw1)
        self._acc(grads, "head.fc1.b", db1)
        return dx[0]

    def forward_logit(self, inputs):
        """Full classification forward; returns (logit, cache)."""
        seq, spans, e_cache = self._encode_cached(inputs)
        pooled = self._pool(seq)
        logit, h_cache = self._head_forward(pooled)
        return logit, (e_cache, h_cache, seq.shape[0])

    def backward_from_dlogit(self, cache, dlogit, grads=None):
        grads = {} if grads is None else grads
        e_cache, h_cache, length = cache
        dpooled = self._head_backward(h_cache, dlogit, grads)
        dseq = self._pool_backward(dpooled, length)
        self._encode_backward(e_cache, dseq, grads)
        return grads

    def predict_proba(self, inputs):
        logit, _ = self.forward_logit(inputs)
        return sigmoid_prob(logit)

    # ------------------------------------------------------------------
    # training paths (loss, grads)

    def bce_step(self, inputs, label):
        """BCE on one sample; gradient taken through the unclamped sigmoid."""
        logit, cache = self.forward_logit(inputs)
        if logit >= 0:
            p = 1.0 / (1.0 + np.exp(-logit))
        else:
            e = np.exp(logit)
            p = e / (1.0 + e)
        eps = 1e-7
        pc = min(max(p, eps), 1.0 - eps)
        loss = -(label * np.log(pc) + (1.0 - label) * np.log(1.0 - pc))
        grads = self.backward_from_dlogit(cache, p - label)
        return float(loss), grads

    def reconstruction_step(self, inputs, masks):
        """Masked reconstruction over the modalities named in ``masks``.

        ``masks`` maps modality -> MaskRecord over that modality's rows.
        The total loss is the mean of the per-modality masked MSEs.
        """
        if not masks:
            raise EmptyMask("no mask records given")
        for mod, rec in masks.items():
            if np.asarray(rec.positions).size == 0:
                raise EmptyMask(f"mask for {mod} has no positions")

        originals = {
            m: np.asarray(s, dtype=np.float64)
            for m, s in inputs.items()
            if s is not None and np.asarray(s).shape[0] > 0
        }
        masked_inputs = dict(originals)
        for mod, rec in masks.items():
            if mod not in originals:
                raise DimensionMismatch(f"mask given for absent modality '{mod}'")
            seq = originals[mod].copy()
            seq[np.asarray(rec.positions, dtype=np.int64)] = 0.0
            masked_inputs[mod] = seq

        enc_seq, spans, e_cache = self._encode_cached(masked_inputs)
        total_len, d = enc_seq.shape

        dec_in = enc_seq.copy()
        global_masked = {}
        for mod, rec in masks.items():
            lo, _hi = spans[mod]
            pos = np.asarray(rec.positions, dtype=np.int64)
            table = sinusoid_positions(originals[mod].shape[0], d)
            dec_in[lo + pos] = self.params["mask_query"] + table[pos]
            global_masked[mod] = lo + pos

        dec_out, d_cache = self._stack_forward(dec_in, "dec", self.cfg.decoder_layers)

        n_masked_mods = len(masks)
        loss = 0.0
        ddec_out = np.zeros_like(dec_out)
        recon_caches = {}
        for mod, rec in masks.items():
            lo, hi = spans[mod]
            span_out = dec_out[lo:hi]
            recon, c_lin = linear_forward(
                span_out, self.params[f"recon.{mod}.w"], self.params[f"recon.{mod}.b"]
            )
            pos = np.asarray(rec.positions, dtype=np.int64)
            diff = recon[pos] - originals[mod][pos]
            loss += float(np.mean(diff * diff)) / n_masked_mods
            dpred = np.zeros_like(recon)
            dpred[pos] = 2.0 * diff / (diff.size * n_masked_mods)
            recon_caches[mod] = (c_lin, dpred, lo, hi)

        grads = {}
        for mod, (c_lin, dpred, lo, hi) in recon_caches.items():
            dspan, dw, db = linear_backward(c_lin, dpred)
            self._acc(grads, f"recon.{mod}.w", dw)
            self._acc(grads, f"recon.{mod}.b", db)
            ddec_out[lo:hi] += dspan

        ddec_in = self._stack_backward(d_cache, ddec_out, "dec", grads)
        denc = ddec_in.copy()
        for mod, gidx in global_masked.items():
            self._acc(grads, "mask_query", ddec_in[gidx].sum(axis=0))
            denc[gidx] = 0.0
        self._encode_backward(e_cache, denc, grads)
        return loss, grads

    def modality_representation(self, seq, modality):
        """Encode one modality alone and pool it (alignment tower)."""
        fused = self.encode(**{f"{modality}_seq": seq})
        return fused.pooled

    def contrastive_step(self, audio_seqs, video_seqs):
        """Symmetric audio-video alignment loss over an in-batch pairing."""
        if len(audio_seqs) != len(video_seqs):
            raise BatchMismatch(
                f"{len(audio_seqs)} audio sequences vs {len(video_seqs)} video"
            )
        n = len(audio_seqs)
        if n == 0:
            raise EmptyInput("empty contrastive batch")
        tau = self.cfg.temperature

        pooled, caches, lengths = [], [], []
        for kind, seqs in (("audio", audio_seqs), ("video", video_seqs)):
            for seq in seqs:
                enc_seq, _spans, cache = self._encode_cached({kind: seq})
                pooled.append(self._pool(enc_seq))
                caches.append(cache)
                lengths.append(enc_seq.shape[0])
        a = np.stack(pooled[:n])
        v = np.stack(pooled[n:])

        a_norm = np.linalg.norm(a, axis=1, keepdims=True)
        v_norm = np.linalg.norm(v, axis=1, keepdims=True)
        an = a / np.maximum(a_norm, 1e-12)
        vn = v / np.maximum(v_norm, 1e-12)
        logits = an @ vn.T / tau

        p_row = _softmax(logits)
        p_col = _softmax(logits.T).T
        idx = np.arange(n)
        loss = -0.5 * (
            np.log(np.maximum(p_row[idx, idx], 1e-300)).mean()
            + np.log(np.maximum(p_col[idx, idx], 1e-300)).mean()
        )

        eye = np.eye(n)
        dlogits = 0.5 * ((p_row - eye) + (p_col - eye)) / n
        dan = dlogits @ vn / tau
        dvn = dlogits.T @ an / tau
        da = (dan - an * (dan * an).sum(axis=1, keepdims=True)) / np.maximum(a_norm, 1e-12)
        dv = (dvn - vn * (dvn * vn).sum(axis=1, keepdims=True)) / np.maximum(v_norm, 1e-12)

        grads = {}
        dpooled_all = np.concatenate([da, dv], axis=0)
        for i in range(2 * n):
            dseq = self._pool_backward(dpooled_all[i], lengths[i])
            self._encode_backward(caches[i], dseq, grads)
        return float(loss), grads

    # ------------------------------------------------------------------
    # persistence

    def save(self, path, step=0):
        write_checkpoint(path, self.params, self.cfg.to_dict(),
                         seed=self.cfg.seed, step=step)

    @classmethod
    def load(cls, path):
        tensors, header = read_checkpoint(path)
        try:
            cfg = FusionConfig.from_dict(header["config"])
        except (KeyError, TypeError, InvalidConfig) as exc:
            raise CorruptCheckpoint(f"bad config in checkpoint: {exc}") from exc
        model = cls(cfg)
        expected = set(model.params)
        if set(tensors) != expected:
            missing = sorted(expected - set(tensors))[:3]
            extra = sorted(set(tensors) - expected)[:3]
            raise CorruptCheckpoint(
                f"parameter names do not match (missing {missing}, extra {extra})"
            )
        for name, arr in tensors.items():
            if arr.shape != model.params[name].shape:
                raise CorruptCheckpoint(
                    f"tensor '{name}' has shape {arr.shape}, "
                    f"expected {model.params[name].shape}"
                )
            model.params[name] = arr.astype(np.float64)
        return model


def _softmax(x):
    return layers.softmax_last(x)


def sigmoid_prob(logit):
    """Sigmoid clamped to the open interval (0, 1)."""
    z = np.float64(logit)
    if z >= 0:
        p = 1.0 / (1.0 + np.exp(-z))
    else:
        # exp(z) cannot overflow for negative z
        e = np.exp(z)
        p = e / (1.0 + e)
    return float(np.clip(p, PROB_EPS, 1.0 - PROB_EPS))


def classify(fused: FusedRepresentation, head):
    """Probability of the positive class from a fused representation.

    ``head`` maps the four head parameter names to arrays (see
    FusionModel.head_params).
    """
    x = fused.pooled[None, :]
    if x.shape[1] != head["head.fc1.w"].shape[0]:
        raise DimensionMismatch(
            f"pooled dim {x.shape[1]} vs head input {head['head.fc1.w'].shape[0]}"
        )
    z1, _ = linear_forward(x, head["head.fc1.w"], head["head.fc1.b"])
    a1, _ = gelu_forward(z1)
    z2, _ = linear_forward(a1, head["head.fc2.w"], head["head.fc2.b"])
    return sigmoid_prob(float(z2[0, 0]))


def decision(probability, threshold=0.5):
    return bool(probability >= threshold)
