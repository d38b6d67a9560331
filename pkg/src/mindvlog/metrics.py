"""Classification and generation metrics.

Classification: per-class precision/recall/F1 with binary, weighted
(gold-support) and macro averaging, plus weighted accuracy defined as
balanced accuracy (mean of per-class recall over classes present in the
gold labels).  A class absent from gold has F1 = 0 and zero weight.

Generation: BLEU-4 (geometric mean of 1..4-gram modified precisions
over the orders the candidate actually has, times the brevity penalty;
add-epsilon smoothing, eps=1e-9, when a used order has zero matches),
ROUGE-L (LCS-based F with beta=1), and a token-embedding similarity
(greedy maximal cosine matching in both directions, F-combined,
negative cosines clamped to 0 so orthogonal vocabularies score 0).

Generation metrics tokenize strings with the shared package tokenizer
(lowercase, word/punctuation split); pre-tokenized lists are accepted
as-is.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ClientUnavailable, EmptyCandidate, EmptyInput, LengthMismatch
from .textproc import tokenize

BLEU_EPS = 1e-9

# Conventional positive labels tried, in order, when binary averaging is
# requested without an explicit positive_label.
_POSITIVE_PREFERENCE = (1, True, "1", "yes", "depression", "positive", "true")


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    f1_weighted: float
    weighted_accuracy: float
    confusion: np.ndarray
    labels: list
    per_class: dict = field(default_factory=dict)  # label -> (P, R, F1, support)

    def to_dict(self):
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "f1_weighted": self.f1_weighted,
            "weighted_accuracy": self.weighted_accuracy,
            "labels": [str(l) for l in self.labels],
            "confusion": self.confusion.tolist(),
            "per_class": {
                str(k): {"precision": p, "recall": r, "f1": f, "support": s}
                for k, (p, r, f, s) in self.per_class.items()
            },
        }


@dataclass
class GenScores:
    bleu4: float
    rouge_l: float
    semantic_similarity: float


def _safe_div(num, den):
    return num / den if den else 0.0


def _pick_positive(labels):
    for cand in _POSITIVE_PREFERENCE:
        if cand in labels:
            return cand
    return sorted(labels, key=str)[-1]


def prf1(preds, gold, averaging="weighted", positive_label=None):
    """Precision/recall/F1 report under the requested averaging.

    Raises:
        LengthMismatch: preds and gold differ in length.
        EmptyInput: no items at all.
    """
    preds, gold = list(preds), list(gold)
    if len(preds) != len(gold):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise EmptyInput("cannot score an empty label list")
    if averaging not in ("binary", "weighted", "macro"):
        raise ValueError(f"unknown averaging '{averaging}'")

    labels = sorted(set(gold) | set(preds), key=str)
    index = {lab: i for i, lab in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, preds):
        confusion[index[g], index[p]] += 1

    per_class = {}
    for lab in labels:
        i = index[lab]
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i, :].sum() - tp
        p = _safe_div(tp, tp + fp)
        r = _safe_div(tp, tp + fn)
        f = _safe_div(2 * p * r, p + r)
        per_class[lab] = (float(p), float(r), float(f), int(tp + fn))

    n = len(gold)
    f1_weighted = sum(s / n * f for (_p, _r, f, s) in per_class.values())
    gold_present = [lab for lab in labels if per_class[lab][3] > 0]
    weighted_accuracy = float(
        np.mean([per_class[lab][1] for lab in gold_present])
    )

    if averaging == "binary":
        if len(labels) > 2:
            raise ValueError(f"binary averaging needs at most 2 labels, got {labels}")
        pos = positive_label if positive_label is not None else _pick_positive(labels)
        if pos not in per_class:
            per_class[pos] = (0.0, 0.0, 0.0, 0)
        precision, recall, f1_val, _ = per_class[pos]
    elif averaging == "weighted":
        precision = sum(s / n * p for (p, _r, _f, s) in per_class.values())
        recall = sum(s / n * r for (_p, r, _f, s) in per_class.values())
        f1_val = f1_weighted
    else:  # macro over the union of observed labels
        precision = float(np.mean([v[0] for v in per_class.values()]))
        recall = float(np.mean([v[1] for v in per_class.values()]))
        f1_val = float(np.mean([v[2] for v in per_class.values()]))

    return MetricsReport(
        precision=float(precision),
        recall=float(recall),
        f1=float(f1_val),
        f1_weighted=float(f1_weighted),
        weighted_accuracy=weighted_accuracy,
        confusion=confusion,
        labels=labels,
        per_class=per_class,
    )


def _tokens(text_or_tokens):
    if isinstance(text_or_tokens, str):
        return tokenize(text_or_tokens)
    return list(text_or_tokens)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate, references):
    """Sentence BLEU with n-gram orders 1..4.

    Orders longer than the candidate are skipped; a used order with zero
    clipped matches contributes eps/denominator.  Brevity penalty uses
    the reference length closest to the candidate (ties to the shorter).

    Raises EmptyCandidate when the candidate has no tokens.
    """
    cand = _tokens(candidate)
    if not cand:
        raise EmptyCandidate("candidate has no tokens")
    refs = [_tokens(r) for r in references]
    refs = [r for r in refs if r]
    if not refs:
        raise EmptyInput("need at least one non-empty reference")

    log_sum, used = 0.0, 0
    for n in range(1, 5):
        cand_grams = _ngrams(cand, n)
        total = sum(cand_grams.values())
        if total == 0:
            continue  # candidate too short for this order
        max_ref = Counter()
        for r in refs:
            for gram, count in _ngrams(r, n).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        clipped = sum(min(c, max_ref[g]) for g, c in cand_grams.items())
        p = clipped / total if clipped else BLEU_EPS / total
        log_sum += np.log(p)
        used += 1

    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda L: (abs(L - c), L))
    bp = 1.0 if c > r else float(np.exp(1.0 - r / c))
    return float(bp * np.exp(log_sum / used))


def rouge_l(candidate, reference):
    """LCS-based F-measure (beta = 1)."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand or not ref:
        raise EmptyInput("rouge_l needs non-empty candidate and reference")
    vocab = {}
    ids_c = np.array([vocab.setdefault(t, len(vocab)) for t in cand], dtype=np.int64)
    ids_r = np.array([vocab.setdefault(t, len(vocab)) for t in ref], dtype=np.int64)
    lcs = kernels.lcs_length(ids_c, ids_r)
    p = lcs / len(cand)
    r = lcs / len(ref)
    return float(_safe_div(2 * p * r, p + r))


def semantic_similarity(candidate, reference, embedder):
    """Greedy token-matching similarity in [0, 1], exactly symmetric.

    Each candidate token greedily matches its best-cosine reference
    token and vice versa; the two directional means are F-combined.
    Negative cosines clamp to 0, so disjoint orthogonal vocabularies
    score 0.  Two empty inputs score 1, one empty scores 0.
    """
    if embedder is None:
        raise ClientUnavailable("no embedding client configured")
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    emb_c = np.asarray(embedder.encode_tokens(cand), dtype=np.float64)
    emb_r = np.asarray(embedder.encode_tokens(ref), dtype=np.float64)
    scores = np.clip(kernels.cosine_scores(emb_c, emb_r), 0.0, None)
    p = float(scores.max(axis=1).mean())
    r = float(scores.max(axis=0).mean())
    return float(_safe_div(2 * p * r, p + r))


def generation_scores(candidate, reference, embedder):
    """All three generation metrics for one candidate/reference pair."""
    return GenScores(
        bleu4=bleu4(candidate, [reference]),
        rouge_l=rouge_l(candidate, reference),
        semantic_similarity=semantic_similarity(candidate, reference, embedder),
    )
