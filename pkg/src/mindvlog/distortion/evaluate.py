"""Scoring for distortion assessment (DA) and classification (DC).

DA is weighted F1 over the yes/no verdicts.  DC is weighted F1 over
the category labels, restricted to items whose gold verdict is yes.
Both go through metrics.prf1 so the averaging rules live in one place.
"""

from __future__ import annotations

from ..errors import LengthMismatch
from ..metrics import prf1
from .assess import DEFAULT_RETRIES, assess
from .types import VARIANTS

# Row-label suffix per variant, in presentation order.
VARIANT_SUFFIX = {
    "BASE": "",
    "FCOT": "+FCOT",
    "FCOT_ABC": "+FCOT+ABC",
    "FCOT_ABCD": "+FCOT+ABCD",
    "FCOT_ABCDR": "+FCOT+ABCDR",
}

TABLE_COLUMNS = ("Methods", "DA F1-W", "DC F1-W")


def _verdict_and_type(item):
    if isinstance(item, (tuple, list)):
        return str(item[0]).lower(), str(item[1])
    return item.verdict, item.distortion


def evaluate_distortion(assessments, gold):
    """Return {"da_f1w", "dc_f1w"} comparing predictions to gold pairs.

    gold: list of (verdict, type).  dc_f1w is None when gold has no
    yes items to restrict to.
    """
    if len(assessments) != len(gold):
        raise LengthMismatch(
            f"{len(assessments)} assessments vs {len(gold)} gold items"
        )
    pred = [_verdict_and_type(a) for a in assessments]
    true = [_verdict_and_type(g) for g in gold]

    da = prf1([p[0] for p in pred], [t[0] for t in true], averaging="weighted")

    yes_idx = [i for i, t in enumerate(true) if t[0] == "yes"]
    dc_f1w = None
    if yes_idx:
        dc = prf1(
            [pred[i][1] for i in yes_idx],
            [true[i][1] for i in yes_idx],
            averaging="weighted",
        )
        dc_f1w = dc.f1_weighted
    return {"da_f1w": da.f1_weighted, "dc_f1w": dc_f1w}


def run_variant_table(
    utterances,
    gold,
    llm,
    variants=VARIANTS,
    retriever=None,
    fewshots=None,
    model_name="Mistral",
    retries=DEFAULT_RETRIES,
    params=None,
):
    """Score every prompting variant on the same utterance set.

    Returns one row per variant: {"label", "variant", "da_f1w",
    "dc_f1w"}.  Labels compose the model name with the variant suffix,
    e.g. "Mistral+FCOT+ABC".
    """
    if len(utterances) != len(gold):
        raise LengthMismatch(f"{len(utterances)} utterances vs {len(gold)} gold items")
    rows = []
    for variant in variants:
        assessments = [
            assess(
                u,
                variant=variant,
                llm=llm,
                retriever=retriever if variant == "FCOT_ABCDR" else None,
                fewshots=fewshots,
                retries=retries,
                params=params,
            )
            for u in utterances
        ]
        scores = evaluate_distortion(assessments, gold)
        rows.append(
            {
                "label": f"{model_name}{VARIANT_SUFFIX[variant]}",
                "variant": variant,
                "da_f1w": scores["da_f1w"],
                "dc_f1w": scores["dc_f1w"],
            }
        )
    return rows


def format_variant_table(rows):
    """Render variant rows as an aligned text table (percent scale)."""
    def fmt(value):
        return "-" if value is None else f"{100.0 * value:.1f}"

    body = [(r["label"], fmt(r["da_f1w"]), fmt(r["dc_f1w"])) for r in rows]
    widths = [
        max(len(TABLE_COLUMNS[i]), *(len(b[i]) for b in body)) if body else len(TABLE_COLUMNS[i])
        for i in range(3)
    ]
    lines = ["  ".join(TABLE_COLUMNS[i].ljust(widths[i]) for i in range(3))]
    lines.append("  ".join("-" * widths[i] for i in range(3)))
    for b in body:
        lines.append("  ".join(b[i].ljust(widths[i]) for i in range(3)))
    return "\n".join(lines)
