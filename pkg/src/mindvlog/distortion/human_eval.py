"""Human review forms for assessment quality.

One JSONL record per assessment with the extracted A/B/C/D fields and
a ratings block the reviewer fills with true/false per field.
Aggregation reports percent-correct per field.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import EmptyInput

# Field order and display labels for the aggregate table.
FIELD_LABELS = (
    ("activation_event", "Activation Event"),
    ("belief", "Beliefs"),
    ("consequence", "Consequences"),
    ("distorted_part", "Distorted"),
)

_RATING_KEYS = tuple(key for key, _ in FIELD_LABELS)


def export_human_eval_forms(assessments, out_path):
    """Write one reviewable form per assessment; returns the path."""
    items = list(assessments)
    if not items:
        raise EmptyInput("no assessments to export")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        for i, a in enumerate(items):
            form = {
                "form_id": f"form-{i:04d}",
                "utterance": a.utterance,
                "variant": a.variant,
                "fields": {
                    "activation_event": a.abc.activation_event,
                    "belief": a.abc.belief,
                    "consequence": a.abc.consequence,
                    "distorted_part": a.abc.distorted_part,
                },
                "verdict": a.verdict,
                "distortion": a.distortion,
                # Reviewer sets each to true (correct) or false.
                "ratings": {key: None for key in _RATING_KEYS},
            }
            fh.write(json.dumps(form, ensure_ascii=False) + "\n")
    return out_path


def load_forms(path):
    forms = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            forms.append(json.loads(line))
    return forms


def aggregate_human_eval(forms):
    """Percent-correct per field over the filled ratings.

    forms: list of form dicts or a path to the JSONL file.  A rating
    counts as filled when it is boolean; fields nobody rated are
    omitted.  Raises EmptyInput when no rating anywhere is filled.
    """
    if isinstance(forms, (str, Path)):
        forms = load_forms(forms)
    filled_any = False
    result = {}
    for key, label in FIELD_LABELS:
        filled = 0
        correct = 0
        for form in forms:
            rating = form.get("ratings", {}).get(key)
            if isinstance(rating, bool):
                filled += 1
                if rating:
                    correct += 1
        if filled:
            filled_any = True
            result[label] = 100.0 * correct / filled
    if not filled_any:
        raise EmptyInput("no filled ratings to aggregate")
    return result


def format_human_eval(percentages):
    """Aligned two-column table: Models | Percentage."""
    def fmt(p):
        return f"{p:.1f}".rstrip("0").rstrip(".") + "%"

    rows = [(label, fmt(percentages[label]))
            for _, label in FIELD_LABELS if label in percentages]
    width = max(len("Models"), *(len(r[0]) for r in rows)) if rows else len("Models")
    lines = [f"{'Models'.ljust(width)}  Percentage"]
    lines.append(f"{'-' * width}  {'-' * len('Percentage')}")
    for label, pct in rows:
        lines.append(f"{label.ljust(width)}  {pct}")
    return "\n".join(lines)
