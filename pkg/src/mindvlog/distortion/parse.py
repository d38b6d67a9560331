"""Parse labeled assessments out of model text, and render them back.

The parser is a forgiving labeled-section scanner rather than a strict
grammar: models decorate labels with numbering, bullets, or bold
markers, and the surrounding prose varies.  Sections are located by
label, content runs until the next label.  Everything that cannot be
recovered gracefully degrades to a warning; only a missing verdict or
missing ABC core (for the ABC-structured variants) is fatal.

``render_assessment_text`` is the exact inverse for well-formed
records: ``parse_assessment(render_assessment_text(...))`` recovers
the same fields.  That round trip is what makes scripted and heuristic
clients usable as test doubles.
"""

from __future__ import annotations

import re
from typing import Optional

from ..errors import UnparseableOutput
from .types import (
    ABCAnalysis,
    DISPLAY_NAMES,
    DistortionAssessment,
    NONE_TYPE,
    VARIANTS,
    normalize_distortion,
)

# Variants whose output must contain the ABC core.
_ABC_VARIANTS = ("FCOT_ABC", "FCOT_ABCD", "FCOT_ABCDR")
# Variants that report a distorted span.
_ABCD_VARIANTS = ("FCOT_ABCD", "FCOT_ABCDR")

# Label surface forms, longest first so "Belief Type" wins over "Belief"
# and "Distorted Part" over "Distortion".
_LABEL_FORMS = (
    ("distorted part or sentence", "distorted_part"),
    ("distorted sentence", "distorted_part"),
    ("activating event", "activation_event"),
    ("activation event", "activation_event"),
    ("distortion category", "distortion"),
    ("cognitive distortion", "distortion"),
    ("distorted part", "distorted_part"),
    ("distortion part", "distorted_part"),
    ("belief type", "belief_kind"),
    ("consequences", "consequence"),
    ("consequence", "consequence"),
    ("distortion", "distortion"),
    ("assessment", "assessment"),
    ("reasoning", "reasoning"),
    ("beliefs", "belief"),
    ("belief", "belief"),
    ("reason", "reasoning"),
)

_LABEL_RE = re.compile(
    r"^[ \t]*(?:(?:\d+[.)]|[-*•])[ \t]*)?[*_#]*("
    + "|".join(re.escape(form) for form, _ in _LABEL_FORMS)
    + r")[*_]*[ \t]*:[ \t]*",
    re.IGNORECASE | re.MULTILINE,
)

_FIELD_BY_FORM = {form: field for form, field in _LABEL_FORMS}

_YES_NO_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)

_NONE_WORDS = {"none", "n/a", "na", "nil", "nothing", "not present", "-", ""}


def _sections(text):
    """Split text into {field: content}, first occurrence of each wins."""
    hits = []
    for m in _LABEL_RE.finditer(text):
        field = _FIELD_BY_FORM[m.group(1).lower()]
        hits.append((m.start(), m.end(), field))
    out = {}
    for i, (_, content_start, field) in enumerate(hits):
        content_end = hits[i + 1][0] if i + 1 < len(hits) else len(text)
        if field not in out:
            out[field] = text[content_start:content_end].strip()
    return out


def _clean(value):
    v = value.strip()
    v = v.lstrip("*_").rstrip("*_")
    v = v.strip().strip('"').strip("'").strip()
    return " ".join(v.split())


def _is_none_marker(value):
    return _clean(value).rstrip(".").lower() in _NONE_WORDS


def _squash(text):
    return re.sub(r"[^a-z0-9]+", " ", text.lower()).strip()


def parse_assessment(llm_text, utterance, variant="FCOT_ABCD"):
    """Extract a DistortionAssessment from raw model output.

    Raises UnparseableOutput when the verdict is missing or when an
    ABC-structured variant omits the ABC core.  Lesser defects are
    recorded in ``warnings``.
    """
    if variant not in VARIANTS:
        raise UnparseableOutput(f"unknown variant {variant!r}")
    if not isinstance(llm_text, str) or not llm_text.strip():
        raise UnparseableOutput("empty model output")

    sections = _sections(llm_text)
    warnings = []

    if "assessment" not in sections:
        raise UnparseableOutput("no Assessment section found")
    verdict_match = _YES_NO_RE.search(sections["assessment"])
    if verdict_match is None:
        raise UnparseableOutput("Assessment section has no yes/no token")
    verdict = verdict_match.group(1).lower()

    if variant in _ABC_VARIANTS:
        missing = [
            name
            for name, field in (
                ("Activating Event", "activation_event"),
                ("Belief", "belief"),
                ("Consequences", "consequence"),
            )
            if not sections.get(field, "").strip()
        ]
        if missing:
            raise UnparseableOutput(
                "missing required sections: " + ", ".join(missing)
            )

    activation = _clean(sections.get("activation_event", ""))
    belief = _clean(sections.get("belief", ""))
    consequence = _clean(sections.get("consequence", ""))

    kind_text = sections.get("belief_kind", "")
    lowered = kind_text.lower()
    if "irrational" in lowered:
        belief_kind = "irrational"
    elif "rational" in lowered:
        belief_kind = "rational"
    else:
        # Some replies fold the judgement into the Belief line itself.
        folded = belief.lower()
        if "irrational" in folded:
            belief_kind = "irrational"
        elif "rational" in folded:
            belief_kind = "rational"
        else:
            belief_kind = "irrational"
            if variant in _ABC_VARIANTS:
                warnings.append("belief type not stated, assumed irrational")

    distorted_part: Optional[str] = None
    if "distorted_part" in sections and not _is_none_marker(
        sections["distorted_part"]
    ):
        distorted_part = _clean(sections["distorted_part"])
        if _squash(distorted_part) not in _squash(utterance):
            warnings.append("distorted part is not a span of the utterance")

    reasoning = _clean(sections.get("reasoning", "")) or None

    raw_label = sections.get("distortion", "")
    if _is_none_marker(raw_label):
        distortion = NONE_TYPE
        if verdict == "yes":
            warnings.append("verdict yes but no distortion named")
    else:
        # Take the first line of the section; prose may follow the label.
        candidate = _clean(raw_label.splitlines()[0]).rstrip(".")
        distortion = normalize_distortion(candidate)

    if verdict == "no" and distortion != NONE_TYPE:
        warnings.append(
            f"verdict no forces distortion to none (model said {distortion})"
        )
        distortion = NONE_TYPE

    abc = ABCAnalysis(
        activation_event=activation,
        belief=belief,
        belief_kind=belief_kind,
        consequence=consequence,
        distorted_part=distorted_part,
        reasoning=reasoning,
    )
    return DistortionAssessment(
        abc=abc,
        verdict=verdict,
        distortion=distortion,
        raw_llm_text=llm_text,
        variant=variant,
        utterance=utterance,
        warnings=warnings,
    )


def render_assessment_text(
    *,
    activation_event,
    belief,
    belief_kind,
    consequence,
    distorted_part,
    distortion,
    reasoning,
    verdict,
    variant="FCOT_ABCDR",
):
    """Render the labeled form the parser expects.

    Used both for worked few-shot solutions and by the offline
    heuristic client.  Which lines appear depends on the variant; the
    full ABCD-with-reason layout is the default.
    """
    if variant not in VARIANTS:
        raise UnparseableOutput(f"unknown variant {variant!r}")

    def one_line(value):
        return " ".join(str(value).split())

    lines = []
    if variant in _ABC_VARIANTS:
        lines.append(f"Activating Event: {one_line(activation_event)}")
        lines.append(f"Belief: {one_line(belief)}")
        kind = "Irrational" if str(belief_kind).lower() == "irrational" else "Rational"
        lines.append(f"Belief Type: {kind}")
        lines.append(f"Consequences: {one_line(consequence)}")
    if variant in _ABCD_VARIANTS:
        part = one_line(distorted_part) if distorted_part else "none"
        lines.append(f"Distorted Part: {part}")
    code = normalize_distortion(distortion) if distortion else NONE_TYPE
    lines.append(f"Distortion: {DISPLAY_NAMES[code]}")
    if reasoning and variant != "BASE":
        lines.append(f"Reason: {one_line(reasoning)}")
    lines.append(f"Assessment: {'yes' if str(verdict).lower() == 'yes' else 'no'}")
    return "\n".join(lines)
