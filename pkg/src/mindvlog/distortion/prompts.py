"""Prompt assembly for the five identification variants.

Templates live as text assets next to this module and are loaded
byte-for-byte; assembly is pure string concatenation so the same
inputs always produce the same prompt.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import List, Optional, Sequence, Tuple

from ..errors import EmptyUtterance, MissingFewshots, UnknownVariant
from .parse import render_assessment_text
from .types import DISPLAY_NAMES, DISTORTION_TYPES, VARIANTS

TEMPLATE_BY_VARIANT = {
    "BASE": "identification_base.txt",
    "FCOT": "identification_fcot.txt",
    "FCOT_ABC": "identification_abc.txt",
    "FCOT_ABCD": "identification_abcd.txt",
    "FCOT_ABCDR": "identification_abcd.txt",
}

RESPONSE_TEMPLATE = "response.txt"
REPAIR_TEMPLATE = "repair.txt"

# Variants that carry worked examples.
_FEWSHOT_VARIANTS = ("FCOT", "FCOT_ABC", "FCOT_ABCD", "FCOT_ABCDR")


def load_template(name):
    path = resources.files("mindvlog.distortion").joinpath("templates", name)
    return path.read_text(encoding="utf-8")


def load_default_fewshots():
    """The in-tree synthetic exemplars, in file order."""
    path = resources.files("mindvlog.distortion").joinpath(
        "templates", "fewshots.jsonl"
    )
    shots = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            shots.append(json.loads(line))
    return shots


def types_block():
    names = ", ".join(DISPLAY_NAMES[c] for c in DISTORTION_TYPES)
    return f"Types of cognitive distortion: {names}."


@dataclass
class PromptBundle:
    system_text: str
    fewshot_examples: List[Tuple[str, str]]
    user_utterance: str
    retrieved_context: Optional[List[str]]
    variant: str


def _worked_solution(shot, variant):
    return render_assessment_text(
        activation_event=shot.get("activation_event", ""),
        belief=shot.get("belief", ""),
        belief_kind=shot.get("belief_kind", "irrational"),
        consequence=shot.get("consequence", ""),
        distorted_part=shot.get("distorted_part"),
        distortion=shot.get("distortion", "none"),
        reasoning=shot.get("reasoning"),
        verdict=shot.get("verdict", "no"),
        variant=variant,
    )


def build_prompt(utterance, variant, fewshots=None, retrieved=None):
    """Assemble a PromptBundle for one utterance.

    fewshots: list of exemplar dicts (defaults to the shipped set for
    the few-shot variants).  retrieved: chunk texts, used only by
    FCOT_ABCDR.
    """
    if variant not in VARIANTS:
        raise UnknownVariant(str(variant))
    if not isinstance(utterance, str) or not utterance.strip():
        raise EmptyUtterance("utterance is empty")

    examples: List[Tuple[str, str]] = []
    if variant in _FEWSHOT_VARIANTS:
        if fewshots is None:
            fewshots = load_default_fewshots()
        if not fewshots:
            raise MissingFewshots(f"variant {variant} needs at least one exemplar")
        for shot in fewshots:
            examples.append((shot["utterance"], _worked_solution(shot, variant)))

    context = None
    if variant == "FCOT_ABCDR" and retrieved:
        context = [str(c) for c in retrieved]

    return PromptBundle(
        system_text=load_template(TEMPLATE_BY_VARIANT[variant]),
        fewshot_examples=examples,
        user_utterance=utterance.strip(),
        retrieved_context=context,
        variant=variant,
    )


def render_prompt(bundle: PromptBundle) -> str:
    """Flatten a bundle to the single prompt string sent to the LLM.

    Layout: template, types list, optional retrieved context, worked
    examples as Question/solution pairs, then the user turn after a
    final "Question:" marker.
    """
    parts = [bundle.system_text.rstrip("\n"), "", types_block()]
    if bundle.retrieved_context:
        parts.append("")
        parts.append("Context:")
        for i, chunk in enumerate(bundle.retrieved_context):
            parts.append(f"[{i + 1}] {chunk}")
    for utt, solution in bundle.fewshot_examples:
        parts.append("")
        parts.append(f"Question: {utt}")
        parts.append(solution)
    parts.append("")
    parts.append(f"Question: {bundle.user_utterance}")
    return "\n".join(parts)


def build_response_prompt(utterance, assessment, context_chunks: Sequence[str] = ()):
    """Prompt for the therapist-style reply to a distorted utterance."""
    if not isinstance(utterance, str) or not utterance.strip():
        raise EmptyUtterance("utterance is empty")
    parts = [load_template(RESPONSE_TEMPLATE).rstrip("\n"), ""]
    if context_chunks:
        parts.append("Context:")
        for i, chunk in enumerate(context_chunks):
            parts.append(f"[{i + 1}] {chunk}")
        parts.append("")
    parts.append(f"Distortion: {DISPLAY_NAMES[assessment.distortion]}")
    parts.append(f"Belief: {assessment.abc.belief}")
    parts.append(f"Client statement: {utterance.strip()}")
    return "\n".join(parts)
