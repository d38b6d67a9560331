"""Two-stage orchestration: screening, then distortion-aware response.

Stage 1 scores stored multimodal features with a trained checkpoint and
runs only when those inputs exist.  Stage 2 takes the same text
utterance through identification and response generation; by default it
runs for every chat message regardless of the stage-1 decision (a
configurable gate can tie it to a depression call).

A deterministic safety rail runs before stage 2: when the user text
matches the acute-risk lexicon, both LLM stages are replaced by a fixed
help-resources message.  Nothing model-generated is shown on that path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from ..distortion.assess import DEFAULT_RETRIES, assess
from ..distortion.prompts import build_response_prompt
from ..distortion.types import DistortionAssessment
from ..errors import (
    ClientUnavailable,
    EmptyUtterance,
    StageError,
    UnparseableAfterRetries,
    UnparseableOutput,
)
from ..features import store
from ..fusion.model import FusionModel

RESPONSE_SECTIONS = (
    ("reflective_inquiry", "Reflective Inquiry"),
    ("challenging_thoughts", "Challenging Thoughts"),
    ("cognitive_restructuring", "Cognitive Restructuring"),
)

_SECTION_RE = re.compile(
    r"^[ \t]*(?:\d+[.)][ \t]*)?[*_#]*(reflective inquiry|challenging thoughts|"
    r"cognitive restructuring)[*_]*[ \t]*[:\-][ \t]*",
    re.IGNORECASE | re.MULTILINE,
)

_REPAIR_NOTE = (
    "Your previous reply was incomplete. Answer again with exactly three "
    "numbered sections labeled Reflective Inquiry, Challenging Thoughts, "
    "and Cognitive Restructuring."
)

# Acute-risk lexicon for the deterministic safety rail.
SAFETY_KEYWORDS = (
    "kill myself",
    "killing myself",
    "end my life",
    "ending my life",
    "take my own life",
    "suicide",
    "suicidal",
    "self-harm",
    "self harm",
    "hurt myself",
    "harm myself",
    "cut myself",
    "better off dead",
    "don't want to live",
    "do not want to live",
    "no reason to live",
    "end it all",
)

HELP_RESOURCES_MESSAGE = (
    "Thank you for trusting me with this. What you are describing sounds "
    "serious, and you deserve immediate support from a person, not a chat "
    "tool.\n"
    "If you are in danger right now, please contact your local emergency "
    "number straight away.\n"
    "You can also talk to a trained counsellor at any time: in the US, call "
    "or text 988 (Suicide and Crisis Lifeline); elsewhere, findahelpline.com "
    "lists free, confidential lines for your country. If you can, let "
    "someone you trust know how you are feeling today."
)


def safety_flagged(text) -> bool:
    low = " ".join(str(text).lower().split())
    return any(kw in low for kw in SAFETY_KEYWORDS)


@dataclass
class CBTResponse:
    reflective_inquiry: str
    challenging_thoughts: str
    cognitive_restructuring: str
    full_text: str
    grounded_on: List[str] = field(default_factory=list)
    safety: bool = False

    def to_dict(self):
        return {
            "reflective_inquiry": self.reflective_inquiry,
            "challenging_thoughts": self.challenging_thoughts,
            "cognitive_restructuring": self.cognitive_restructuring,
            "full_text": self.full_text,
            "grounded_on": list(self.grounded_on),
            "safety": self.safety,
        }


@dataclass
class ScreeningResult:
    probability: float
    decision: str             # "depression" | "normal"
    modality_availability: dict
    model_checkpoint: str

    def to_dict(self):
        return {
            "probability": self.probability,
            "decision": self.decision,
            "modality_availability": dict(self.modality_availability),
            "model_checkpoint": self.model_checkpoint,
        }


def parse_response_sections(text):
    """Split a therapy reply into its three labeled parts.

    Raises UnparseableOutput when any section is missing or empty.
    """
    if not isinstance(text, str) or not text.strip():
        raise UnparseableOutput("empty response text")
    hits = [(m.start(), m.end(), m.group(1).lower()) for m in _SECTION_RE.finditer(text)]
    found = {}
    for i, (_, content_start, label) in enumerate(hits):
        content_end = hits[i + 1][0] if i + 1 < len(hits) else len(text)
        if label not in found:
            found[label] = text[content_start:content_end].strip()
    parts = {}
    for key, label in RESPONSE_SECTIONS:
        content = found.get(label.lower(), "")
        if not content:
            raise UnparseableOutput(f"missing section: {label}")
        parts[key] = content
    return parts


def _normalize_hits(hits) -> List[Tuple[str, str]]:
    """Coerce retriever output into (chunk_id, text) pairs.

    Accepts retrieval results ((Chunk, score) tuples), Chunk-like
    objects, (id, text) string pairs, or bare strings.
    """
    pairs = []
    for i, hit in enumerate(hits):
        obj = hit
        if isinstance(hit, tuple) and len(hit) == 2 and not isinstance(hit[0], str):
            obj = hit[0]
        if hasattr(obj, "chunk_id") and hasattr(obj, "text"):
            pairs.append((str(obj.chunk_id), str(obj.text)))
        elif isinstance(obj, tuple) and len(obj) == 2:
            pairs.append((str(obj[0]), str(obj[1])))
        else:
            pairs.append((f"ctx-{i:03d}", str(obj)))
    return pairs


def supportive_response(assessment: DistortionAssessment) -> CBTResponse:
    """Deterministic acknowledgment used when no distortion was found.

    No model call: the three parts come from a fixed template so a
    clean bill of thinking never depends on backend availability.
    """
    part1 = (
        "Thank you for walking me through this. The way you are reading the "
        "situation stays close to what actually happened, and that balance "
        "is worth noticing."
    )
    part2 = (
        "Even balanced interpretations deserve a check-in: is there any part "
        "of this that still weighs on you or feels unresolved?"
    )
    part3 = (
        "Keep putting events and your read of them side by side, the way you "
        "just did; writing them down occasionally makes that habit stick."
    )
    full = (
        f"1. Reflective Inquiry: {part1}\n"
        f"2. Challenging Thoughts: {part2}\n"
        f"3. Cognitive Restructuring: {part3}"
    )
    return CBTResponse(
        reflective_inquiry=part1,
        challenging_thoughts=part2,
        cognitive_restructuring=part3,
        full_text=full,
        grounded_on=[],
    )


def safety_response() -> CBTResponse:
    """The fixed help-resources reply; replaces generation entirely."""
    return CBTResponse(
        reflective_inquiry="",
        challenging_thoughts="",
        cognitive_restructuring="",
        full_text=HELP_RESOURCES_MESSAGE,
        grounded_on=[],
        safety=True,
    )


def generate_response(
    utterance,
    assessment: DistortionAssessment,
    retriever=None,
    llm=None,
    retries=DEFAULT_RETRIES,
    params=None,
) -> CBTResponse:
    """Produce the three-part therapy reply for an assessed utterance.

    verdict=no takes the supportive template path without calling the
    model.  Otherwise the reply is generated against the response
    template plus retrieved grounding and parsed into its sections,
    with the same bounded repair loop as identification.
    """
    if assessment.verdict == "no":
        return supportive_response(assessment)
    if llm is None:
        raise ClientUnavailable("no LLM client configured")

    pairs = _normalize_hits(retriever(utterance)) if retriever is not None else []
    chunk_ids = [cid for cid, _ in pairs]
    prompt = build_response_prompt(utterance, assessment, [t for _, t in pairs])

    attempts = int(retries) + 1
    last_detail = ""
    for attempt in range(attempts):
        sent = prompt if attempt == 0 else (
            f"{prompt}\n\n{_REPAIR_NOTE}\nAttempt {attempt + 1} of {attempts}."
        )
        raw = llm.complete(sent, params)
        try:
            parts = parse_response_sections(raw)
        except UnparseableOutput as exc:
            last_detail = str(exc)
            continue
        return CBTResponse(full_text=raw, grounded_on=chunk_ids, **parts)
    raise UnparseableAfterRetries(attempts, last_detail)


def screen_sample(
    features_root,
    sample_id,
    checkpoint_path,
    threshold=0.5,
    modalities=("audio", "video", "text"),
    audio_mode="spect",
) -> ScreeningResult:
    """Stage-1 scoring of stored features with a trained checkpoint."""
    if checkpoint_path is None or not Path(checkpoint_path).exists():
        raise ClientUnavailable(f"checkpoint not found: {checkpoint_path}")
    model = FusionModel.load(checkpoint_path)
    inputs = store.model_inputs(features_root, sample_id, modalities, audio_mode)
    prob = float(model.predict_proba(inputs))
    availability = {m: m in inputs for m in ("audio", "video", "text")}
    decision = "depression" if prob >= threshold else "normal"
    return ScreeningResult(
        probability=prob,
        decision=decision,
        modality_availability=availability,
        model_checkpoint=str(checkpoint_path),
    )


@dataclass
class PipelineConfig:
    llm: object = None
    retriever: Optional[Callable] = None
    features_root: Optional[str] = None
    checkpoint_path: Optional[str] = None
    threshold: float = 0.5
    variant: Optional[str] = None      # None = pick by retriever presence
    retries: int = DEFAULT_RETRIES
    fewshots: Optional[list] = None
    params: Optional[dict] = None
    modalities: Sequence[str] = ("audio", "video", "text")
    audio_mode: str = "spect"
    safety_enabled: bool = True
    fail_open: bool = True             # screening errors don't block stage 2
    screening_gate: bool = False       # stage 2 only on a depression call

    def pick_variant(self):
        if self.variant:
            return self.variant
        return "FCOT_ABCDR" if self.retriever is not None else "FCOT_ABCD"


@dataclass
class PipelineResult:
    screening: Optional[ScreeningResult] = None
    screening_error: Optional[str] = None
    assessment: Optional[DistortionAssessment] = None
    response: Optional[CBTResponse] = None
    safety: bool = False

    def to_dict(self):
        return {
            "screening": self.screening.to_dict() if self.screening else None,
            "screening_error": self.screening_error,
            "assessment": self.assessment.to_dict() if self.assessment else None,
            "response": self.response.to_dict() if self.response else None,
            "safety": self.safety,
        }


def _split_input(sample_or_text):
    if isinstance(sample_or_text, str):
        return None, sample_or_text
    if isinstance(sample_or_text, dict):
        sid = sample_or_text.get("sample_id")
        text = sample_or_text.get("text") or sample_or_text.get("transcript") or ""
        return sid, text
    sid = getattr(sample_or_text, "sample_id", None)
    text = getattr(sample_or_text, "transcript", "") or ""
    return sid, text


def run_pipeline(sample_or_text, config: PipelineConfig) -> PipelineResult:
    """Run both stages on one input.

    Accepts a bare utterance string or a sample record carrying
    sample_id + text.  Stage 1 runs only when a sample id, a feature
    root, and stored features are all present; its failures are
    recorded (fail-open) or raised as StageError("screening").  Stage 2
    failures always raise with their stage tag.
    """
    sample_id, text = _split_input(sample_or_text)
    if not text or not text.strip():
        raise EmptyUtterance("pipeline needs a text utterance")
    result = PipelineResult()

    wants_screening = (
        sample_id is not None
        and config.features_root is not None
        and (config.checkpoint_path is not None
             or store.bundle_exists(config.features_root, sample_id))
    )
    if wants_screening:
        try:
            result.screening = screen_sample(
                config.features_root,
                sample_id,
                config.checkpoint_path,
                threshold=config.threshold,
                modalities=config.modalities,
                audio_mode=config.audio_mode,
            )
        except Exception as exc:
            if not config.fail_open:
                raise StageError("screening", exc) from exc
            result.screening_error = str(exc)

    if config.safety_enabled and safety_flagged(text):
        result.safety = True
        result.response = safety_response()
        return result

    if config.screening_gate and result.screening is not None \
            and result.screening.decision == "normal":
        return result

    variant = config.pick_variant()
    text_retriever = None
    if config.retriever is not None:
        def text_retriever(query):
            return [t for _, t in _normalize_hits(config.retriever(query))]

    try:
        result.assessment = assess(
            text,
            variant=variant,
            llm=config.llm,
            retriever=text_retriever if variant == "FCOT_ABCDR" else None,
            fewshots=config.fewshots,
            retries=config.retries,
            params=config.params,
        )
    except StageError:
        raise
    except Exception as exc:
        raise StageError("assessment", exc) from exc

    try:
        result.response = generate_response(
            text,
            result.assessment,
            retriever=config.retriever,
            llm=config.llm,
            retries=config.retries,
            params=config.params,
        )
    except Exception as exc:
        raise StageError("response", exc) from exc
    return result


def make_retriever(index, embedder, k=3):
    """Bind an index + embedder into the callable the pipeline expects."""
    from ..retrieval import retrieve

    def _retrieve(query):
        return retrieve(index, query, k=k, embedder=embedder)

    return _retrieve
