"""Run the identification pipeline for one utterance.

build_prompt -> llm.complete -> parse_assessment, with a bounded
repair loop: on a parse failure the prompt is re-sent with an explicit
format instruction appended.  retries counts the re-sends, so
retries=2 means at most three model calls.
"""

from __future__ import annotations

from ..errors import (
    ClientUnavailable,
    UnknownDistortionName,
    UnparseableAfterRetries,
    UnparseableOutput,
)
from .parse import parse_assessment
from .prompts import REPAIR_TEMPLATE, build_prompt, load_template, render_prompt

DEFAULT_RETRIES = 2


def assess(
    utterance,
    variant="FCOT_ABCDR",
    llm=None,
    retriever=None,
    fewshots=None,
    retries=DEFAULT_RETRIES,
    params=None,
):
    """Assess one utterance for cognitive distortion.

    retriever: callable(utterance) -> list of chunk texts; required for
    FCOT_ABCDR.  params: decoding settings forwarded to the client and
    recorded on the result.
    """
    if llm is None:
        raise ClientUnavailable("no LLM client configured")

    retrieved = None
    if variant == "FCOT_ABCDR":
        if retriever is None:
            raise ClientUnavailable("FCOT_ABCDR requires a retriever")
        retrieved = list(retriever(utterance))

    bundle = build_prompt(utterance, variant, fewshots=fewshots, retrieved=retrieved)
    base_prompt = render_prompt(bundle)

    attempts = int(retries) + 1
    repair_text = None
    last_detail = ""
    for attempt in range(attempts):
        if attempt == 0:
            prompt = base_prompt
        else:
            if repair_text is None:
                repair_text = load_template(REPAIR_TEMPLATE).rstrip("\n")
            prompt = (
                f"{base_prompt}\n\n{repair_text}\n"
                f"Attempt {attempt + 1} of {attempts}."
            )
        raw = llm.complete(prompt, params)
        try:
            result = parse_assessment(raw, bundle.user_utterance, variant=variant)
        except (UnparseableOutput, UnknownDistortionName) as exc:
            last_detail = str(exc)
            continue
        result.llm_params = dict(params) if params else None
        return result
    raise UnparseableAfterRetries(attempts, last_detail)


def assess_many(utterances, variant="FCOT_ABCDR", llm=None, **kwargs):
    return [assess(u, variant=variant, llm=llm, **kwargs) for u in utterances]
