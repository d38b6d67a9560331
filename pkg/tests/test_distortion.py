import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mindvlog import distortion
from mindvlog.clients import (
    HeuristicLLMClient,
    RecordingLLMClient,
    ReplayLLMClient,
    ScriptedLLMClient,
)
from mindvlog.distortion import (
    DISPLAY_NAMES,
    DISTORTION_TYPES,
    NONE_TYPE,
    VARIANTS,
    build_prompt,
    build_response_prompt,
    evaluate_distortion,
    format_variant_table,
    normalize_distortion,
    parse_assessment,
    render_assessment_text,
    render_prompt,
    run_variant_table,
)
from mindvlog.errors import (
    ClientUnavailable,
    EmptyInput,
    EmptyUtterance,
    LengthMismatch,
    UnknownDistortionName,
    UnknownVariant,
    UnparseableAfterRetries,
    UnparseableOutput,
)

UTTERANCE = "I failed the exam so I am a complete failure at everything"


# ---------------------------------------------------------------------------
# taxonomy


def test_ten_types_plus_none():
    assert len(DISTORTION_TYPES) == 10
    assert NONE_TYPE == "none"
    assert NONE_TYPE not in DISTORTION_TYPES
    assert set(DISPLAY_NAMES) == set(DISTORTION_TYPES) | {NONE_TYPE}


def test_normalize_canonical_and_display():
    for code in DISTORTION_TYPES:
        assert normalize_distortion(code) == code
        assert normalize_distortion(DISPLAY_NAMES[code]) == code


def test_normalize_aliases():
    assert normalize_distortion("black and white thinking") == "all_or_nothing"
    assert normalize_distortion("Polarized Thinking") == "all_or_nothing"
    assert normalize_distortion("catastrophizing") == "magnification"
    assert normalize_distortion("fortune teller error") == "fortune_telling"
    assert normalize_distortion("mindreading") == "mind_reading"
    assert normalize_distortion("no distortion") == NONE_TYPE
    assert normalize_distortion("None") == NONE_TYPE


def test_normalize_unknown():
    with pytest.raises(UnknownDistortionName):
        normalize_distortion("wishful thinking")


# ---------------------------------------------------------------------------
# parsing


def _fields(variant="FCOT_ABCDR", **over):
    base = dict(
        activation_event="failing the exam",
        belief="one failure makes me a failure at everything",
        belief_kind="irrational",
        consequence="hopelessness and avoidance of studying",
        distorted_part="a complete failure at everything",
        distortion="overgeneralization",
        reasoning="one event is generalized to every domain",
        verdict="yes",
        variant=variant,
    )
    base.update(over)
    return base


def test_parse_render_round_trip_all_variants():
    for variant in VARIANTS:
        fields = _fields(variant=variant)
        text = render_assessment_text(**fields)
        parsed = parse_assessment(text, UTTERANCE, variant=variant)
        assert parsed.verdict == "yes"
        assert parsed.distortion == "overgeneralization"
        if variant not in ("BASE", "FCOT"):  # only ABC variants carry ABC lines
            assert parsed.abc.belief == fields["belief"]
            assert parsed.abc.activation_event == fields["activation_event"]
            assert parsed.abc.consequence == fields["consequence"]


def test_parse_tolerates_decorated_labels():
    text = (
        "1. **Activating Event:** the exam\n"
        "2. **Belief:** I always fail\n"
        "3. **Belief Type:** irrational\n"
        "4. **Consequences:** despair\n"
        "5. **Distorted Part:** always fail\n"
        "6. **Distortion:** Overgeneralization\n"
        "7. **Reason:** pattern word\n"
        "8. **Assessment:** yes\n"
    )
    parsed = parse_assessment(text, "I always fail the exam", variant="FCOT_ABCD")
    assert parsed.verdict == "yes"
    assert parsed.abc.belief == "I always fail"
    assert parsed.distortion == "overgeneralization"


def test_parse_first_occurrence_wins():
    text = (
        "Activating Event: first event\n"
        "Belief: first belief\n"
        "Belief Type: irrational\n"
        "Consequences: sadness\n"
        "Distortion: labeling\n"
        "Assessment: yes\n"
        "Belief: second belief\n"
    )
    parsed = parse_assessment(text, "u", variant="FCOT_ABC")
    assert parsed.abc.belief == "first belief"


def test_parse_verdict_no_coerces_distortion():
    text = (
        "Activating Event: a rescheduled meeting\n"
        "Belief: plans change sometimes\n"
        "Belief Type: rational\n"
        "Consequences: mild annoyance\n"
        "Distorted Part: none\n"
        "Distortion: labeling\n"
        "Reason: none applies\n"
        "Assessment: no\n"
    )
    parsed = parse_assessment(text, "the meeting moved", variant="FCOT_ABCD")
    assert parsed.verdict == "no"
    assert parsed.distortion == NONE_TYPE
    assert any("no" in w for w in parsed.warnings)


def test_parse_irrational_checked_before_rational():
    # "irrational" contains "rational"; the kind must not be misread
    text = render_assessment_text(**_fields(belief_kind="irrational"))
    parsed = parse_assessment(text, UTTERANCE, variant="FCOT_ABCDR")
    assert parsed.abc.belief_kind == "irrational"
    text2 = render_assessment_text(**_fields(belief_kind="rational", verdict="no",
                                             distortion="none", distorted_part=None))
    parsed2 = parse_assessment(text2, UTTERANCE, variant="FCOT_ABCDR")
    assert parsed2.abc.belief_kind == "rational"


def test_parse_missing_assessment_unparseable():
    with pytest.raises(UnparseableOutput):
        parse_assessment("Belief: x\nDistortion: labeling\n", "u", variant="FCOT_ABCD")


def test_parse_abc_variant_requires_abc_fields():
    text = "Distortion: labeling\nAssessment: yes\n"
    with pytest.raises(UnparseableOutput):
        parse_assessment(text, "u", variant="FCOT_ABCD")
    # BASE has no ABC requirement
    parsed = parse_assessment(text, "u", variant="BASE")
    assert parsed.distortion == "labeling"


def test_parse_unknown_distortion_name_propagates():
    text = (
        "Activating Event: a\nBelief: b\nBelief Type: irrational\n"
        "Consequences: c\nDistortion: imaginary pattern\nAssessment: yes\n"
    )
    with pytest.raises(UnknownDistortionName):
        parse_assessment(text, "u", variant="FCOT_ABC")


def test_parse_distorted_part_substring_warning():
    fields = _fields(distorted_part="words that are not in the utterance")
    text = render_assessment_text(**fields)
    parsed = parse_assessment(text, UTTERANCE, variant="FCOT_ABCDR")
    assert parsed.abc.distorted_part == "words that are not in the utterance"
    assert any("utterance" in w for w in parsed.warnings)


def test_parse_to_dict_flattens():
    text = render_assessment_text(**_fields())
    parsed = parse_assessment(text, UTTERANCE, variant="FCOT_ABCDR")
    d = parsed.to_dict()
    assert d["verdict"] == "yes"
    assert d["distortion"] == "overgeneralization"
    assert d["belief"] == _fields()["belief"]
    assert d["variant"] == "FCOT_ABCDR"


# quotes and markdown decoration are parser-normalization characters, so
# fields made of them cannot round-trip verbatim
_TEXT = st.text(
    alphabet=st.characters(codec="ascii", exclude_characters="\r\n:*_#'\"`"),
    min_size=1,
    max_size=60,
).map(lambda s: " ".join(s.split())).filter(lambda s: s and not s.isspace())


@given(
    activation=_TEXT,
    belief=_TEXT,
    consequence=_TEXT,
    reasoning=_TEXT,
    code=st.sampled_from(DISTORTION_TYPES),
    variant=st.sampled_from([v for v in VARIANTS if v != "BASE"]),
)
@settings(max_examples=120, deadline=None)
def test_round_trip_property(activation, belief, consequence, reasoning, code, variant):
    text = render_assessment_text(
        activation_event=activation,
        belief=belief,
        belief_kind="irrational",
        consequence=consequence,
        distorted_part=belief,
        distortion=code,
        reasoning=reasoning,
        verdict="yes",
        variant=variant,
    )
    parsed = parse_assessment(text, belief, variant=variant)
    assert parsed.verdict == "yes"
    assert parsed.distortion == code
    if variant != "FCOT":  # FCOT renders no ABC lines
        assert parsed.abc.activation_event == activation
        assert parsed.abc.belief == belief
        assert parsed.abc.consequence == consequence


# ---------------------------------------------------------------------------
# prompts


def test_prompt_layout_and_determinism():
    bundle = build_prompt(UTTERANCE, "FCOT_ABCD")
    text_a = render_prompt(bundle)
    text_b = render_prompt(build_prompt(UTTERANCE, "FCOT_ABCD"))
    assert text_a == text_b
    assert text_a.rstrip().endswith(f"Question: {UTTERANCE}")
    assert "Types of cognitive distortion:" in text_a
    assert "All-or-Nothing Thinking" in text_a


def test_prompt_variant_differences():
    base = render_prompt(build_prompt(UTTERANCE, "BASE"))
    abcd = render_prompt(build_prompt(UTTERANCE, "FCOT_ABCD"))
    assert "Activating Event" not in base
    assert "Activating Event" in abcd
    assert "Question:" in abcd


def test_prompt_fewshots_embedded():
    bundle = build_prompt(UTTERANCE, "FCOT_ABCD")
    assert len(bundle.fewshot_examples) >= 2
    text = render_prompt(bundle)
    for shot_utt, _solution in bundle.fewshot_examples:
        assert shot_utt in text


def test_prompt_context_only_for_retrieval_variant():
    chunks = ["cbt chunk one", "cbt chunk two"]
    with_ctx = render_prompt(build_prompt(UTTERANCE, "FCOT_ABCDR", retrieved=chunks))
    assert "Context:" in with_ctx
    assert "cbt chunk one" in with_ctx
    without = render_prompt(build_prompt(UTTERANCE, "FCOT_ABCD", retrieved=chunks))
    assert "cbt chunk one" not in without


def test_prompt_errors():
    with pytest.raises(EmptyUtterance):
        build_prompt("   ", "FCOT_ABCD")
    with pytest.raises(UnknownVariant):
        build_prompt(UTTERANCE, "FANCY")


def test_response_prompt_carries_assessment():
    llm = HeuristicLLMClient()
    assessment = distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=llm)
    prompt = build_response_prompt(UTTERANCE, assessment, ["supporting chunk"])
    assert UTTERANCE in prompt
    assert "supporting chunk" in prompt
    assert DISPLAY_NAMES[assessment.distortion] in prompt


# ---------------------------------------------------------------------------
# assess


def test_assess_heuristic_end_to_end():
    a = distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=HeuristicLLMClient())
    assert a.verdict == "yes"
    assert a.distortion in DISTORTION_TYPES
    assert a.abc.belief
    assert a.variant == "FCOT_ABCD"
    assert a.utterance == UTTERANCE


def test_assess_requires_llm():
    with pytest.raises(ClientUnavailable):
        distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=None)


def test_assess_abcdr_requires_retriever():
    with pytest.raises(ClientUnavailable):
        distortion.assess(UTTERANCE, variant="FCOT_ABCDR", llm=HeuristicLLMClient())


def test_assess_retry_exhaustion_counts_attempts():
    calls = []

    class Garbage:
        def complete(self, prompt, params=None):
            calls.append(prompt)
            return "completely unusable reply"

    with pytest.raises(UnparseableAfterRetries) as exc:
        distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=Garbage(), retries=2)
    assert len(calls) == 3
    assert exc.value.attempts == 3
    # each retry prompt is distinct (repair note and attempt counter)
    assert len(set(calls)) == 3


def test_assess_recovers_on_retry():
    good = render_assessment_text(**_fields(variant="FCOT_ABCD"))
    llm = ScriptedLLMClient(["garbage one", "garbage two", good])
    a = distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=llm, retries=2)
    assert a.verdict == "yes"
    assert a.distortion == "overgeneralization"


def test_assess_record_then_replay(tmp_path):
    store_path = tmp_path / "replay.jsonl"
    rec = RecordingLLMClient(HeuristicLLMClient(), store_path)
    first = distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=rec)
    replay = ReplayLLMClient.from_file(store_path)
    second = distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=replay)
    assert first.to_dict() == second.to_dict()


def test_assess_empty_utterance():
    with pytest.raises(EmptyUtterance):
        distortion.assess("", variant="FCOT_ABCD", llm=HeuristicLLMClient())


# ---------------------------------------------------------------------------
# evaluation


def _mk(verdict, dist):
    return (verdict, dist)


def test_evaluate_perfect_scores():
    gold = [("yes", "labeling"), ("no", NONE_TYPE), ("yes", "mind_reading")]
    scores = evaluate_distortion(list(gold), gold)
    assert scores["da_f1w"] == 1.0
    assert scores["dc_f1w"] == 1.0


def test_evaluate_hand_confusion():
    gold = [("yes", "labeling"), ("yes", "labeling"), ("no", NONE_TYPE), ("no", NONE_TYPE)]
    preds = [("yes", "labeling"), ("no", NONE_TYPE), ("no", NONE_TYPE), ("yes", "labeling")]
    scores = evaluate_distortion(preds, gold)
    # verdicts: yes class P=1/2 R=1/2 F=1/2; no class P=1/2 R=1/2 F=1/2
    assert abs(scores["da_f1w"] - 0.5) < 1e-12
    # types on gold-yes items only: one right, one called none
    # classes: labeling (support 2): P=1, R=1/2, F=2/3; none (support 0): F=0
    assert abs(scores["dc_f1w"] - 2.0 / 3.0) < 1e-12


def test_evaluate_dc_none_without_gold_yes():
    gold = [("no", NONE_TYPE), ("no", NONE_TYPE)]
    preds = [("no", NONE_TYPE), ("yes", "labeling")]
    scores = evaluate_distortion(preds, gold)
    assert scores["dc_f1w"] is None
    assert 0.0 <= scores["da_f1w"] <= 1.0


def test_evaluate_length_mismatch():
    with pytest.raises(LengthMismatch):
        evaluate_distortion([("yes", "labeling")], [])


def test_evaluate_accepts_assessment_objects():
    a = distortion.assess(UTTERANCE, variant="FCOT_ABCD", llm=HeuristicLLMClient())
    scores = evaluate_distortion([a], [(a.verdict, a.distortion)])
    assert scores["da_f1w"] == 1.0


# ---------------------------------------------------------------------------
# variant table


def test_variant_table_rows_and_format():
    utterances = [
        "I failed once so I will always fail",
        "They did not reply, they must hate me",
        "The meeting moved to Tuesday",
    ]
    gold = [
        ("yes", "overgeneralization"),
        ("yes", "mind_reading"),
        ("no", NONE_TYPE),
    ]
    retriever = lambda q: ["chunk about distortions"]
    rows = run_variant_table(
        utterances, gold, HeuristicLLMClient(), retriever=retriever, retries=1
    )
    assert [r["label"] for r in rows] == [
        "Mistral",
        "Mistral+FCOT",
        "Mistral+FCOT+ABC",
        "Mistral+FCOT+ABCD",
        "Mistral+FCOT+ABCDR",
    ]
    assert all(set(r) >= {"label", "variant", "da_f1w", "dc_f1w"} for r in rows)
    table = format_variant_table(rows)
    assert "Methods" in table and "DA F1-W" in table and "DC F1-W" in table
    assert "Mistral+FCOT+ABCDR" in table


# ---------------------------------------------------------------------------
# human evaluation


def _assessments(n=3):
    llm = HeuristicLLMClient()
    utts = [
        "I ruined everything by being late once",
        "If I try this it is guaranteed to go wrong",
        "My friend frowned so she must be angry with me",
    ]
    return [distortion.assess(u, variant="FCOT_ABCD", llm=llm) for u in utts[:n]]


def test_export_and_load_forms(tmp_path):
    path = tmp_path / "forms.jsonl"
    written = distortion.export_human_eval_forms(_assessments(), path)
    assert written == path
    loaded = distortion.load_forms(path)
    assert len(loaded) == 3
    assert [f["form_id"] for f in loaded] == ["form-0000", "form-0001", "form-0002"]
    for f in loaded:
        assert set(f["ratings"]) == {
            "activation_event",
            "belief",
            "consequence",
            "distorted_part",
        }
        assert all(v is None for v in f["ratings"].values())


def test_export_empty_raises(tmp_path):
    with pytest.raises(EmptyInput):
        distortion.export_human_eval_forms([], tmp_path / "x.jsonl")


def test_aggregate_two_of_three(tmp_path):
    path = tmp_path / "forms.jsonl"
    distortion.export_human_eval_forms(_assessments(), path)
    forms = distortion.load_forms(path)
    for i, f in enumerate(forms):
        f["ratings"]["belief"] = i < 2  # two of three beliefs correct
        f["ratings"]["activation_event"] = True
    pct = distortion.aggregate_human_eval(forms)
    assert abs(pct["Beliefs"] - 100 * 2 / 3) < 1e-9
    assert pct["Activation Event"] == 100.0
    assert "Consequences" not in pct  # never rated


def test_aggregate_requires_some_rating():
    forms = [
        {"form_id": "form-0000", "fields": {}, "ratings": {"belief": None}},
    ]
    with pytest.raises(EmptyInput):
        distortion.aggregate_human_eval(forms)


def test_format_human_eval_layout():
    text = distortion.format_human_eval({"Beliefs": 100.0, "Distorted": 200 / 3})
    assert "Models" in text and "Percentage" in text
    assert "100%" in text
    assert "66.7%" in text
    assert "Beliefs" in text and "Distorted" in text


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
