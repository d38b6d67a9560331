import threading

import pytest

from mindvlog.agent import api as agent_api
from mindvlog.agent import pipeline as pl
from mindvlog.agent.sessions import SessionStore
from mindvlog.clients import HashTextEncoder, HeuristicLLMClient, ScriptedLLMClient
from mindvlog.errors import (
    ClientUnavailable,
    EmptyUtterance,
    StageError,
    UnknownSession,
    UnparseableAfterRetries,
    UnparseableOutput,
)
from mindvlog.fusion.model import FusionConfig, FusionModel
from mindvlog import retrieval

DISTORTED = "I failed once so I will always fail at everything"

SECTION_SLUGS = [slug for slug, _ in pl.RESPONSE_SECTIONS]


def _llm_config(**over):
    base = dict(llm=HeuristicLLMClient())
    base.update(over)
    return pl.PipelineConfig(**base)


def _index_and_retriever(k=2):
    emb = HashTextEncoder(dimension=64, seed=0)
    docs = {
        "reframing": "examine the evidence for and against an automatic thought",
        "distortions": "overgeneralization treats one event as a universal pattern",
        "behavior": "small experiments help test predictions against reality",
    }
    index = retrieval.index_documents(docs, emb)
    return index, pl.make_retriever(index, emb, k=k)


def _screening_checkpoint(tmp_path):
    cfg = FusionConfig(
        encoder_layers=1,
        decoder_layers=1,
        model_dim=16,
        heads=2,
        ff_dim=32,
        audio_dim=64,
        video_dim=768,
        text_dim=768,
    )
    path = tmp_path / "screen.ckpt"
    FusionModel(cfg).save(path)
    return path


# ---------------------------------------------------------------------------
# pipeline stages


def test_text_only_pipeline():
    result = pl.run_pipeline(DISTORTED, _llm_config())
    assert result.screening is None
    assert result.assessment is not None
    assert result.assessment.verdict == "yes"
    assert result.response is not None
    for slug in SECTION_SLUGS:
        assert getattr(result.response, slug).strip()
    assert not result.safety


def test_pipeline_full_text_numbers_the_sections():
    result = pl.run_pipeline(DISTORTED, _llm_config())
    text = result.response.full_text
    for i, (slug, display) in enumerate(pl.RESPONSE_SECTIONS, start=1):
        assert f"{i}. {display}:" in text
        assert getattr(result.response, slug) in text


def test_pipeline_rational_utterance_supportive_path():
    calls = []

    class CountingHeuristic(HeuristicLLMClient):
        def complete(self, prompt, params=None):
            calls.append(prompt)
            return super().complete(prompt, params)

    result = pl.run_pipeline(
        "the meeting moved to tuesday and that is fine",
        _llm_config(llm=CountingHeuristic()),
    )
    assert result.assessment.verdict == "no"
    assert result.response.grounded_on == []
    for slug in SECTION_SLUGS:
        assert getattr(result.response, slug).strip()
    # only the assessment consulted the model; the supportive reply is fixed
    assert len(calls) == 1
    canned = pl.supportive_response(result.assessment)
    assert result.response.full_text == canned.full_text


def test_pipeline_variant_auto_selection():
    _, retriever = _index_and_retriever()
    with_r = pl.run_pipeline(DISTORTED, _llm_config(retriever=retriever))
    assert with_r.assessment.variant == "FCOT_ABCDR"
    without = pl.run_pipeline(DISTORTED, _llm_config())
    assert without.assessment.variant == "FCOT_ABCD"


def test_pipeline_grounds_response_on_retrieved_chunks():
    index, retriever = _index_and_retriever(k=2)
    result = pl.run_pipeline(DISTORTED, _llm_config(retriever=retriever))
    ids = {c.chunk_id for c in index.entries}
    assert result.response.grounded_on
    assert set(result.response.grounded_on) <= ids


def test_pipeline_empty_utterance():
    with pytest.raises(EmptyUtterance):
        pl.run_pipeline("   ", _llm_config())


def test_safety_rail_replaces_both_stages():
    result = pl.run_pipeline(
        "sometimes i think about ending my life", _llm_config()
    )
    assert result.safety
    assert result.assessment is None
    assert result.response.safety
    for slug in SECTION_SLUGS:
        assert getattr(result.response, slug) == ""
    assert result.response.full_text == pl.HELP_RESOURCES_MESSAGE
    assert "988" in result.response.full_text


def test_safety_rail_can_be_disabled():
    result = pl.run_pipeline(
        "sometimes i think about ending my life",
        _llm_config(safety_enabled=False),
    )
    assert not result.safety
    assert result.assessment is not None


def test_safety_flag_detection_is_case_and_space_tolerant():
    assert pl.safety_flagged("I want to KILL  myself")
    assert pl.safety_flagged("thinking about self-harm again")
    assert not pl.safety_flagged("this deadline is killing my weekend")


def test_screening_stage_with_checkpoint(tmp_path, feature_root):
    ckpt = _screening_checkpoint(tmp_path)
    result = pl.run_pipeline(
        {"sample_id": "s0000", "text": DISTORTED},
        _llm_config(features_root=str(feature_root), checkpoint_path=str(ckpt)),
    )
    assert result.screening is not None
    assert 0.0 < result.screening.probability < 1.0
    assert result.screening.decision in ("depression", "normal")
    assert result.assessment is not None


def test_screening_fail_open_records_error(feature_root):
    result = pl.run_pipeline(
        {"sample_id": "missing-sample", "text": DISTORTED},
        _llm_config(features_root=str(feature_root), checkpoint_path="/nonexistent.ckpt"),
    )
    assert result.screening is None
    assert result.screening_error
    assert result.assessment is not None


def test_screening_fail_closed_raises(feature_root):
    cfg = _llm_config(
        features_root=str(feature_root),
        checkpoint_path="/nonexistent.ckpt",
        fail_open=False,
    )
    with pytest.raises(StageError) as exc:
        pl.run_pipeline({"sample_id": "s0000", "text": DISTORTED}, cfg)
    assert exc.value.stage == "screening"


def test_screening_skipped_without_sample_id(tmp_path, feature_root):
    ckpt = _screening_checkpoint(tmp_path)
    result = pl.run_pipeline(
        DISTORTED,
        _llm_config(features_root=str(feature_root), checkpoint_path=str(ckpt)),
    )
    assert result.screening is None


def test_screen_sample_direct(tmp_path, feature_root):
    ckpt = _screening_checkpoint(tmp_path)
    scr = pl.screen_sample(str(feature_root), "s0001", str(ckpt), threshold=0.5)
    assert 0.0 < scr.probability < 1.0
    expected = "depression" if scr.probability >= 0.5 else "normal"
    assert scr.decision == expected
    assert scr.modality_availability == {"audio": True, "video": True, "text": True}
    d = scr.to_dict()
    assert d["probability"] == scr.probability
    assert d["decision"] == scr.decision


def test_screen_sample_needs_checkpoint(feature_root):
    with pytest.raises(ClientUnavailable):
        pl.screen_sample(str(feature_root), "s0000", "/nope.ckpt")


def test_generate_response_retry_then_fail():
    assessment = pl.run_pipeline(DISTORTED, _llm_config()).assessment
    bad = ScriptedLLMClient(["no sections here at all"])
    with pytest.raises(UnparseableAfterRetries):
        pl.generate_response(DISTORTED, assessment, llm=bad, retries=1)


def test_generate_response_recovers_on_second_try():
    assessment = pl.run_pipeline(DISTORTED, _llm_config()).assessment
    good = (
        "1. Reflective Inquiry: what happened exactly?\n"
        "2. Challenging Thoughts: is one failure really everything?\n"
        "3. Cognitive Restructuring: one setback is one data point.\n"
    )
    llm = ScriptedLLMClient(["garbage", good])
    resp = pl.generate_response(DISTORTED, assessment, llm=llm, retries=2)
    assert resp.reflective_inquiry == "what happened exactly?"
    assert resp.challenging_thoughts == "is one failure really everything?"
    assert resp.cognitive_restructuring == "one setback is one data point."


def test_parse_response_sections_full():
    text = (
        "1. Reflective Inquiry: alpha\n"
        "2. Challenging Thoughts: beta\n"
        "3. Cognitive Restructuring: gamma\n"
    )
    parsed = pl.parse_response_sections(text)
    assert parsed == {
        "reflective_inquiry": "alpha",
        "challenging_thoughts": "beta",
        "cognitive_restructuring": "gamma",
    }


def test_parse_response_sections_rejects_partial():
    with pytest.raises(UnparseableOutput):
        pl.parse_response_sections("Reflective Inquiry: only one section")


def test_pipeline_stage_error_tags_assessment():
    class Broken:
        def complete(self, prompt, params=None):
            raise RuntimeError("backend exploded")

    with pytest.raises(StageError) as exc:
        pl.run_pipeline(DISTORTED, _llm_config(llm=Broken()))
    assert exc.value.stage == "assessment"


def test_pipeline_requires_llm():
    with pytest.raises(StageError) as exc:
        pl.run_pipeline(DISTORTED, pl.PipelineConfig())
    assert isinstance(exc.value.cause, ClientUnavailable)


def test_pipeline_result_serializes():
    result = pl.run_pipeline(DISTORTED, _llm_config())
    d = result.to_dict()
    assert d["assessment"]["verdict"] == "yes"
    assert d["response"]["full_text"] == result.response.full_text
    assert d["safety"] is False
    assert d["screening"] is None


# ---------------------------------------------------------------------------
# sessions


def _agent_fn(config):
    return lambda text: pl.run_pipeline(text, config)


def test_session_create_post_get(tmp_path):
    store = SessionStore(tmp_path / "sessions")
    sid = store.create()
    assert store.exists(sid)
    config = _llm_config()
    idx, record = store.post(sid, DISTORTED, _agent_fn(config))
    assert idx == 1
    assert record["role"] == "agent"
    assert record["assessment"]["verdict"] == "yes"
    session = store.get(sid)
    assert session.session_id == sid
    assert len(session.turns) == 2
    assert session.turns[0]["role"] == "user"
    assert session.turns[0]["text"] == DISTORTED
    assert session.turns[1]["role"] == "agent"
    assert session.turns[1]["text"]


def test_session_unknown_id(tmp_path):
    store = SessionStore(tmp_path / "sessions")
    with pytest.raises(UnknownSession):
        store.get("deadbeef")
    with pytest.raises(UnknownSession):
        store.post("deadbeef", "hi", lambda t: None)


def test_session_empty_text(tmp_path):
    store = SessionStore(tmp_path / "sessions")
    sid = store.create()
    with pytest.raises(EmptyUtterance):
        store.post(sid, "  ", lambda t: None)


def test_session_failed_pipeline_appends_nothing(tmp_path):
    store = SessionStore(tmp_path / "sessions")
    sid = store.create()

    def exploding(text):
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        store.post(sid, "hello", exploding)
    assert store.get(sid).turns == []


def test_session_restart_replay(tmp_path):
    root = tmp_path / "sessions"
    store = SessionStore(root)
    sid = store.create()
    config = _llm_config()
    store.post(sid, DISTORTED, _agent_fn(config))
    store.post(sid, "the meeting moved and that is fine", _agent_fn(config))
    before = store.get(sid).to_dict()
    replayed = SessionStore(root).get(sid).to_dict()
    assert replayed == before
    assert len(replayed["turns"]) == 4


def test_session_concurrent_posts_serialize(tmp_path):
    store = SessionStore(tmp_path / "sessions")
    sid = store.create()
    config = _llm_config()
    n = 8
    barrier = threading.Barrier(n)
    errors = []

    def worker(i):
        try:
            barrier.wait()
            store.post(sid, f"I always fail at task {i}", _agent_fn(config))
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    turns = store.get(sid).turns
    assert len(turns) == 2 * n
    assert [t["index"] for t in turns] == list(range(2 * n))
    assert [t["role"] for t in turns] == ["user", "agent"] * n


# ---------------------------------------------------------------------------
# HTTP API


@pytest.fixture
def client(tmp_path):
    from fastapi.testclient import TestClient

    store = SessionStore(tmp_path / "sessions")
    service = agent_api.AgentService(store, _llm_config())
    app = agent_api.create_app(service)
    return TestClient(app)


def test_api_full_conversation(client):
    sid = client.post("/sessions").json()["session_id"]
    out = client.post(f"/sessions/{sid}/messages", json={"text": DISTORTED})
    assert out.status_code == 200
    body = out.json()
    assert body["turn_index"] == 1
    assert body["assessment"]["verdict"] == "yes"
    assert body["response"]["full_text"]
    assert body["safety"] is False
    hist = client.get(f"/sessions/{sid}").json()
    assert hist["session_id"] == sid
    assert len(hist["turns"]) == 2


def test_api_unknown_session_404(client):
    out = client.post("/sessions/nope/messages", json={"text": "hi"})
    assert out.status_code == 404
    assert out.json()["code"] == "unknown_session"
    out = client.get("/sessions/nope")
    assert out.status_code == 404


def test_api_empty_text_400(client):
    sid = client.post("/sessions").json()["session_id"]
    out = client.post(f"/sessions/{sid}/messages", json={"text": "   "})
    assert out.status_code == 400
    assert out.json()["code"] == "empty_utterance"


def test_api_screen_unavailable_503(client):
    out = client.post("/screen", json={"sample_id": "s0000"})
    assert out.status_code == 503
    assert out.json()["code"] == "client_unavailable"


def test_api_screen_with_checkpoint(tmp_path, feature_root):
    from fastapi.testclient import TestClient

    ckpt = _screening_checkpoint(tmp_path)
    config = _llm_config(
        features_root=str(feature_root), checkpoint_path=str(ckpt)
    )
    service = agent_api.AgentService(SessionStore(tmp_path / "s"), config)
    c = TestClient(agent_api.create_app(service))
    out = c.post("/screen", json={"sample_id": "s0000"})
    assert out.status_code == 200
    body = out.json()
    assert 0.0 < body["probability"] < 1.0
    assert body["decision"] in ("depression", "normal")


def test_api_health(client):
    out = client.get("/health")
    assert out.status_code == 200
    body = out.json()
    assert body["status"] == "ok"
    assert body["backends"]["llm"] == "HeuristicLLMClient"
    assert body["backends"]["checkpoint"] is False


def test_api_safety_turn(client):
    sid = client.post("/sessions").json()["session_id"]
    out = client.post(
        f"/sessions/{sid}/messages",
        json={"text": "i keep thinking about ending my life"},
    )
    assert out.status_code == 200
    body = out.json()
    assert body["safety"] is True
    assert body["assessment"] is None
    assert "988" in body["response"]["full_text"]


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
