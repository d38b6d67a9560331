"""HTTP surface for the chat agent and screening pipeline.

JSON in, JSON out; every domain error becomes {code, message, stage}
with a mapped status so clients can branch on the code string rather
than scraping messages.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..errors import MindvlogError, StageError
from .pipeline import PipelineConfig, run_pipeline, screen_sample
from .sessions import SessionStore

_STATUS_BY_CODE = {
    "unknown_session": 404,
    "missing_features": 404,
    "empty_utterance": 400,
    "empty_input": 400,
    "unknown_variant": 400,
    "invalid_config": 400,
    "concurrent_modification": 409,
    "client_unavailable": 503,
    "unparseable_after_retries": 502,
}


class MessageIn(BaseModel):
    text: str


class ScreenIn(BaseModel):
    sample_id: str
    threshold: Optional[float] = None


class AgentService:
    """Bundles the session store with a pipeline configuration."""

    def __init__(self, store: SessionStore, config: PipelineConfig):
        self.store = store
        self.config = config

    def create_session(self):
        return {"session_id": self.store.create()}

    def post_message(self, session_id, text):
        turn_index, record = self.store.post(
            session_id, text, lambda t: run_pipeline(t, self.config)
        )
        return {
            "turn_index": turn_index,
            "assessment": record["assessment"],
            "response": record["response"],
            "screening": record["screening"],
            "safety": record["safety"],
        }

    def get_session(self, session_id):
        return self.store.get(session_id).to_dict()

    def screen(self, sample_id, threshold=None):
        result = screen_sample(
            self.config.features_root,
            sample_id,
            self.config.checkpoint_path,
            threshold=self.config.threshold if threshold is None else threshold,
            modalities=self.config.modalities,
            audio_mode=self.config.audio_mode,
        )
        return result.to_dict()

    def health(self):
        return {
            "status": "ok",
            "backends": {
                "llm": type(self.config.llm).__name__ if self.config.llm else None,
                "retriever": self.config.retriever is not None,
                "checkpoint": self.config.checkpoint_path is not None,
                "features_root": self.config.features_root is not None,
            },
        }


def create_app(service: AgentService) -> FastAPI:
    app = FastAPI(title="mindvlog agent", docs_url=None, redoc_url=None)

    @app.exception_handler(MindvlogError)
    async def _domain_error(request, exc: MindvlogError):
        inner = exc.cause if isinstance(exc, StageError) else exc
        code = getattr(inner, "code", getattr(exc, "code", "error"))
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(code, 500),
            content={
                "code": code,
                "message": str(inner),
                "stage": getattr(exc, "stage", None),
            },
        )

    @app.post("/sessions")
    def create_session():
        return service.create_session()

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageIn):
        return service.post_message(session_id, body.text)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return service.get_session(session_id)

    @app.post("/screen")
    def screen(body: ScreenIn):
        return service.screen(body.sample_id, body.threshold)

    @app.get("/health")
    def health():
        return service.health()

    return app
