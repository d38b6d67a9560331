"""Agent service: pipeline orchestration, sessions, HTTP API."""

from .api import AgentService, create_app
from .pipeline import (
    CBTResponse,
    HELP_RESOURCES_MESSAGE,
    PipelineConfig,
    PipelineResult,
    SAFETY_KEYWORDS,
    ScreeningResult,
    generate_response,
    make_retriever,
    parse_response_sections,
    run_pipeline,
    safety_flagged,
    safety_response,
    screen_sample,
    supportive_response,
)
from .sessions import SessionStore, TherapySession

__all__ = [
    "AgentService",
    "CBTResponse",
    "HELP_RESOURCES_MESSAGE",
    "PipelineConfig",
    "PipelineResult",
    "SAFETY_KEYWORDS",
    "ScreeningResult",
    "SessionStore",
    "TherapySession",
    "create_app",
    "generate_response",
    "make_retriever",
    "parse_response_sections",
    "run_pipeline",
    "safety_flagged",
    "safety_response",
    "screen_sample",
    "supportive_response",
]
