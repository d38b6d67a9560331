"""Append-only chat sessions with per-session single-flight.

Each session is one JSONL file: a "created" record followed by "turn"
records.  Nothing is ever rewritten, so a process restart replays
history by re-reading the files.  Posts to the same session serialize
on a per-session lock; posts to different sessions run concurrently.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import List

from ..errors import ConcurrentModificationRetry, EmptyUtterance, UnknownSession

LOCK_TIMEOUT_S = 120.0


@dataclass
class TherapySession:
    session_id: str
    created_at: float
    turns: List[dict]

    def to_dict(self):
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "turns": list(self.turns),
        }


class SessionStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _lock_for(self, session_id) -> threading.Lock:
        with self._registry_lock:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = threading.Lock()
                self._locks[session_id] = lock
            return lock

    def _append(self, session_id, records):
        with self._path(session_id).open("a", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def create(self) -> str:
        session_id = uuid.uuid4().hex[:16]
        record = {"kind": "created", "session_id": session_id, "ts": time.time()}
        with self._path(session_id).open("x", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return session_id

    def exists(self, session_id) -> bool:
        return self._path(session_id).exists()

    def get(self, session_id) -> TherapySession:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSession(session_id)
        created_at = 0.0
        turns = []
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("kind") == "created":
                created_at = record.get("ts", 0.0)
            elif record.get("kind") == "turn":
                turns.append(record)
        return TherapySession(session_id=session_id, created_at=created_at, turns=turns)

    def post(self, session_id, user_text, agent_fn):
        """Append a user turn and the agent's reply atomically.

        agent_fn(user_text) -> PipelineResult.  Both turn records hit
        the log together, after the pipeline succeeds, so the
        alternating-role invariant holds even across failures.
        Returns (agent_turn_index, agent_record).
        """
        if not isinstance(user_text, str) or not user_text.strip():
            raise EmptyUtterance("message text is empty")
        if not self.exists(session_id):
            raise UnknownSession(session_id)
        lock = self._lock_for(session_id)
        if not lock.acquire(timeout=LOCK_TIMEOUT_S):
            raise ConcurrentModificationRetry(
                f"session {session_id} is busy; retry the post"
            )
        try:
            received_ts = time.time()
            outcome = agent_fn(user_text)
            start_index = len(self.get(session_id).turns)
            user_record = {
                "kind": "turn",
                "index": start_index,
                "role": "user",
                "text": user_text,
                "ts": received_ts,
            }
            agent_record = {
                "kind": "turn",
                "index": start_index + 1,
                "role": "agent",
                "text": outcome.response.full_text if outcome.response else "",
                "ts": time.time(),
                "assessment": outcome.assessment.to_dict() if outcome.assessment else None,
                "response": outcome.response.to_dict() if outcome.response else None,
                "screening": outcome.screening.to_dict() if outcome.screening else None,
                "safety": outcome.safety,
            }
            self._append(session_id, [user_record, agent_record])
            return start_index + 1, agent_record
        finally:
            lock.release()
