"""Pluggable backend clients and their in-tree stub implementations.

Heavy pretrained backends (ASR, speech encoders, contextual text
encoders, hosted LLMs) are adapters behind four small protocols.  The
stubs here are deterministic and dependency-free so the whole pipeline is
testable on a laptop; real backends implement the same surface.

All stubs are safe for concurrent calls (no mutable shared state after
construction), except :class:`ScriptedLLMClient`, which is single-flight
by design (it pops canned responses in order).
"""

import hashlib
import json
import threading
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import ClientUnavailable, TranscriptionFailed
from .textproc import tokenize


# --- protocols ----------------------------------------------------------------

@runtime_checkable
class TranscriptionClient(Protocol):
    def transcribe(self, audio_path) -> str: ...


@runtime_checkable
class AcousticEncoderClient(Protocol):
    dimension: int

    def encode(self, waveform, rate) -> np.ndarray:
        """Return frame-level context features, shape [frames, dimension]."""
        ...


@runtime_checkable
class TextEncoderClient(Protocol):
    dimension: int

    def encode_tokens(self, tokens) -> np.ndarray:
        """Return one vector per token, shape [len(tokens), dimension]."""
        ...


@runtime_checkable
class LLMClient(Protocol):
    def complete(self, prompt: str, params: dict | None = None) -> str: ...


# --- transcription stubs -------------------------------------------------------

class StubTranscriber:
    """Returns a fixed string, or a per-path mapping.  ``available=False``
    simulates an unreachable backend."""

    def __init__(self, text="", mapping=None, available=True):
        self.text = text
        self.mapping = dict(mapping or {})
        self.available = available

    def transcribe(self, audio_path):
        if not self.available:
            raise ClientUnavailable("transcription backend unreachable")
        key = str(audio_path)
        if self.mapping:
            if key not in self.mapping:
                raise TranscriptionFailed(f"no stub transcript for {key}")
            return self.mapping[key]
        return self.text


class SidecarTranscriber:
    """Reads the transcript from ``<audio_path>.txt`` next to the audio file.

    Handy when transcripts were produced offline by a real ASR run.
    """

    def transcribe(self, audio_path):
        sidecar = Path(str(audio_path) + ".txt")
        if not sidecar.exists():
            raise TranscriptionFailed(f"sidecar transcript not found: {sidecar}")
        return sidecar.read_text(encoding="utf-8").strip()


# --- embedding stubs -----------------------------------------------------------

def _hash_unit_vector(key: str, dimension: int, seed: int) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dimension)
    return v / np.linalg.norm(v)


class HashTextEncoder:
    """Deterministic per-token embeddings derived from a token hash.

    Identical tokens always map to identical unit vectors, distinct tokens
    to (almost surely) distinct ones, which is exactly what the metric and
    retrieval tests need.  Context-free by construction.
    """

    def __init__(self, dimension=768, seed=0):
        self.dimension = dimension
        self.seed = seed
        self._cache = {}
        self._lock = threading.Lock()

    def encode_tokens(self, tokens):
        out = np.empty((len(tokens), self.dimension), dtype=np.float64)
        for i, tok in enumerate(tokens):
            with self._lock:
                vec = self._cache.get(tok)
                if vec is None:
                    vec = _hash_unit_vector(tok, self.dimension, self.seed)
                    self._cache[tok] = vec
            out[i] = vec
        return out

    def encode_text(self, text):
        return self.encode_tokens(tokenize(text))


class LookupTextEncoder:
    """Fixed token -> vector table; unknown tokens raise.  Test fixture."""

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        self.dimension = len(next(iter(self.table.values())))

    def encode_tokens(self, tokens):
        return np.stack([self.table[t] for t in tokens])


class FrameStubAcousticEncoder:
    """Emits a fixed frame matrix regardless of input.  Test fixture."""

    def __init__(self, frames):
        self.frames = np.asarray(frames, dtype=np.float64)
        self.dimension = self.frames.shape[1]

    def encode(self, waveform, rate):
        return self.frames


class HashAcousticEncoder:
    """Deterministic stand-in for a self-supervised speech encoder.

    Projects 25 ms windows of the waveform through a seeded random matrix;
    output depends only on the signal content, the seed, and the declared
    dimension.
    """

    def __init__(self, dimension=64, seed=0, win=400, hop=320):
        self.dimension = dimension
        self.win = win
        self.hop = hop
        rng = np.random.default_rng(seed)
        self._proj = rng.standard_normal((win, dimension)) / np.sqrt(win)

    def encode(self, waveform, rate):
        x = np.asarray(waveform, dtype=np.float64)
        if x.size == 0:
            raise ClientUnavailable("empty waveform for acoustic encoder")
        n_frames = max(1, 1 + (x.size - self.win) // self.hop if x.size >= self.win else 1)
        frames = np.zeros((n_frames, self.win), dtype=np.float64)
        for f in range(n_frames):
            seg = x[f * self.hop : f * self.hop + self.win]
            frames[f, : seg.size] = seg
        return frames @ self._proj


class UnavailableClient:
    """Raises ClientUnavailable from every method; error-path fixture."""

    dimension = 0

    def __init__(self, detail="backend unreachable"):
        self.detail = detail

    def _raise(self, *a, **k):
        raise ClientUnavailable(self.detail)

    transcribe = _raise
    encode = _raise
    encode_tokens = _raise
    complete = _raise


# --- LLM stubs -----------------------------------------------------------------

def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ReplayLLMClient:
    """Replays recorded completions keyed by prompt hash.

    The store maps ``sha256(prompt) -> completion``; raw-prompt keys are
    also accepted for hand-written fixtures.  Unknown prompts raise so a
    drifted template is caught immediately.
    """

    def __init__(self, store=None):
        self.store = dict(store or {})

    @classmethod
    def from_file(cls, path):
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def add(self, prompt, completion):
        self.store[prompt_key(prompt)] = completion

    def complete(self, prompt, params=None):
        key = prompt_key(prompt)
        if key in self.store:
            return self.store[key]
        if prompt in self.store:
            return self.store[prompt]
        raise ClientUnavailable(f"no recorded completion for prompt hash {key[:12]}")


class RecordingLLMClient:
    """Wraps a live client and records prompt -> completion pairs."""

    def __init__(self, inner, out_path):
        self.inner = inner
        self.out_path = Path(out_path)
        self._lock = threading.Lock()

    def complete(self, prompt, params=None):
        text = self.inner.complete(prompt, params)
        with self._lock:
            store = {}
            if self.out_path.exists():
                store = json.loads(self.out_path.read_text(encoding="utf-8"))
            store[prompt_key(prompt)] = text
            self.out_path.write_text(json.dumps(store, indent=1), encoding="utf-8")
        return text


class ScriptedLLMClient:
    """Returns canned responses in order; repeats the last one when exhausted."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt, params=None):
        with self._lock:
            idx = min(self.calls, len(self.responses) - 1)
            self.calls += 1
            return self.responses[idx]


# Trigger lexicon for the offline heuristic backend. Coarse on purpose:
# it exists so the chat loop runs end-to-end without any model weights.
_TRIGGER_TABLE = [
    (("always", "never", "every time", "everything", "nothing ever"), "overgeneralization"),
    (("everyone", "nobody", "no one"), "mind_reading"),
    (("should", "must", "have to"), "should_statements"),
    (("failure", "loser", "worthless", "useless"), "labeling"),
    (("ruined", "disaster", "terrible", "worst"), "magnification"),
    (("my fault", "because of me", "blame myself"), "personalization"),
    (("will never", "going to fail", "won't ever"), "fortune_telling"),
    (("i feel like", "i just feel"), "emotional_reasoning"),
    (("completely", "totally", "perfect or"), "all_or_nothing"),
    (("only the bad", "can't see anything good"), "mental_filter"),
]


class HeuristicLLMClient:
    """Deterministic rule-based stand-in for a hosted LLM.

    Produces well-formed identification analyses and three-part therapy
    responses from surface cues in the user text.  Not a model, just a demo
    and testing backend that exercises every parser path.
    """

    def __init__(self):
        self._lock = threading.Lock()

    def _assess(self, utterance):
        low = utterance.lower()
        hit = None
        for triggers, label in _TRIGGER_TABLE:
            for trig in triggers:
                if trig in low:
                    hit = (trig, label)
                    break
            if hit:
                break
        sentences = [s.strip() for s in utterance.replace("!", ".").split(".") if s.strip()]
        first = sentences[0] if sentences else utterance.strip()
        from .distortion.parse import render_assessment_text

        if hit is None:
            return render_assessment_text(
                activation_event=first or "the situation described",
                belief="the speaker's interpretation of the situation",
                belief_kind="rational",
                consequence="some distress, proportionate to the event",
                distorted_part=None,
                distortion="none",
                reasoning="No exaggerated or rigid thought pattern is stated.",
                verdict="no",
            )
        trig, label = hit
        span = next((s for s in sentences if trig in s.lower()), first)
        return render_assessment_text(
            activation_event=first or "the situation described",
            belief=span,
            belief_kind="irrational",
            consequence="emotional distress and withdrawal",
            distorted_part=span,
            distortion=label,
            reasoning=f"The wording '{trig}' marks an exaggerated, rigid pattern.",
            verdict="yes",
        )

    def _respond(self, prompt):
        # Echo the belief back if the prompt carries one.
        belief = ""
        for line in prompt.splitlines():
            if line.lower().startswith("belief:"):
                belief = line.split(":", 1)[1].strip()
                break
        focus = belief or "the thought you described"
        return (
            "1. Reflective Inquiry: It sounds heavy to carry the thought that "
            f"{focus}. Thank you for putting it into words.\n"
            "2. Challenging Thoughts: When you look at the full picture, what "
            "evidence supports that thought, and what evidence does not fit it?\n"
            "3. Cognitive Restructuring: Try restating the thought in more "
            "precise terms, allowing for exceptions, and notice how the "
            "feeling shifts when the wording softens."
        )

    def complete(self, prompt, params=None):
        if "Reflective Inquiry" in prompt:
            return self._respond(prompt)
        marker = "Question:"
        utterance = prompt.rstrip()
        if marker in prompt:
            utterance = prompt.rsplit(marker, 1)[1].strip().splitlines()[0].strip()
        return self._assess(utterance)


def resolve_llm_backend(spec):
    """Build an LLM client from a backend spec string.

    "heuristic" -> rule-based offline client; "replay:<path>" ->
    recorded fixture replay.  Hosted backends plug in here by name.
    """
    if spec in (None, "", "heuristic"):
        return HeuristicLLMClient()
    if spec.startswith("replay:"):
        return ReplayLLMClient.from_file(spec.split(":", 1)[1])
    raise ClientUnavailable(f"unknown LLM backend: {spec!r}")
