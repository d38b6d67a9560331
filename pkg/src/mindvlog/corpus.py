"""Vlog corpus ingestion, statistics, deterministic splits, transcription.

A manifest is UTF-8 JSON-lines, one record per vlog::

    {"sample_id": "v0001", "speaker_id": "s01", "gender": "female",
     "label": "depression", "disorder_type": "MDD",
     "audio_path": "audio/v0001.wav", "video_path": "video/v0001.npy",
     "transcript": "..."}

``sample_id``, ``speaker_id``, ``gender``, ``label`` and ``audio_path``
are required; the rest are optional.  Blank lines are ignored.  Splitting
is stratified (default by label and gender) with largest-remainder
rounding and a seeded per-stratum shuffle, so any (corpus, spec) pair
maps to exactly one partition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateId,
    EmptyCorpus,
    MalformedRecord,
    MissingRequiredField,
)

GENDERS = ("male", "female", "unspecified")
LABELS = ("depression", "non_depression")
DISORDER_TYPES = ("MDD", "bipolar", "postpartum", "anxiety", "other")

REQUIRED_FIELDS = ("sample_id", "speaker_id", "gender", "label", "audio_path")


@dataclass
class MediaSample:
    """One vlog: identity, demographic tags, label, artifact paths."""

    sample_id: str
    speaker_id: str
    gender: str
    label: str
    audio_path: str
    video_path: str | None = None
    disorder_type: str | None = None
    transcript: str | None = None
    # Manual ASR corrections live here; effective_transcript() prefers it.
    transcript_override: str | None = None

    def effective_transcript(self):
        if self.transcript_override is not None:
            return self.transcript_override
        return self.transcript

    def to_record(self):
        rec = {
            "sample_id": self.sample_id,
            "speaker_id": self.speaker_id,
            "gender": self.gender,
            "label": self.label,
            "audio_path": str(self.audio_path),
        }
        for key in ("video_path", "disorder_type", "transcript", "transcript_override"):
            val = getattr(self, key)
            if val is not None:
                rec[key] = str(val) if key == "video_path" else val
        return rec


@dataclass
class CorpusStats:
    """Counts by (label, gender) plus totals.

    ``label_totals`` defaults to the cell sums; pass explicit values only
    to represent an external claim that may disagree with its own cells
    (validate_counts then reports the discrepancy instead of hiding it).
    """

    cells: dict = field(default_factory=dict)
    label_totals: dict | None = None

    def __post_init__(self):
        if self.label_totals is None:
            self.label_totals = {
                label: sum(self.cells.get((label, g), 0) for g in GENDERS)
                for label in LABELS
            }

    @property
    def total(self):
        return sum(self.label_totals.values())

    def cell(self, label, gender):
        return self.cells.get((label, gender), 0)

    @classmethod
    def from_samples(cls, samples):
        cells = {}
        for s in samples:
            key = (s.label, s.gender)
            cells[key] = cells.get(key, 0) + 1
        return cls(cells=cells)

    @classmethod
    def from_dict(cls, data):
        """Build from ``{"depression": {"male": 273, ...}, ...}``; an
        optional ``"totals"`` key carries explicit per-label totals."""
        cells = {}
        for label, by_gender in data.items():
            if label == "totals":
                continue
            for gender, count in by_gender.items():
                cells[(label, gender)] = int(count)
        totals = data.get("totals")
        return cls(cells=cells, label_totals=dict(totals) if totals else None)

    def to_dict(self):
        out = {}
        for (label, gender), count in sorted(self.cells.items()):
            out.setdefault(label, {})[gender] = count
        out["totals"] = dict(self.label_totals)
        return out


@dataclass
class ValidationReport:
    mismatches: list

    @property
    def ok(self):
        return not self.mismatches

    def lines(self):
        return [
            f"{name}: got {got}, expected {want}" for name, got, want in self.mismatches
        ]


@dataclass
class Corpus:
    """An immutable-once-loaded list of samples plus its statistics."""

    samples: list
    stats: CorpusStats

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, idx):
        return self.samples[idx]

    @classmethod
    def from_samples(cls, samples):
        return cls(samples=list(samples), stats=CorpusStats.from_samples(samples))


def _as_fraction(r):
    if isinstance(r, Fraction):
        return r
    if isinstance(r, int):
        return Fraction(r)
    # Route floats through str() so 0.7 means 7/10, not its binary neighbour.
    return Fraction(str(r))


@dataclass
class SplitSpec:
    """Ratios (normalized internally), seed, and stratification keys."""

    ratios: tuple = (7, 1, 2)
    seed: int = 0
    stratify_by: tuple = ("label", "gender")

    def normalized_ratios(self):
        fracs = [_as_fraction(r) for r in self.ratios]
        if len(fracs) != 3 or any(f <= 0 for f in fracs):
            raise ValueError(f"ratios must be three positive numbers, got {self.ratios}")
        total = sum(fracs)
        return tuple(f / total for f in fracs)


def load_manifest(path) -> Corpus:
    """Parse a JSONL manifest into a Corpus, rejecting duplicates."""
    path = Path(path)
    samples = []
    seen = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            if not isinstance(rec, dict):
                raise MalformedRecord(line_no, "record is not an object")
            for fieldname in REQUIRED_FIELDS:
                if fieldname not in rec or rec[fieldname] in (None, ""):
                    raise MissingRequiredField(fieldname, line_no)
            if rec["gender"] not in GENDERS:
                raise MalformedRecord(line_no, f"bad gender {rec['gender']!r}")
            if rec["label"] not in LABELS:
                raise MalformedRecord(line_no, f"bad label {rec['label']!r}")
            if rec.get("disorder_type") not in (None,) + DISORDER_TYPES:
                raise MalformedRecord(line_no, f"bad disorder_type {rec['disorder_type']!r}")
            if rec["sample_id"] in seen:
                raise DuplicateId(rec["sample_id"])
            seen.add(rec["sample_id"])
            samples.append(
                MediaSample(
                    sample_id=rec["sample_id"],
                    speaker_id=rec["speaker_id"],
                    gender=rec["gender"],
                    label=rec["label"],
                    audio_path=rec["audio_path"],
                    video_path=rec.get("video_path"),
                    disorder_type=rec.get("disorder_type"),
                    transcript=rec.get("transcript"),
                    transcript_override=rec.get("transcript_override"),
                )
            )
    return Corpus.from_samples(samples)


def write_manifest(corpus, path):
    """Inverse of load_manifest: one JSON record per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample in corpus:
            fh.write(json.dumps(sample.to_record(), sort_keys=True) + "\n")


def validate_counts(stats: CorpusStats, expected: CorpusStats) -> ValidationReport:
    """Compare observed stats against expected ones, cell by cell."""
    mismatches = []
    keys = sorted(set(stats.cells) | set(expected.cells))
    for label, gender in keys:
        got = stats.cell(label, gender)
        want = expected.cell(label, gender)
        if got != want:
            mismatches.append((f"{label}/{gender}", got, want))
    for label in LABELS:
        got = stats.label_totals.get(label, 0)
        want = expected.label_totals.get(label, 0)
        if got != want:
            mismatches.append((f"{label}/total", got, want))
    if stats.total != expected.total:
        mismatches.append(("total", stats.total, expected.total))
    return ValidationReport(mismatches=mismatches)


def largest_remainder_sizes(n, ratios):
    """Integer piece sizes for ``n`` items under exact-fraction ratios.

    Floor the ideal sizes, then hand leftover seats to the pieces with the
    largest fractional remainders; remainder ties go to the earlier piece
    (train before valid before test).  Every size lands within 1 of ideal.
    """
    ideals = [r * n for r in ratios]
    sizes = [int(i) for i in ideals]  # Fraction floor for non-negatives
    leftover = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(ideals[i] - sizes[i]), i))
    for i in range(leftover):
        sizes[order[i]] += 1
    return sizes


def split(corpus: Corpus, spec: SplitSpec):
    """Stratified, seeded, deterministic 3-way partition."""
    if len(corpus) == 0:
        raise EmptyCorpus("cannot split an empty corpus")
    ratios = spec.normalized_ratios()
    strata = {}
    for idx, sample in enumerate(corpus):
        key = tuple(str(getattr(sample, f)) for f in spec.stratify_by)
        strata.setdefault(key, []).append(idx)

    rng = np.random.default_rng(spec.seed)
    pieces = ([], [], [])
    for key in sorted(strata):
        indices = np.array(strata[key])
        rng.shuffle(indices)
        sizes = largest_remainder_sizes(len(indices), ratios)
        start = 0
        for piece, size in zip(pieces, sizes):
            piece.extend(int(i) for i in indices[start : start + size])
            start += size

    out = []
    for piece in pieces:
        members = [corpus[i] for i in sorted(piece)]
        out.append(Corpus.from_samples(members))
    return {"train": out[0], "valid": out[1], "test": out[2]}


def transcribe(sample: MediaSample, client, force=False) -> str:
    """Fill ``sample.transcript`` through the client; idempotent by default."""
    if sample.transcript is not None and not force:
        return sample.transcript
    text = client.transcribe(sample.audio_path)
    sample.transcript = text
    return text


def copy_sample(sample, **changes):
    return replace(sample, **changes)


# Published demographics of the 1261-vlog corpus; used as the default
# expected-counts fixture by `corpus validate`.
REFERENCE_STATS = CorpusStats(
    cells={
        ("depression", "male"): 273,
        ("depression", "female"): 406,
        ("non_depression", "male"): 232,
        ("non_depression", "female"): 350,
    }
)
