"""Distortion taxonomy, analysis records, and prompting variants.

Ten fixed categories plus ``none``.  Free-text names coming back from a
language model are normalized through an alias table (common surface
forms like "black-and-white thinking") so the label space stays closed;
weighted F1 needs that.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional

from ..errors import UnknownDistortionName

DISTORTION_TYPES = (
    "all_or_nothing",
    "overgeneralization",
    "mental_filter",
    "should_statements",
    "labeling",
    "personalization",
    "magnification",
    "emotional_reasoning",
    "mind_reading",
    "fortune_telling",
)
NONE_TYPE = "none"

DISPLAY_NAMES = {
    "all_or_nothing": "All-or-Nothing Thinking",
    "overgeneralization": "Overgeneralization",
    "mental_filter": "Mental Filter",
    "should_statements": "Should Statements",
    "labeling": "Labeling",
    "personalization": "Personalization",
    "magnification": "Magnification",
    "emotional_reasoning": "Emotional Reasoning",
    "mind_reading": "Mind Reading",
    "fortune_telling": "Fortune Telling",
    NONE_TYPE: "none",
}

_ALIASES = {
    "black and white thinking": "all_or_nothing",
    "black or white thinking": "all_or_nothing",
    "polarized thinking": "all_or_nothing",
    "dichotomous thinking": "all_or_nothing",
    "all or nothing": "all_or_nothing",
    "all or nothing thinking": "all_or_nothing",
    "over generalization": "overgeneralization",
    "overgeneralizing": "overgeneralization",
    "overgeneralisation": "overgeneralization",
    "filtering": "mental_filter",
    "negative filtering": "mental_filter",
    "selective abstraction": "mental_filter",
    "should statement": "should_statements",
    "shoulds": "should_statements",
    "must statements": "should_statements",
    "mislabeling": "labeling",
    "labelling": "labeling",
    "self blame": "personalization",
    "blaming oneself": "personalization",
    "catastrophizing": "magnification",
    "minimization": "magnification",
    "magnification or minimization": "magnification",
    "magnification and minimization": "magnification",
    "mindreading": "mind_reading",
    "jumping to conclusions mind reading": "mind_reading",
    "fortune teller error": "fortune_telling",
    "jumping to conclusions fortune telling": "fortune_telling",
    "no distortion": NONE_TYPE,
    "not applicable": NONE_TYPE,
    "n a": NONE_TYPE,
    "nothing": NONE_TYPE,
}

VARIANTS = ("BASE", "FCOT", "FCOT_ABC", "FCOT_ABCD", "FCOT_ABCDR")

_NORM_RE = re.compile(r"[^a-z0-9 ]+")


def _norm(name):
    s = str(name).strip().lower()
    s = s.replace("-", " ").replace("_", " ").replace("/", " ")
    s = _NORM_RE.sub(" ", s)
    return " ".join(s.split())


_LOOKUP = {}
for _code in DISTORTION_TYPES + (NONE_TYPE,):
    _LOOKUP[_norm(_code)] = _code
    _LOOKUP[_norm(DISPLAY_NAMES[_code])] = _code
for _alias, _code in _ALIASES.items():
    _LOOKUP[_norm(_alias)] = _code


def normalize_distortion(name):
    """Map a surface label to its canonical code.

    Raises UnknownDistortionName for anything outside the taxonomy.
    """
    key = _norm(name)
    if key in _LOOKUP:
        return _LOOKUP[key]
    raise UnknownDistortionName(str(name))


@dataclass
class ABCAnalysis:
    activation_event: str
    belief: str
    belief_kind: str          # "rational" | "irrational"
    consequence: str
    distorted_part: Optional[str] = None
    reasoning: Optional[str] = None


@dataclass
class DistortionAssessment:
    abc: ABCAnalysis
    verdict: str              # "yes" | "no"
    distortion: str           # taxonomy code or "none"
    raw_llm_text: str
    variant: str
    utterance: str = ""
    warnings: List[str] = field(default_factory=list)
    llm_params: Optional[dict] = None

    def to_dict(self):
        return {
            "utterance": self.utterance,
            "activation_event": self.abc.activation_event,
            "belief": self.abc.belief,
            "belief_kind": self.abc.belief_kind,
            "consequence": self.abc.consequence,
            "distorted_part": self.abc.distorted_part,
            "reasoning": self.abc.reasoning,
            "verdict": self.verdict,
            "distortion": self.distortion,
            "variant": self.variant,
            "warnings": list(self.warnings),
        }
