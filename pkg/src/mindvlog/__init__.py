"""Desk-scale toolkit for multimodal depression screening from vlogs
and a CBT-style conversational agent for cognitive-distortion work.

Subpackages: corpus management, per-modality feature extraction, a
fusion transformer with toy-scale training, classification/generation
metrics, retrieval over grounding documents, distortion assessment via
few-shot prompting, and the chat agent with its HTTP API.
"""

__version__ = "0.1.0"

from . import errors

__all__ = ["errors", "__version__"]
