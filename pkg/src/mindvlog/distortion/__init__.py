"""Cognitive-distortion identification: prompts, parsing, scoring."""

from .assess import DEFAULT_RETRIES, assess, assess_many
from .evaluate import (
    TABLE_COLUMNS,
    VARIANT_SUFFIX,
    evaluate_distortion,
    format_variant_table,
    run_variant_table,
)
from .human_eval import (
    FIELD_LABELS,
    aggregate_human_eval,
    export_human_eval_forms,
    format_human_eval,
    load_forms,
)
from .parse import parse_assessment, render_assessment_text
from .prompts import (
    PromptBundle,
    build_prompt,
    build_response_prompt,
    load_default_fewshots,
    load_template,
    render_prompt,
    types_block,
)
from .types import (
    ABCAnalysis,
    DISPLAY_NAMES,
    DISTORTION_TYPES,
    NONE_TYPE,
    VARIANTS,
    DistortionAssessment,
    normalize_distortion,
)

__all__ = [
    "ABCAnalysis",
    "DEFAULT_RETRIES",
    "DISPLAY_NAMES",
    "DISTORTION_TYPES",
    "DistortionAssessment",
    "FIELD_LABELS",
    "NONE_TYPE",
    "PromptBundle",
    "TABLE_COLUMNS",
    "VARIANTS",
    "VARIANT_SUFFIX",
    "aggregate_human_eval",
    "assess",
    "assess_many",
    "build_prompt",
    "build_response_prompt",
    "evaluate_distortion",
    "export_human_eval_forms",
    "format_human_eval",
    "format_variant_table",
    "load_default_fewshots",
    "load_forms",
    "load_template",
    "normalize_distortion",
    "parse_assessment",
    "render_assessment_text",
    "render_prompt",
    "run_variant_table",
    "types_block",
]
