"""Registered response schemas for structured model outputs.

Every structured call names one of these schemas; the gateway validates the
model's JSON against it and drives bounded repair retries on failure.
"""

from __future__ import annotations

from ..core.types import (
    CriterionDomain,
    CriterionKind,
    DataFormat,
    RecordCategory,
    TemporalConstraint,
    VisualElement,
)

CRITERIA_SPLIT = "criteria_split"
RELEVANCE_CRITERION = "relevance_criterion"
GUIDELINES = "guidelines"
DOMAIN_CLASSIFICATION = "domain_classification"
DATA_FORMAT_CLASSIFICATION = "data_format_classification"
TEMPORAL_CLASSIFICATION = "temporal_classification"
RELEVANCE_CHECK = "relevance_check"
CRITERION_ASSESSMENT = "criterion_assessment"
RECORD_TYPE = "record_type"
VISUAL_ELEMENTS = "visual_elements"


def _values(enum_cls) -> list[str]:
    return [m.value for m in enum_cls]


RESPONSE_SCHEMAS: dict[str, dict] = {
    CRITERIA_SPLIT: {
        "type": "object",
        "required": ["criteria"],
        "properties": {
            "criteria": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["description", "kind"],
                    "properties": {
                        "description": {"type": "string", "minLength": 1},
                        "kind": {"enum": _values(CriterionKind)},
                        "explanation": {"type": "string"},
                    },
                },
            }
        },
    },
    RELEVANCE_CRITERION: {
        "type": "object",
        "required": ["patientRelevanceCriterion"],
        "properties": {
            "patientRelevanceCriterion": {"type": "string", "minLength": 1}
        },
    },
    GUIDELINES: {
        "type": "object",
        "required": ["guidelines"],
        "properties": {
            "guidelines": {
                "type": "array",
                "minItems": 1,
                "maxItems": 4,
                "items": {"type": "string", "minLength": 1},
            }
        },
    },
    DOMAIN_CLASSIFICATION: {
        "type": "object",
        "required": ["domain"],
        "properties": {"domain": {"enum": _values(CriterionDomain)}},
    },
    DATA_FORMAT_CLASSIFICATION: {
        "type": "object",
        "required": ["requested_data_format"],
        "properties": {"requested_data_format": {"enum": _values(DataFormat)}},
    },
    TEMPORAL_CLASSIFICATION: {
        "type": "object",
        "required": ["temporal_constraint"],
        "properties": {"temporal_constraint": {"enum": _values(TemporalConstraint)}},
    },
    RELEVANCE_CHECK: {
        "type": "object",
        "required": ["relevant", "rationale"],
        "properties": {
            "relevant": {"type": "boolean"},
            "rationale": {"type": "string"},
        },
    },
    CRITERION_ASSESSMENT: {
        "type": "object",
        "required": ["rationale", "is_met"],
        "properties": {
            "rationale": {"type": "string", "minLength": 1},
            "is_met": {"type": "boolean"},
            "insufficient_information": {"type": "boolean"},
        },
    },
    RECORD_TYPE: {
        "type": "object",
        "required": ["category"],
        "properties": {"category": {"enum": _values(RecordCategory)}},
    },
    VISUAL_ELEMENTS: {
        "type": "object",
        "required": ["visual_elements"],
        "properties": {
            "rationale": {"type": "string"},
            "visual_elements": {
                "type": "array",
                "items": {"enum": _values(VisualElement)},
            },
        },
    },
}
