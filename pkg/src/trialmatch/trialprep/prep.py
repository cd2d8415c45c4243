"""Trial preprocessing: split criteria, relevance criterion, guidelines, facets."""

from __future__ import annotations

import logging
from dataclasses import replace
from enum import Enum
from typing import Union

from ..core import (
    CriterionDomain,
    CriterionKind,
    DataFormat,
    EligibilityCriterion,
    TemporalConstraint,
    Trial,
)
from ..gateway import Gateway, ModelRequest, ModelRole, TextPart
from ..gateway import schemas as response_schemas
from ..ids import content_id
from . import templates

logger = logging.getLogger(__name__)

MAX_GUIDELINES = 4

# The split template asks for JSON without naming keys; the exact shape is
# pinned here so live providers converge without repair retries.
_SPLIT_FORMAT_NOTE = (
    "Respond with a JSON object of the form "
    '{"criteria": [{"description": str, "kind": "inclusion" | "exclusion", '
    '"explanation": str}]}.'
)


class TrialPrepError(Exception):
    pass


class ClassificationFacet(Enum):
    DOMAIN = "Domain"
    DATA_FORMAT = "DataFormat"
    TEMPORAL = "Temporal"


FacetValue = Union[CriterionDomain, DataFormat, TemporalConstraint]

_FACET_SETUP = {
    ClassificationFacet.DOMAIN: (
        templates.CLASSIFY_DOMAIN,
        response_schemas.DOMAIN_CLASSIFICATION,
        "domain",
        CriterionDomain,
    ),
    ClassificationFacet.DATA_FORMAT: (
        templates.CLASSIFY_DATA_FORMAT,
        response_schemas.DATA_FORMAT_CLASSIFICATION,
        "requested_data_format",
        DataFormat,
    ),
    ClassificationFacet.TEMPORAL: (
        templates.CLASSIFY_TEMPORAL,
        response_schemas.TEMPORAL_CLASSIFICATION,
        "temporal_constraint",
        TemporalConstraint,
    ),
}


def split_criteria(
    gateway: Gateway, raw_criteria_text: str, trial_id: str = ""
) -> list[EligibilityCriterion]:
    """Split a free-text criteria block into individual criteria.

    Nested criteria stay in a single criterion; the model's plain-English
    explanation is kept as metadata next to the verbatim split text.
    Criterion ids are content-derived so re-running prep is idempotent.
    """
    if not raw_criteria_text.strip():
        raise TrialPrepError("criteria text is empty")
    system_prompt = templates.load_template(templates.SPLIT_CRITERIA).text + "\n" + _SPLIT_FORMAT_NOTE
    request = ModelRequest(
        model_role=ModelRole.SPLITTER,
        system_prompt=system_prompt,
        user_parts=(TextPart(raw_criteria_text),),
        response_schema_id=response_schemas.CRITERIA_SPLIT,
    )
    result = gateway.complete_structured(request, context=f"split:{trial_id}")
    rows = result.payload["criteria"]
    if not rows:
        raise TrialPrepError("model returned zero criteria")
    criteria = []
    for index, row in enumerate(rows):
        criteria.append(
            EligibilityCriterion(
                criterion_id=content_id(trial_id, str(index), row["kind"], row["description"]),
                description=row["description"],
                kind=CriterionKind(row["kind"]),
                explanation=row.get("explanation"),
            )
        )
    return criteria


def generate_relevance_criterion(gateway: Gateway, trial: Trial) -> str:
    """Generate the single condition-level filter criterion for a trial."""
    inclusion = trial.inclusion_criteria()
    if not trial.title or not inclusion:
        raise TrialPrepError(
            "relevance criterion needs a trial title and at least one inclusion criterion"
        )
    template = templates.load_template(templates.RELEVANCE_CRITERION)
    rendered = template.render(
        trial_name=trial.title,
        inclusion_criteria="\n".join(f"- {c.description}" for c in inclusion),
    )
    request = ModelRequest(
        model_role=ModelRole.RELEVANCE_GEN,
        system_prompt=rendered,
        user_parts=(TextPart("Generate the patientRelevanceCriterion JSON now."),),
        response_schema_id=response_schemas.RELEVANCE_CRITERION,
    )
    result = gateway.complete_structured(request, context=f"relevance-gen:{trial.trial_id}")
    return result.payload["patientRelevanceCriterion"]


def generate_guidelines(gateway: Gateway, criterion: EligibilityCriterion) -> tuple[str, ...]:
    """Generate 1-4 retrieval guidelines for one criterion."""
    if not criterion.description.strip():
        raise TrialPrepError("criterion description is empty")
    request = ModelRequest(
        model_role=ModelRole.GUIDELINE_GEN,
        system_prompt=templates.load_template(templates.GUIDELINES).text,
        user_parts=(TextPart(criterion.description),),
        response_schema_id=response_schemas.GUIDELINES,
    )
    result = gateway.complete_structured(request, context=f"guidelines:{criterion.criterion_id}")
    guidelines = tuple(result.payload["guidelines"])
    if not 1 <= len(guidelines) <= MAX_GUIDELINES:
        raise TrialPrepError(f"model returned {len(guidelines)} guidelines, need 1-{MAX_GUIDELINES}")
    return guidelines


def classify_criterion(
    gateway: Gateway,
    criterion: EligibilityCriterion,
    facet: ClassificationFacet,
    trial_title: str = "",
) -> FacetValue:
    """Classify one criterion along one facet; returns the facet value."""
    template_id, schema_id, key, enum_cls = _FACET_SETUP[facet]
    user_text = f"Criterion: {criterion.description}"
    if trial_title:
        user_text += f"\nTrial: {trial_title}"
    request = ModelRequest(
        model_role=ModelRole.CLASSIFIER,
        system_prompt=templates.load_template(template_id).text,
        user_parts=(TextPart(user_text),),
        response_schema_id=schema_id,
    )
    result = gateway.complete_structured(
        request, context=f"classify-{facet.value.lower()}:{criterion.criterion_id}"
    )
    return enum_cls(result.payload[key])


def prep_trial(gateway: Gateway, trial: Trial) -> Trial:
    """Run the full trial preprocessing pipeline; idempotent and re-runnable."""
    criteria = split_criteria(gateway, trial.raw_criteria_text, trial_id=trial.trial_id)
    enriched = replace(trial, criteria=tuple(criteria))
    relevance = generate_relevance_criterion(gateway, enriched)

    finished = []
    for criterion in criteria:
        guidelines = generate_guidelines(gateway, criterion)
        domain = classify_criterion(gateway, criterion, ClassificationFacet.DOMAIN, trial.title)
        data_format = classify_criterion(
            gateway, criterion, ClassificationFacet.DATA_FORMAT, trial.title
        )
        temporal = classify_criterion(
            gateway, criterion, ClassificationFacet.TEMPORAL, trial.title
        )
        finished.append(
            replace(
                criterion,
                guidelines=guidelines,
                domain=domain,
                data_format=data_format,
                temporal_constraint=temporal,
            )
        )
    logger.info(
        "prepped trial %s: %d criteria, relevance criterion set", trial.trial_id, len(finished)
    )
    return replace(
        enriched,
        criteria=tuple(finished),
        relevance_criterion=relevance,
        prepped=True,
    )
