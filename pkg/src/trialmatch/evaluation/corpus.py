"""Corpus profiling: record-type and visual-element distribution of pages."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..core import RecordCategory, VisualElement
from ..gateway import Gateway, GatewayError, ImagePart, ModelRequest, ModelRole
from ..gateway import schemas as response_schemas
from ..trialprep import templates

logger = logging.getLogger(__name__)

# "Any element" follows the four named challenge types; "Other" is tracked
# separately and does not count toward it.
CHALLENGE_ELEMENTS = (
    VisualElement.TABULAR_DATA,
    VisualElement.IMAGES,
    VisualElement.GRAPHS,
    VisualElement.HANDWRITTEN_NOTES,
)


@dataclass
class CorpusProfile:
    pages_total: int = 0
    pages_classified: int = 0
    failures: int = 0
    category_page_counts: dict[str, int] = field(default_factory=dict)
    category_record_counts: dict[str, int] = field(default_factory=dict)
    element_page_counts: dict[str, int] = field(default_factory=dict)
    element_record_counts: dict[str, int] = field(default_factory=dict)
    pages_with_any_element: int = 0
    records_with_any_element: int = 0
    records_total: int = 0

    def to_dict(self) -> dict:
        return {
            "pages_total": self.pages_total,
            "pages_classified": self.pages_classified,
            "failures": self.failures,
            "records_total": self.records_total,
            "category_page_counts": self.category_page_counts,
            "category_record_counts": self.category_record_counts,
            "element_page_counts": self.element_page_counts,
            "element_record_counts": self.element_record_counts,
            "pages_with_any_element": self.pages_with_any_element,
            "records_with_any_element": self.records_with_any_element,
        }


def profile_corpus(
    gateway: Gateway,
    pages: Sequence[tuple[str, bytes]],
    sample_size: Optional[int] = None,
    seed: int = 0,
) -> CorpusProfile:
    """Classify (record_id, page image) pairs by record type and visual elements.

    With ``sample_size`` set, a seeded random sample of pages is profiled.
    Per-page classification failures are counted separately and profiling
    continues.
    """
    if not pages:
        raise ValueError("profile_corpus requires a non-empty page sample")
    sample = list(pages)
    if sample_size is not None and sample_size < len(sample):
        sample = random.Random(seed).sample(sample, sample_size)

    record_type_prompt = templates.load_template(templates.RECORD_TYPE).text
    visual_prompt = templates.load_template(templates.VISUAL_ELEMENTS).text

    profile = CorpusProfile(pages_total=len(sample))
    record_categories: dict[str, set[str]] = {}
    record_elements: dict[str, set[str]] = {}
    records_any: set[str] = set()
    record_ids: set[str] = set()

    for record_id, image_bytes in sample:
        record_ids.add(record_id)
        try:
            category_result = gateway.complete_structured(
                ModelRequest(
                    model_role=ModelRole.CLASSIFIER,
                    system_prompt=record_type_prompt,
                    user_parts=(ImagePart(image_bytes),),
                    response_schema_id=response_schemas.RECORD_TYPE,
                ),
                context=f"profile-category:{record_id}",
            )
            visual_result = gateway.complete_structured(
                ModelRequest(
                    model_role=ModelRole.CLASSIFIER,
                    system_prompt=visual_prompt,
                    user_parts=(ImagePart(image_bytes),),
                    response_schema_id=response_schemas.VISUAL_ELEMENTS,
                ),
                context=f"profile-visual:{record_id}",
            )
        except GatewayError as exc:
            profile.failures += 1
            logger.warning("page classification failed for record %s: %s", record_id, exc)
            continue

        profile.pages_classified += 1
        category = RecordCategory(category_result.payload["category"]).value
        profile.category_page_counts[category] = (
            profile.category_page_counts.get(category, 0) + 1
        )
        record_categories.setdefault(record_id, set()).add(category)

        elements = [VisualElement(e).value for e in visual_result.payload["visual_elements"]]
        for element in elements:
            profile.element_page_counts[element] = (
                profile.element_page_counts.get(element, 0) + 1
            )
            record_elements.setdefault(record_id, set()).add(element)
        challenge_values = {e.value for e in CHALLENGE_ELEMENTS}
        if any(e in challenge_values for e in elements):
            profile.pages_with_any_element += 1
            records_any.add(record_id)

    profile.records_total = len(record_ids)
    for categories in record_categories.values():
        for category in categories:
            profile.category_record_counts[category] = (
                profile.category_record_counts.get(category, 0) + 1
            )
    for elements_seen in record_elements.values():
        for element in elements_seen:
            profile.element_record_counts[element] = (
                profile.element_record_counts.get(element, 0) + 1
            )
    profile.records_with_any_element = len(records_any)
    return profile
