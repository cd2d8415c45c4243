"""Shared domain types.

Every type here is an immutable value object (frozen dataclass over scalars,
tuples and enums), safe to share between threads. Collection fields use
tuples so equality and hashing behave like values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from decimal import Decimal
from enum import Enum
from typing import Mapping, Optional, Union


class TrialPhase(Enum):
    II = "II"
    III = "III"
    OTHER = "other"


class SiteType(Enum):
    EMBEDDED_RESEARCH_SITE = "Independent research site embedded in an outpatient clinic"
    SERVICES_COMPANY = "Services company"
    SITE_NETWORK_CENTER = "Research center part of a site network"
    INDEPENDENT_RESEARCH_SITE = "Independent research site"
    OUTPATIENT_CLINIC = "Outpatient clinic"
    ONCOLOGY_CARE_CENTER = "Oncology care center"


class CriterionKind(Enum):
    INCLUSION = "inclusion"
    EXCLUSION = "exclusion"


class CriterionDomain(Enum):
    DEMOGRAPHIC_ADMINISTRATIVE = "Demographic/Administrative"
    DISEASE_OR_CONDITION_SPECIFIC = "DiseaseOrConditionSpecific"
    COMORBIDITY_OR_MEDICAL_HISTORY = "ComorbidityOrMedicalHistory"
    PRIOR_OR_CONCOMITANT_TREATMENTS = "PriorOrConcomitantTreatments"
    LAB_OR_BIOMARKER = "LabOrBiomarker"
    PERFORMANCE_OR_FUNCTIONAL_STATUS = "PerformanceOrFunctionalStatus"
    SAFETY_OR_RISK = "SafetyOrRisk"
    OTHER_PRAGMATIC = "OtherPragmatic"


class DataFormat(Enum):
    STRUCTURED = "Structured"
    UNSTRUCTURED = "Unstructured"


class TemporalConstraint(Enum):
    YES = "Yes"
    NO = "No"


class Verdict(Enum):
    MET = "Met"
    UNMET = "Unmet"
    UNKNOWN = "Unknown"


class PatientLabel(Enum):
    TO_SCREEN = "ToScreen"
    NOT_ELIGIBLE = "NotEligible"


class MediaType(Enum):
    PDF = "pdf"
    IMAGE = "image"
    PLAIN_TEXT = "plain_text"


class LabelProvenance(Enum):
    DIRECT_CRITERION_REVIEW = "DirectCriterionReview"
    INFERRED_FROM_PATIENT_LABEL = "InferredFromPatientLabel"


class RecordCategory(Enum):
    ADMINISTRATIVE = "Administrative Documents"
    CLINICAL_NOTES = "Clinical Notes"
    DIAGNOSTIC_REPORTS = "Diagnostic Reports"
    PROCEDURAL_TREATMENT = "Procedural & Treatment Documents"


class VisualElement(Enum):
    TABULAR_DATA = "Tabular data"
    IMAGES = "Images"
    GRAPHS = "Graphs"
    HANDWRITTEN_NOTES = "Handwritten notes"
    OTHER = "Other"


class StrategyVariant(Enum):
    ALL_PAGES = "all-pages"
    TOP_K_FLAT = "topk"
    TOP_K_PER_GUIDELINE = "topk-guideline"


@dataclass(frozen=True)
class RetrievalStrategy:
    """Rule selecting which record pages accompany a criterion assessment."""

    variant: StrategyVariant
    k: Optional[int] = None

    def __post_init__(self):
        if self.variant is StrategyVariant.ALL_PAGES:
            if self.k is not None:
                raise ValueError("all-pages strategy takes no k")
        else:
            if self.k is None or self.k < 1:
                raise ValueError(f"{self.variant.value} strategy requires k >= 1")

    def spec(self) -> str:
        """Compact string form, e.g. ``all-pages``, ``topk:5``, ``topk-guideline:3``."""
        if self.variant is StrategyVariant.ALL_PAGES:
            return self.variant.value
        return f"{self.variant.value}:{self.k}"

    @classmethod
    def parse(cls, text: str) -> "RetrievalStrategy":
        name, sep, rest = text.partition(":")
        if name == StrategyVariant.ALL_PAGES.value:
            if sep:
                raise ValueError("all-pages strategy takes no k")
            return cls(StrategyVariant.ALL_PAGES)
        for variant in (StrategyVariant.TOP_K_FLAT, StrategyVariant.TOP_K_PER_GUIDELINE):
            if name == variant.value:
                if not sep or not rest.isdigit():
                    raise ValueError(f"strategy {name!r} requires an integer k, e.g. {name}:3")
                return cls(variant, int(rest))
        raise ValueError(
            f"unknown strategy {text!r}; expected one of "
            "all-pages, topk:K, topk-guideline:K"
        )


@dataclass(frozen=True)
class EligibilityCriterion:
    """A single inclusion or exclusion requirement of a trial.

    ``description`` is the split text verbatim; ``explanation`` is the
    model's plain-English restatement kept as metadata. Nested criteria stay
    in one criterion.
    """

    criterion_id: str
    description: str
    kind: CriterionKind
    guidelines: tuple[str, ...] = ()
    explanation: Optional[str] = None
    domain: Optional[CriterionDomain] = None
    data_format: Optional[DataFormat] = None
    temporal_constraint: Optional[TemporalConstraint] = None


@dataclass(frozen=True)
class Trial:
    trial_id: str
    title: str
    raw_criteria_text: str
    phase: TrialPhase = TrialPhase.OTHER
    therapeutic_area: str = ""
    criteria: tuple[EligibilityCriterion, ...] = ()
    relevance_criterion: Optional[str] = None
    site_type: Optional[SiteType] = None
    prepped: bool = False

    def inclusion_criteria(self) -> tuple[EligibilityCriterion, ...]:
        return tuple(c for c in self.criteria if c.kind is CriterionKind.INCLUSION)

    def exclusion_criteria(self) -> tuple[EligibilityCriterion, ...]:
        return tuple(c for c in self.criteria if c.kind is CriterionKind.EXCLUSION)


@dataclass(frozen=True)
class SourceDocument:
    document_id: str
    patient_id: str
    filename: str
    media_type: MediaType
    page_count: int = 0


@dataclass(frozen=True)
class RecordPage:
    """One raster page of a patient document, PNG payload."""

    page_id: str
    document_id: str
    page_number: int
    image_bytes: bytes
    dpi: int
    redacted: bool = False

    def __post_init__(self):
        if not self.image_bytes:
            raise ValueError("page image payload is empty")
        if self.dpi < 36:
            raise ValueError(f"dpi {self.dpi} below minimum 36")
        if self.page_number < 1:
            raise ValueError("page_number starts at 1")


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    documents: tuple[SourceDocument, ...] = ()
    pages: tuple[RecordPage, ...] = ()


@dataclass(frozen=True)
class UsageRecord:
    """Token, time and cost accounting for one or more model calls."""

    input_tokens: int = 0
    output_tokens: int = 0
    wall_time: float = 0.0
    cost: Decimal = Decimal("0")

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be >= 0")
        if self.wall_time < 0:
            raise ValueError("wall_time must be >= 0")
        if self.cost < 0:
            raise ValueError("cost must be >= 0")

    def __add__(self, other: "UsageRecord") -> "UsageRecord":
        return UsageRecord(
            input_tokens=self.input_tokens + other.input_tokens,
            output_tokens=self.output_tokens + other.output_tokens,
            wall_time=self.wall_time + other.wall_time,
            cost=self.cost + other.cost,
        )


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        if self.dimension < 1 or len(self.values) != self.dimension:
            raise ValueError("dimension must match len(values) and be >= 1")
        if any(math.isnan(v) or math.isinf(v) for v in self.values):
            raise ValueError("embedding contains NaN/Inf")

    @classmethod
    def of(cls, values) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        return cls(values=vals, dimension=len(vals))


@dataclass(frozen=True)
class StoredVector:
    page_id: str
    patient_id: str
    vector: EmbeddingVector
    content_hash: str


@dataclass(frozen=True)
class SearchHit:
    page_id: str
    score: float


@dataclass(frozen=True)
class CriterionAssessment:
    """Per-criterion verdict produced by the matching engine.

    ``failed`` marks infrastructure failures, which are distinct from the
    clinical Unknown verdict and carry the error in ``error``.
    """

    assessment_id: str
    patient_id: str
    trial_id: str
    criterion_id: str
    verdict: Verdict
    rationale: str
    source_page_ids: tuple[str, ...]
    as_of_date: date
    usage: UsageRecord
    strategy: RetrievalStrategy
    failed: bool = False
    error: Optional[str] = None


@dataclass(frozen=True)
class CriterionReview:
    criterion_id: str
    human_verdict: Verdict


@dataclass(frozen=True)
class PatientClassification:
    label: PatientLabel


FeedbackPayload = Union[CriterionReview, PatientClassification]


@dataclass(frozen=True)
class FeedbackEvent:
    """Append-only human review action, scoped to a patient x trial pair."""

    event_id: str
    actor_id: str
    timestamp: datetime
    patient_id: str
    trial_id: str
    payload: FeedbackPayload


@dataclass(frozen=True)
class GroundTruthLabel:
    patient_id: str
    trial_id: str
    criterion_id: str
    label: Verdict
    provenance: LabelProvenance


@dataclass(frozen=True)
class RelevanceResult:
    patient_id: str
    trial_id: str
    relevant: bool
    rationale: str
    checked_page_id: Optional[str] = None


@dataclass(frozen=True)
class PageSelection:
    """Pages chosen for one criterion under a retrieval strategy.

    ``selected_page_ids`` is ordered by document order and de-duplicated;
    ``per_guideline_hits`` keeps the raw similarity hits per query text.
    """

    strategy: RetrievalStrategy
    selected_page_ids: tuple[str, ...]
    per_guideline_hits: Mapping[str, tuple[SearchHit, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class ReviewSession:
    actor_id: str
    started_at: datetime
    patient_id: str
    trial_id: str


@dataclass(frozen=True)
class ExportBundle:
    labels: tuple[GroundTruthLabel, ...]
    assessments: tuple[CriterionAssessment, ...]
    feedback_events: tuple[FeedbackEvent, ...]
    generated_at: datetime
