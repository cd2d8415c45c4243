from .types import (
    CriterionAssessment,
    CriterionDomain,
    CriterionKind,
    CriterionReview,
    DataFormat,
    EligibilityCriterion,
    EmbeddingVector,
    ExportBundle,
    FeedbackEvent,
    FeedbackPayload,
    GroundTruthLabel,
    LabelProvenance,
    MediaType,
    PageSelection,
    PatientClassification,
    PatientLabel,
    PatientRecord,
    RecordCategory,
    RecordPage,
    RelevanceResult,
    RetrievalStrategy,
    ReviewSession,
    SearchHit,
    SiteType,
    SourceDocument,
    StoredVector,
    StrategyVariant,
    TemporalConstraint,
    Trial,
    TrialPhase,
    UsageRecord,
    Verdict,
    VisualElement,
)
from .serialization import (
    ParseError,
    deserialize_record,
    from_jsonable,
    read_records,
    serialize_record,
    to_jsonable,
    write_records,
)
from .validation import validate_trial

__all__ = [
    "CriterionAssessment",
    "CriterionDomain",
    "CriterionKind",
    "CriterionReview",
    "DataFormat",
    "EligibilityCriterion",
    "EmbeddingVector",
    "ExportBundle",
    "FeedbackEvent",
    "FeedbackPayload",
    "GroundTruthLabel",
    "LabelProvenance",
    "MediaType",
    "PageSelection",
    "ParseError",
    "PatientClassification",
    "PatientLabel",
    "PatientRecord",
    "RecordCategory",
    "RecordPage",
    "RelevanceResult",
    "RetrievalStrategy",
    "ReviewSession",
    "SearchHit",
    "SiteType",
    "SourceDocument",
    "StoredVector",
    "StrategyVariant",
    "TemporalConstraint",
    "Trial",
    "TrialPhase",
    "UsageRecord",
    "Verdict",
    "VisualElement",
    "deserialize_record",
    "from_jsonable",
    "read_records",
    "serialize_record",
    "to_jsonable",
    "validate_trial",
    "write_records",
]
