"""Canonical record serialization.

Dataset files are line-delimited UTF-8 JSON, one object per record, with a
``type`` tag naming the record type and the remaining keys matching the
domain type's field names. Serialization is canonical (sorted keys, compact
separators) so identical values produce identical bytes, and
``deserialize_record(serialize_record(x)) == x`` for every registered type.
"""

from __future__ import annotations

import base64
import json
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Any, Callable, Optional, Type, TypeVar

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
    GroundTruthLabel,
    LabelProvenance,
    MediaType,
    PatientClassification,
    PatientLabel,
    PatientRecord,
    RecordPage,
    RelevanceResult,
    RetrievalStrategy,
    SearchHit,
    SiteType,
    SourceDocument,
    TemporalConstraint,
    Trial,
    TrialPhase,
    UsageRecord,
    Verdict,
)


class ParseError(ValueError):
    """Raised when a record cannot be parsed back into a domain type."""

    def __init__(self, message: str, byte_offset: Optional[int] = None):
        self.message = message
        self.byte_offset = byte_offset
        super().__init__(message)

    def __str__(self) -> str:
        if self.byte_offset is not None:
            return f"{self.message} (byte offset {self.byte_offset})"
        return self.message


E = TypeVar("E", bound=Enum)


def _enum_values(enum_cls: Type[Enum]) -> list[str]:
    return [member.value for member in enum_cls]


def _parse_enum(enum_cls: Type[E], raw: Any, field: str) -> E:
    for member in enum_cls:
        if member.value == raw:
            return member
    raise ParseError(
        f"invalid {field} {raw!r}: allowed values are {_enum_values(enum_cls)}"
    )


def _require(record: dict, key: str) -> Any:
    if key not in record:
        raise ParseError(f"missing required field {key!r}")
    return record[key]


def _parse_opt_enum(enum_cls: Type[E], raw: Any, field: str) -> Optional[E]:
    return None if raw is None else _parse_enum(enum_cls, raw, field)


def _parse_date(raw: Any, field: str) -> date:
    try:
        return date.fromisoformat(raw)
    except (TypeError, ValueError):
        raise ParseError(f"invalid {field} {raw!r}: expected ISO date YYYY-MM-DD")


def _parse_datetime(raw: Any, field: str) -> datetime:
    try:
        return datetime.fromisoformat(raw)
    except (TypeError, ValueError):
        raise ParseError(f"invalid {field} {raw!r}: expected ISO 8601 timestamp")


def _parse_decimal(raw: Any, field: str) -> Decimal:
    try:
        return Decimal(str(raw))
    except InvalidOperation:
        raise ParseError(f"invalid {field} {raw!r}: expected decimal number")


def _parse_bytes(raw: Any, field: str) -> bytes:
    try:
        return base64.b64decode(raw, validate=True)
    except Exception:
        raise ParseError(f"invalid {field}: expected base64 payload")


# --- per-type encoders / decoders -------------------------------------------


def _encode_criterion(c: EligibilityCriterion) -> dict:
    return {
        "criterion_id": c.criterion_id,
        "description": c.description,
        "kind": c.kind.value,
        "guidelines": list(c.guidelines),
        "explanation": c.explanation,
        "domain": c.domain.value if c.domain else None,
        "data_format": c.data_format.value if c.data_format else None,
        "temporal_constraint": c.temporal_constraint.value if c.temporal_constraint else None,
    }


def _decode_criterion(d: dict) -> EligibilityCriterion:
    return EligibilityCriterion(
        criterion_id=str(_require(d, "criterion_id")),
        description=str(_require(d, "description")),
        kind=_parse_enum(CriterionKind, _require(d, "kind"), "kind"),
        guidelines=tuple(str(g) for g in d.get("guidelines", [])),
        explanation=d.get("explanation"),
        domain=_parse_opt_enum(CriterionDomain, d.get("domain"), "domain"),
        data_format=_parse_opt_enum(DataFormat, d.get("data_format"), "data_format"),
        temporal_constraint=_parse_opt_enum(
            TemporalConstraint, d.get("temporal_constraint"), "temporal_constraint"
        ),
    )


def _encode_trial(t: Trial) -> dict:
    return {
        "trial_id": t.trial_id,
        "title": t.title,
        "raw_criteria_text": t.raw_criteria_text,
        "phase": t.phase.value,
        "therapeutic_area": t.therapeutic_area,
        "criteria": [_encode_criterion(c) for c in t.criteria],
        "relevance_criterion": t.relevance_criterion,
        "site_type": t.site_type.value if t.site_type else None,
        "prepped": t.prepped,
    }


def _decode_trial(d: dict) -> Trial:
    return Trial(
        trial_id=str(_require(d, "trial_id")),
        title=str(_require(d, "title")),
        raw_criteria_text=str(_require(d, "raw_criteria_text")),
        phase=_parse_enum(TrialPhase, d.get("phase", "other"), "phase"),
        therapeutic_area=str(d.get("therapeutic_area", "")),
        criteria=tuple(_decode_criterion(c) for c in d.get("criteria", [])),
        relevance_criterion=d.get("relevance_criterion"),
        site_type=_parse_opt_enum(SiteType, d.get("site_type"), "site_type"),
        prepped=bool(d.get("prepped", False)),
    )


def _encode_document(doc: SourceDocument) -> dict:
    return {
        "document_id": doc.document_id,
        "patient_id": doc.patient_id,
        "filename": doc.filename,
        "media_type": doc.media_type.value,
        "page_count": doc.page_count,
    }


def _decode_document(d: dict) -> SourceDocument:
    return SourceDocument(
        document_id=str(_require(d, "document_id")),
        patient_id=str(_require(d, "patient_id")),
        filename=str(_require(d, "filename")),
        media_type=_parse_enum(MediaType, _require(d, "media_type"), "media_type"),
        page_count=int(d.get("page_count", 0)),
    )


def _encode_page(p: RecordPage) -> dict:
    return {
        "page_id": p.page_id,
        "document_id": p.document_id,
        "page_number": p.page_number,
        "image_bytes": base64.b64encode(p.image_bytes).decode("ascii"),
        "dpi": p.dpi,
        "redacted": p.redacted,
    }


def _decode_page(d: dict) -> RecordPage:
    try:
        return RecordPage(
            page_id=str(_require(d, "page_id")),
            document_id=str(_require(d, "document_id")),
            page_number=int(_require(d, "page_number")),
            image_bytes=_parse_bytes(_require(d, "image_bytes"), "image_bytes"),
            dpi=int(_require(d, "dpi")),
            redacted=bool(d.get("redacted", False)),
        )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid RecordPage: {exc}")


def _encode_patient_record(r: PatientRecord) -> dict:
    return {
        "patient_id": r.patient_id,
        "documents": [_encode_document(doc) for doc in r.documents],
        "pages": [_encode_page(p) for p in r.pages],
    }


def _decode_patient_record(d: dict) -> PatientRecord:
    return PatientRecord(
        patient_id=str(_require(d, "patient_id")),
        documents=tuple(_decode_document(x) for x in d.get("documents", [])),
        pages=tuple(_decode_page(x) for x in d.get("pages", [])),
    )


def _encode_usage(u: UsageRecord) -> dict:
    return {
        "input_tokens": u.input_tokens,
        "output_tokens": u.output_tokens,
        "wall_time": u.wall_time,
        "cost": str(u.cost),
    }


def _decode_usage(d: dict) -> UsageRecord:
    try:
        return UsageRecord(
            input_tokens=int(d.get("input_tokens", 0)),
            output_tokens=int(d.get("output_tokens", 0)),
            wall_time=float(d.get("wall_time", 0.0)),
            cost=_parse_decimal(d.get("cost", "0"), "cost"),
        )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid UsageRecord: {exc}")


def _encode_embedding(v: EmbeddingVector) -> dict:
    return {"values": list(v.values), "dimension": v.dimension}


def _decode_embedding(d: dict) -> EmbeddingVector:
    try:
        return EmbeddingVector(
            values=tuple(float(x) for x in _require(d, "values")),
            dimension=int(_require(d, "dimension")),
        )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid EmbeddingVector: {exc}")


def _encode_assessment(a: CriterionAssessment) -> dict:
    return {
        "assessment_id": a.assessment_id,
        "patient_id": a.patient_id,
        "trial_id": a.trial_id,
        "criterion_id": a.criterion_id,
        "verdict": a.verdict.value,
        "rationale": a.rationale,
        "source_page_ids": list(a.source_page_ids),
        "as_of_date": a.as_of_date.isoformat(),
        "usage": _encode_usage(a.usage),
        "strategy": a.strategy.spec(),
        "failed": a.failed,
        "error": a.error,
    }


def _decode_assessment(d: dict) -> CriterionAssessment:
    try:
        strategy = RetrievalStrategy.parse(str(_require(d, "strategy")))
    except ValueError as exc:
        raise ParseError(str(exc))
    return CriterionAssessment(
        assessment_id=str(_require(d, "assessment_id")),
        patient_id=str(_require(d, "patient_id")),
        trial_id=str(_require(d, "trial_id")),
        criterion_id=str(_require(d, "criterion_id")),
        verdict=_parse_enum(Verdict, _require(d, "verdict"), "verdict"),
        rationale=str(d.get("rationale", "")),
        source_page_ids=tuple(str(p) for p in d.get("source_page_ids", [])),
        as_of_date=_parse_date(_require(d, "as_of_date"), "as_of_date"),
        usage=_decode_usage(d.get("usage", {})),
        strategy=strategy,
        failed=bool(d.get("failed", False)),
        error=d.get("error"),
    )


def _encode_feedback(e: FeedbackEvent) -> dict:
    if isinstance(e.payload, CriterionReview):
        payload = {
            "kind": "criterion_review",
            "criterion_id": e.payload.criterion_id,
            "human_verdict": e.payload.human_verdict.value,
        }
    else:
        payload = {"kind": "patient_classification", "label": e.payload.label.value}
    return {
        "event_id": e.event_id,
        "actor_id": e.actor_id,
        "timestamp": e.timestamp.isoformat(),
        "patient_id": e.patient_id,
        "trial_id": e.trial_id,
        "payload": payload,
    }


def _decode_feedback(d: dict) -> FeedbackEvent:
    raw_payload = _require(d, "payload")
    if not isinstance(raw_payload, dict):
        raise ParseError("payload must be an object")
    kind = raw_payload.get("kind")
    if kind == "criterion_review":
        payload: Any = CriterionReview(
            criterion_id=str(_require(raw_payload, "criterion_id")),
            human_verdict=_parse_enum(
                Verdict, _require(raw_payload, "human_verdict"), "human_verdict"
            ),
        )
    elif kind == "patient_classification":
        payload = PatientClassification(
            label=_parse_enum(PatientLabel, _require(raw_payload, "label"), "label")
        )
    else:
        raise ParseError(
            f"invalid payload kind {kind!r}: allowed values are "
            "['criterion_review', 'patient_classification']"
        )
    return FeedbackEvent(
        event_id=str(_require(d, "event_id")),
        actor_id=str(_require(d, "actor_id")),
        timestamp=_parse_datetime(_require(d, "timestamp"), "timestamp"),
        patient_id=str(_require(d, "patient_id")),
        trial_id=str(_require(d, "trial_id")),
        payload=payload,
    )


def _encode_label(l: GroundTruthLabel) -> dict:
    return {
        "patient_id": l.patient_id,
        "trial_id": l.trial_id,
        "criterion_id": l.criterion_id,
        "label": l.label.value,
        "provenance": l.provenance.value,
    }


def _decode_label(d: dict) -> GroundTruthLabel:
    return GroundTruthLabel(
        patient_id=str(_require(d, "patient_id")),
        trial_id=str(_require(d, "trial_id")),
        criterion_id=str(_require(d, "criterion_id")),
        label=_parse_enum(Verdict, _require(d, "label"), "label"),
        provenance=_parse_enum(LabelProvenance, _require(d, "provenance"), "provenance"),
    )


def _encode_relevance(r: RelevanceResult) -> dict:
    return {
        "patient_id": r.patient_id,
        "trial_id": r.trial_id,
        "relevant": r.relevant,
        "rationale": r.rationale,
        "checked_page_id": r.checked_page_id,
    }


def _decode_relevance(d: dict) -> RelevanceResult:
    return RelevanceResult(
        patient_id=str(_require(d, "patient_id")),
        trial_id=str(_require(d, "trial_id")),
        relevant=bool(_require(d, "relevant")),
        rationale=str(d.get("rationale", "")),
        checked_page_id=d.get("checked_page_id"),
    )


def _encode_search_hit(h: SearchHit) -> dict:
    return {"page_id": h.page_id, "score": h.score}


def _decode_search_hit(d: dict) -> SearchHit:
    return SearchHit(page_id=str(_require(d, "page_id")), score=float(_require(d, "score")))


def _encode_export(b: ExportBundle) -> dict:
    return {
        "labels": [_encode_label(l) for l in b.labels],
        "assessments": [_encode_assessment(a) for a in b.assessments],
        "feedback_events": [_encode_feedback(e) for e in b.feedback_events],
        "generated_at": b.generated_at.isoformat(),
    }


def _decode_export(d: dict) -> ExportBundle:
    return ExportBundle(
        labels=tuple(_decode_label(x) for x in d.get("labels", [])),
        assessments=tuple(_decode_assessment(x) for x in d.get("assessments", [])),
        feedback_events=tuple(_decode_feedback(x) for x in d.get("feedback_events", [])),
        generated_at=_parse_datetime(_require(d, "generated_at"), "generated_at"),
    )


_REGISTRY: dict[type, tuple[str, Callable[[Any], dict]]] = {
    Trial: ("Trial", _encode_trial),
    EligibilityCriterion: ("EligibilityCriterion", _encode_criterion),
    SourceDocument: ("SourceDocument", _encode_document),
    RecordPage: ("RecordPage", _encode_page),
    PatientRecord: ("PatientRecord", _encode_patient_record),
    UsageRecord: ("UsageRecord", _encode_usage),
    EmbeddingVector: ("EmbeddingVector", _encode_embedding),
    CriterionAssessment: ("CriterionAssessment", _encode_assessment),
    FeedbackEvent: ("FeedbackEvent", _encode_feedback),
    GroundTruthLabel: ("GroundTruthLabel", _encode_label),
    RelevanceResult: ("RelevanceResult", _encode_relevance),
    SearchHit: ("SearchHit", _encode_search_hit),
    ExportBundle: ("ExportBundle", _encode_export),
}

_DECODERS: dict[str, Callable[[dict], Any]] = {
    "Trial": _decode_trial,
    "EligibilityCriterion": _decode_criterion,
    "SourceDocument": _decode_document,
    "RecordPage": _decode_page,
    "PatientRecord": _decode_patient_record,
    "UsageRecord": _decode_usage,
    "EmbeddingVector": _decode_embedding,
    "CriterionAssessment": _decode_assessment,
    "FeedbackEvent": _decode_feedback,
    "GroundTruthLabel": _decode_label,
    "RelevanceResult": _decode_relevance,
    "SearchHit": _decode_search_hit,
    "ExportBundle": _decode_export,
}


def to_jsonable(entity: Any) -> dict:
    """Encode a core entity as a plain dict with a ``type`` tag."""
    try:
        type_name, encoder = _REGISTRY[type(entity)]
    except KeyError:
        raise TypeError(f"{type(entity).__name__} is not a registered record type")
    record = encoder(entity)
    record["type"] = type_name
    return record


def serialize_record(entity: Any) -> str:
    """Serialize a core entity to one canonical JSON line (no newline)."""
    return json.dumps(
        to_jsonable(entity), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )


def from_jsonable(record: dict, expected_type: Optional[str] = None) -> Any:
    type_name = record.get("type", expected_type)
    if expected_type is not None and type_name != expected_type:
        raise ParseError(f"expected record type {expected_type!r}, got {type_name!r}")
    decoder = _DECODERS.get(type_name or "")
    if decoder is None:
        raise ParseError(
            f"unknown record type {type_name!r}: allowed values are {sorted(_DECODERS)}"
        )
    return decoder(record)


def deserialize_record(text: str, expected_type: Optional[str] = None) -> Any:
    """Parse one canonical record line back into its domain type.

    Malformed JSON raises :class:`ParseError` carrying the byte offset of the
    failure; out-of-domain enum values raise :class:`ParseError` listing the
    allowed values.
    """
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed record: {exc.msg}", byte_offset=byte_offset)
    if not isinstance(record, dict):
        raise ParseError("record must be a JSON object", byte_offset=0)
    return from_jsonable(record, expected_type)


def write_records(path, entities) -> int:
    """Write entities as JSON lines; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for entity in entities:
            fh.write(serialize_record(entity))
            fh.write("\n")
            count += 1
    return count


def read_records(path, expected_type: Optional[str] = None) -> list:
    """Read a JSONL dataset file back into domain objects."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(deserialize_record(line, expected_type))
            except ParseError as exc:
                raise ParseError(f"{path}:{line_no}: {exc.message}", exc.byte_offset)
    return out
