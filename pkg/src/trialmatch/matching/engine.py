"""Two-step patient x trial matching.

Step 1 is a low-cost relevance gate: embed the trial's relevance criterion,
retrieve the patient's single most relevant page, and ask a chat-class
model whether the patient plausibly matches. Step 2 assesses every criterion
(no hand-picking) with the reasoning model over pages chosen by the active
retrieval strategy.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from typing import Optional

from ..core import (
    CriterionAssessment,
    EligibilityCriterion,
    PageSelection,
    PatientRecord,
    RecordPage,
    RelevanceResult,
    RetrievalStrategy,
    SearchHit,
    StrategyVariant,
    Trial,
    UsageRecord,
    Verdict,
)
from ..gateway import (
    Gateway,
    GatewayError,
    ImagePart,
    ModelRequest,
    ModelRole,
    TextPart,
)
from ..gateway import schemas as response_schemas
from ..ids import content_id
from ..store import VectorStore
from ..trialprep import templates

logger = logging.getLogger(__name__)

DEFAULT_STRATEGY = RetrievalStrategy(StrategyVariant.TOP_K_PER_GUIDELINE, 3)


class MatchingError(Exception):
    pass


@dataclass(frozen=True)
class MatchRunResult:
    relevance: RelevanceResult
    assessments: tuple[CriterionAssessment, ...]


def document_order(record: PatientRecord) -> list[RecordPage]:
    """Pages in document order: documents as uploaded, pages by number."""
    doc_rank = {doc.document_id: i for i, doc in enumerate(record.documents)}
    return sorted(
        record.pages,
        key=lambda p: (doc_rank.get(p.document_id, len(doc_rank)), p.page_number),
    )


def relevance_check(
    gateway: Gateway, store: VectorStore, record: PatientRecord, trial: Trial
) -> RelevanceResult:
    """Gate a patient against the trial's relevance criterion via the top-1 page."""
    if not trial.relevance_criterion:
        raise MatchingError(f"trial {trial.trial_id!r} has no relevance criterion; run prep")
    batch = gateway.embed_texts(
        [trial.relevance_criterion], context=f"relevance:{record.patient_id}:{trial.trial_id}"
    )
    query = batch.vectors[0]
    hits = store.search_top_k(record.patient_id, query, k=1)
    if not hits:
        return RelevanceResult(
            patient_id=record.patient_id,
            trial_id=trial.trial_id,
            relevant=False,
            rationale="no pages",
            checked_page_id=None,
        )
    top_page_id = hits[0].page_id
    page_bytes = _page_bytes(record, top_page_id)
    template = templates.load_template(templates.RELEVANCE_CHECK)
    request = ModelRequest(
        model_role=ModelRole.RELEVANCE_CHECK,
        system_prompt=template.render(relevance_criterion=trial.relevance_criterion),
        user_parts=(ImagePart(page_bytes),),
        response_schema_id=response_schemas.RELEVANCE_CHECK,
    )
    result = gateway.complete_structured(
        request, context=f"relevance:{record.patient_id}:{trial.trial_id}"
    )
    return RelevanceResult(
        patient_id=record.patient_id,
        trial_id=trial.trial_id,
        relevant=bool(result.payload["relevant"]),
        rationale=result.payload["rationale"],
        checked_page_id=top_page_id,
    )


def select_pages(
    gateway: Gateway,
    store: VectorStore,
    record: PatientRecord,
    criterion: EligibilityCriterion,
    strategy: RetrievalStrategy,
) -> PageSelection:
    """Choose the pages accompanying one criterion under the strategy.

    The selection is de-duplicated and ordered by document order (not
    similarity order) to preserve the narrative continuity of the record.
    """
    ordered_pages = document_order(record)
    if strategy.variant is StrategyVariant.ALL_PAGES:
        return PageSelection(
            strategy=strategy,
            selected_page_ids=tuple(p.page_id for p in ordered_pages),
            per_guideline_hits={},
        )

    if strategy.variant is StrategyVariant.TOP_K_PER_GUIDELINE:
        if not criterion.guidelines:
            raise MatchingError(
                f"criterion {criterion.criterion_id!r} has no guidelines; "
                "run prep or use topk/all-pages"
            )
        queries = list(criterion.guidelines)
    else:
        queries = [criterion.description]

    batch = gateway.embed_texts(queries, context=f"select:{criterion.criterion_id}")
    per_query_hits: dict[str, tuple[SearchHit, ...]] = {}
    hit_ids: set[str] = set()
    for query_text, vector in zip(queries, batch.vectors):
        hits = tuple(
            store.search_top_k(record.patient_id, vector, k=strategy.k or 1)
        )
        per_query_hits[query_text] = hits
        hit_ids.update(h.page_id for h in hits)
    selected = tuple(p.page_id for p in ordered_pages if p.page_id in hit_ids)
    return PageSelection(
        strategy=strategy, selected_page_ids=selected, per_guideline_hits=per_query_hits
    )


def assess_criterion(
    gateway: Gateway,
    record: PatientRecord,
    trial: Trial,
    criterion: EligibilityCriterion,
    selection: PageSelection,
    as_of_date: date,
) -> CriterionAssessment:
    """Run the reasoning model over the selected pages for one criterion.

    An empty selection short-circuits to Unknown without a model call.
    Verdict mapping is exact: insufficient information -> Unknown, otherwise
    is_met true -> Met and false -> Unmet.
    """
    assessment_id = content_id(
        record.patient_id,
        trial.trial_id,
        criterion.criterion_id,
        selection.strategy.spec(),
        as_of_date.isoformat(),
        "assessment",
    )
    if not selection.selected_page_ids:
        return CriterionAssessment(
            assessment_id=assessment_id,
            patient_id=record.patient_id,
            trial_id=trial.trial_id,
            criterion_id=criterion.criterion_id,
            verdict=Verdict.UNKNOWN,
            rationale="No pages were selected for this criterion.",
            source_page_ids=(),
            as_of_date=as_of_date,
            usage=UsageRecord(),
            strategy=selection.strategy,
        )

    template = templates.load_template(templates.ASSESS_CRITERION)
    system_prompt = template.render(
        criterion_description=criterion.description,
        assessment_as_of_date=as_of_date.isoformat(),
    )
    parts: list = [TextPart("Medical record pages follow.")]
    parts.extend(
        ImagePart(_page_bytes(record, page_id)) for page_id in selection.selected_page_ids
    )
    request = ModelRequest(
        model_role=ModelRole.ASSESSOR,
        system_prompt=system_prompt,
        user_parts=tuple(parts),
        response_schema_id=response_schemas.CRITERION_ASSESSMENT,
    )
    result = gateway.complete_structured(
        request, context=f"assess:{record.patient_id}:{criterion.criterion_id}"
    )
    payload = result.payload
    if payload.get("insufficient_information", False):
        verdict = Verdict.UNKNOWN
    elif payload["is_met"]:
        verdict = Verdict.MET
    else:
        verdict = Verdict.UNMET
    return CriterionAssessment(
        assessment_id=assessment_id,
        patient_id=record.patient_id,
        trial_id=trial.trial_id,
        criterion_id=criterion.criterion_id,
        verdict=verdict,
        rationale=payload["rationale"],
        source_page_ids=selection.selected_page_ids,
        as_of_date=as_of_date,
        usage=result.usage,
        strategy=selection.strategy,
    )


def assess_patient_trial(
    gateway: Gateway,
    store: VectorStore,
    record: PatientRecord,
    trial: Trial,
    strategy: RetrievalStrategy = DEFAULT_STRATEGY,
    as_of_date: Optional[date] = None,
    max_workers: int = 4,
) -> MatchRunResult:
    """Match one patient against one trial.

    The relevance gate runs first; gated-out patients get zero assessments
    and never reach the Assessor. Otherwise every criterion is assessed.
    Per-criterion infrastructure failures are recorded as failed assessments
    (distinct from Unknown) and the run completes. Results are ordered by
    criterion_id regardless of completion order.
    """
    if not trial.prepped or not trial.criteria:
        raise MatchingError(f"trial {trial.trial_id!r} is not prepped")
    as_of = as_of_date or date.today()

    relevance = relevance_check(gateway, store, record, trial)
    if not relevance.relevant:
        logger.info(
            "patient %s gated out of trial %s: %s",
            record.patient_id,
            trial.trial_id,
            relevance.rationale,
        )
        return MatchRunResult(relevance=relevance, assessments=())

    def run_one(criterion: EligibilityCriterion) -> CriterionAssessment:
        try:
            selection = select_pages(gateway, store, record, criterion, strategy)
            return assess_criterion(gateway, record, trial, criterion, selection, as_of)
        except (GatewayError, MatchingError) as exc:
            logger.warning(
                "assessment failed for criterion %s: %s", criterion.criterion_id, exc
            )
            return CriterionAssessment(
                assessment_id=content_id(
                    record.patient_id,
                    trial.trial_id,
                    criterion.criterion_id,
                    strategy.spec(),
                    as_of.isoformat(),
                    "assessment",
                ),
                patient_id=record.patient_id,
                trial_id=trial.trial_id,
                criterion_id=criterion.criterion_id,
                verdict=Verdict.UNKNOWN,
                rationale="",
                source_page_ids=(),
                as_of_date=as_of,
                usage=UsageRecord(),
                strategy=strategy,
                failed=True,
                error=str(exc),
            )

    workers = max(1, min(max_workers, len(trial.criteria)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        assessments = list(pool.map(run_one, trial.criteria))
    assessments.sort(key=lambda a: a.criterion_id)
    return MatchRunResult(relevance=relevance, assessments=tuple(assessments))


def _page_bytes(record: PatientRecord, page_id: str) -> bytes:
    for page in record.pages:
        if page.page_id == page_id:
            return page.image_bytes
    raise MatchingError(f"page {page_id!r} not found in patient record")
