"""HTTP review service.

Exposes assessed patient x trial pairs to human reviewers, accepts
criterion-level confirm/rectify actions and patient-level classifications,
and exports the labeled dataset produced by ground-truth inference.

Auth is a single bearer token per deployment (unset = open, for local use);
the acting reviewer travels in the ``X-Actor-Id`` header. Feedback is
append-only; conflicts are resolved at export time, preserving the audit
trail. Review timestamps originate server-side.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from ..core import (
    CriterionKind,
    CriterionReview,
    ExportBundle,
    FeedbackEvent,
    PatientClassification,
    PatientLabel,
    Verdict,
    to_jsonable,
)
from ..evaluation import infer_ground_truth
from ..ids import new_id
from ..workspace import Workspace, WorkspaceError

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class FeedbackBody(BaseModel):
    patient_id: str
    trial_id: str
    criterion_id: str
    human_verdict: str = Field(description="Met | Unmet | Unknown")
    event_id: Optional[str] = None


class ClassificationBody(BaseModel):
    patient_id: str
    trial_id: str
    label: str = Field(description="ToScreen | NotEligible")
    event_id: Optional[str] = None


def create_app(root: Path, token: Optional[str] = None) -> FastAPI:
    workspace = Workspace(Path(root))
    app = FastAPI(title="trialmatch review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_auth(authorization: Optional[str] = Header(default=None)) -> None:
        if token and authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    def actor(x_actor_id: Optional[str] = Header(default=None)) -> str:
        return x_actor_id or "anonymous"

    def criterion_kinds() -> dict[str, CriterionKind]:
        kinds: dict[str, CriterionKind] = {}
        for trial_id in workspace.list_trial_ids():
            for criterion in workspace.load_trial(trial_id).criteria:
                kinds[criterion.criterion_id] = criterion.kind
        return kinds

    def reviewed_criteria(patient_id: str, trial_id: str) -> dict[str, str]:
        reviews: dict[str, str] = {}
        for event in workspace.load_feedback():
            if (
                event.patient_id == patient_id
                and event.trial_id == trial_id
                and isinstance(event.payload, CriterionReview)
            ):
                reviews[event.payload.criterion_id] = event.payload.human_verdict.value
        return reviews

    def pair_classification(patient_id: str, trial_id: str) -> Optional[str]:
        label = None
        for event in workspace.load_feedback():
            if (
                event.patient_id == patient_id
                and event.trial_id == trial_id
                and isinstance(event.payload, PatientClassification)
            ):
                label = event.payload.label.value
        return label

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/pairs", dependencies=[Depends(require_auth)])
    def list_pairs() -> dict:
        rows = []
        for patient_id, trial_id in workspace.list_assessed_pairs():
            assessments = workspace.load_assessments(patient_id, trial_id)
            reviews = reviewed_criteria(patient_id, trial_id)
            assessed_ids = {a.criterion_id for a in assessments}
            try:
                trial_title = workspace.load_trial(trial_id).title
            except WorkspaceError:
                trial_title = trial_id
            rows.append(
                {
                    "patient_id": patient_id,
                    "trial_id": trial_id,
                    "trial_title": trial_title,
                    "criteria": len(assessed_ids),
                    "reviewed": len(set(reviews) & assessed_ids),
                    "pending": len(assessed_ids - set(reviews)),
                    "classification": pair_classification(patient_id, trial_id),
                }
            )
        return {"pairs": rows}

    @app.get(
        "/pairs/{patient_id}/{trial_id}/assessments",
        dependencies=[Depends(require_auth)],
    )
    def get_assessments(patient_id: str, trial_id: str) -> dict:
        assessments = workspace.load_assessments(patient_id, trial_id)
        if not assessments:
            raise HTTPException(status_code=404, detail="unknown patient/trial pair")
        try:
            trial = workspace.load_trial(trial_id)
            descriptions = {c.criterion_id: c.description for c in trial.criteria}
            kinds = {c.criterion_id: c.kind.value for c in trial.criteria}
        except WorkspaceError:
            descriptions, kinds = {}, {}
        reviews = reviewed_criteria(patient_id, trial_id)
        relevance = workspace.load_relevance(patient_id, trial_id)
        rows = []
        for assessment in assessments:
            record = to_jsonable(assessment)
            record["criterion_description"] = descriptions.get(assessment.criterion_id, "")
            record["criterion_kind"] = kinds.get(assessment.criterion_id)
            record["human_verdict"] = reviews.get(assessment.criterion_id)
            record["page_image_urls"] = [
                f"/pages/{page_id}.png" for page_id in assessment.source_page_ids
            ]
            rows.append(record)
        return {
            "patient_id": patient_id,
            "trial_id": trial_id,
            "relevance": to_jsonable(relevance) if relevance else None,
            "classification": pair_classification(patient_id, trial_id),
            "assessments": rows,
        }

    @app.get("/pages/{page_id}.png", dependencies=[Depends(require_auth)])
    def get_page(page_id: str) -> Response:
        found = workspace.find_page(page_id)
        if found is None:
            raise HTTPException(status_code=404, detail="unknown page")
        patient_id, png_path, redacted = found
        mode = workspace.patient_redaction_mode(patient_id)
        if mode != "passthrough" and not redacted:
            raise HTTPException(
                status_code=403, detail="page not redacted under the active policy"
            )
        return Response(content=png_path.read_bytes(), media_type="image/png")

    @app.post("/feedback", dependencies=[Depends(require_auth)])
    def post_feedback(body: FeedbackBody, actor_id: str = Depends(actor)) -> dict:
        assessments = workspace.load_assessments(body.patient_id, body.trial_id)
        if not assessments:
            raise HTTPException(status_code=404, detail="unknown patient/trial pair")
        if body.criterion_id not in {a.criterion_id for a in assessments}:
            raise HTTPException(
                status_code=422,
                detail=f"unknown criterion {body.criterion_id!r} for this pair",
            )
        try:
            verdict = Verdict(body.human_verdict)
        except ValueError:
            raise HTTPException(
                status_code=422,
                detail=f"invalid verdict {body.human_verdict!r}; "
                f"allowed: {[v.value for v in Verdict]}",
            )
        event = FeedbackEvent(
            event_id=body.event_id or new_id("fb-"),
            actor_id=actor_id,
            timestamp=datetime.now(timezone.utc),
            patient_id=body.patient_id,
            trial_id=body.trial_id,
            payload=CriterionReview(criterion_id=body.criterion_id, human_verdict=verdict),
        )
        stored = workspace.append_feedback(event)
        return {"event_id": event.event_id, "stored": stored, "deduplicated": not stored}

    @app.post("/classification", dependencies=[Depends(require_auth)])
    def post_classification(body: ClassificationBody, actor_id: str = Depends(actor)) -> dict:
        if not workspace.load_assessments(body.patient_id, body.trial_id):
            raise HTTPException(status_code=404, detail="unknown patient/trial pair")
        try:
            label = PatientLabel(body.label)
        except ValueError:
            raise HTTPException(
                status_code=422,
                detail=f"invalid label {body.label!r}; "
                f"allowed: {[v.value for v in PatientLabel]}",
            )
        event = FeedbackEvent(
            event_id=body.event_id or new_id("fb-"),
            actor_id=actor_id,
            timestamp=datetime.now(timezone.utc),
            patient_id=body.patient_id,
            trial_id=body.trial_id,
            payload=PatientClassification(label=label),
        )
        stored = workspace.append_feedback(event)
        return {"event_id": event.event_id, "stored": stored, "deduplicated": not stored}

    @app.get("/export", dependencies=[Depends(require_auth)])
    def export_labels() -> dict:
        events = workspace.load_feedback()
        assessments = []
        for patient_id, trial_id in workspace.list_assessed_pairs():
            assessments.extend(workspace.load_assessments(patient_id, trial_id))
        labels = infer_ground_truth(assessments, events, criterion_kinds())
        # generated_at derives from state so identical state exports identically
        generated_at = max((e.timestamp for e in events), default=EPOCH)
        bundle = ExportBundle(
            labels=tuple(labels),
            assessments=tuple(assessments),
            feedback_events=tuple(events),
            generated_at=generated_at,
        )
        return to_jsonable(bundle)

    return app
