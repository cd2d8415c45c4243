"""On-disk workspace layout shared by the CLI and the review service.

    <root>/
      config.yaml                     gateway + run configuration
      trials/<trial_id>.json          canonical Trial records
      patients/<patient_id>/
        manifest.json                 documents + page metadata (no image bytes)
        pages/<page_id>.png           page images
        quarantine.jsonl              quarantined-page report
      store/pages.vec(.meta.jsonl)    vector store
      assessments/<p>__<t>.jsonl      current assessments for review
      runs/<p>__<t>__<strategy>.jsonl per-strategy runs (ablation input)
      relevance/<p>__<t>.json         current relevance result
      feedback/events.jsonl           append-only feedback log
      usage/calls.jsonl               gateway usage log
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import (
    CriterionAssessment,
    FeedbackEvent,
    PatientRecord,
    RecordPage,
    RelevanceResult,
    SourceDocument,
    Trial,
    deserialize_record,
    from_jsonable,
    read_records,
    serialize_record,
    to_jsonable,
)
from .ingest import IngestReport
from .store import VectorStore

_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")


class WorkspaceError(Exception):
    pass


def _check_id(value: str, what: str) -> str:
    if not _ID_RE.match(value):
        raise WorkspaceError(
            f"{what} {value!r} must match [A-Za-z0-9._-]+ to be filesystem-safe"
        )
    return value


def _strategy_slug(spec: str) -> str:
    return spec.replace(":", "-")


@dataclass
class Workspace:
    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    # -- layout ---------------------------------------------------------------

    @property
    def config_path(self) -> Path:
        return self.root / "config.yaml"

    @property
    def trials_dir(self) -> Path:
        return self.root / "trials"

    @property
    def patients_dir(self) -> Path:
        return self.root / "patients"

    @property
    def store_path(self) -> Path:
        return self.root / "store" / "pages.vec"

    @property
    def assessments_dir(self) -> Path:
        return self.root / "assessments"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def relevance_dir(self) -> Path:
        return self.root / "relevance"

    @property
    def feedback_path(self) -> Path:
        return self.root / "feedback" / "events.jsonl"

    @property
    def usage_log_path(self) -> Path:
        path = self.root / "usage" / "calls.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    # -- trials ----------------------------------------------------------------

    def save_trial(self, trial: Trial) -> Path:
        _check_id(trial.trial_id, "trial_id")
        self.trials_dir.mkdir(parents=True, exist_ok=True)
        path = self.trials_dir / f"{trial.trial_id}.json"
        path.write_text(serialize_record(trial) + "\n", encoding="utf-8")
        return path

    def load_trial(self, trial_id: str) -> Trial:
        path = self.trials_dir / f"{trial_id}.json"
        if not path.exists():
            raise WorkspaceError(f"unknown trial {trial_id!r}")
        return deserialize_record(path.read_text(encoding="utf-8").strip(), "Trial")

    def list_trial_ids(self) -> list[str]:
        if not self.trials_dir.exists():
            return []
        return sorted(p.stem for p in self.trials_dir.glob("*.json"))

    # -- patients ----------------------------------------------------------------

    def save_patient(
        self,
        record: PatientRecord,
        report: Optional[IngestReport] = None,
        redaction_mode: str = "passthrough",
    ) -> Path:
        _check_id(record.patient_id, "patient_id")
        patient_dir = self.patients_dir / record.patient_id
        pages_dir = patient_dir / "pages"
        pages_dir.mkdir(parents=True, exist_ok=True)
        for page in record.pages:
            (pages_dir / f"{page.page_id}.png").write_bytes(page.image_bytes)
        manifest = {
            "patient_id": record.patient_id,
            "redaction_mode": redaction_mode,
            "documents": [to_jsonable(doc) for doc in record.documents],
            "pages": [
                {
                    "page_id": p.page_id,
                    "document_id": p.document_id,
                    "page_number": p.page_number,
                    "dpi": p.dpi,
                    "redacted": p.redacted,
                }
                for p in record.pages
            ],
        }
        (patient_dir / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        if report is not None:
            quarantine_path = patient_dir / "quarantine.jsonl"
            with open(quarantine_path, "w", encoding="utf-8") as fh:
                for entry in report.quarantined:
                    fh.write(json.dumps(entry.to_json(), sort_keys=True) + "\n")
        return patient_dir

    def load_patient(self, patient_id: str) -> PatientRecord:
        patient_dir = self.patients_dir / patient_id
        manifest_path = patient_dir / "manifest.json"
        if not manifest_path.exists():
            raise WorkspaceError(f"unknown patient {patient_id!r}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        documents = tuple(
            from_jsonable(doc, "SourceDocument") for doc in manifest["documents"]
        )
        pages = []
        for meta in manifest["pages"]:
            png_path = patient_dir / "pages" / f"{meta['page_id']}.png"
            pages.append(
                RecordPage(
                    page_id=meta["page_id"],
                    document_id=meta["document_id"],
                    page_number=meta["page_number"],
                    image_bytes=png_path.read_bytes(),
                    dpi=meta["dpi"],
                    redacted=meta["redacted"],
                )
            )
        return PatientRecord(
            patient_id=manifest["patient_id"], documents=documents, pages=tuple(pages)
        )

    def patient_redaction_mode(self, patient_id: str) -> str:
        manifest_path = self.patients_dir / patient_id / "manifest.json"
        if not manifest_path.exists():
            raise WorkspaceError(f"unknown patient {patient_id!r}")
        return json.loads(manifest_path.read_text(encoding="utf-8")).get(
            "redaction_mode", "passthrough"
        )

    def list_patient_ids(self) -> list[str]:
        if not self.patients_dir.exists():
            return []
        return sorted(p.name for p in self.patients_dir.iterdir() if p.is_dir())

    def find_page(self, page_id: str) -> Optional[tuple[str, Path, bool]]:
        """Locate a page image: (patient_id, png path, redacted flag)."""
        for patient_id in self.list_patient_ids():
            manifest_path = self.patients_dir / patient_id / "manifest.json"
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            for meta in manifest["pages"]:
                if meta["page_id"] == page_id:
                    return (
                        patient_id,
                        self.patients_dir / patient_id / "pages" / f"{page_id}.png",
                        bool(meta["redacted"]),
                    )
        return None

    # -- vector store --------------------------------------------------------------

    def load_store(self) -> VectorStore:
        if self.store_path.exists():
            return VectorStore.load(self.store_path)
        return VectorStore()

    def save_store(self, store: VectorStore) -> None:
        self.store_path.parent.mkdir(parents=True, exist_ok=True)
        store.persist(self.store_path)

    # -- match results --------------------------------------------------------------

    def pair_key(self, patient_id: str, trial_id: str) -> str:
        return f"{_check_id(patient_id, 'patient_id')}__{_check_id(trial_id, 'trial_id')}"

    def save_match_result(
        self,
        patient_id: str,
        trial_id: str,
        relevance: RelevanceResult,
        assessments: tuple[CriterionAssessment, ...],
        strategy_spec: str,
    ) -> Path:
        key = self.pair_key(patient_id, trial_id)
        self.assessments_dir.mkdir(parents=True, exist_ok=True)
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.relevance_dir.mkdir(parents=True, exist_ok=True)

        lines = "".join(serialize_record(a) + "\n" for a in assessments)
        current = self.assessments_dir / f"{key}.jsonl"
        current.write_text(lines, encoding="utf-8")
        run_path = self.runs_dir / f"{key}__{_strategy_slug(strategy_spec)}.jsonl"
        run_path.write_text(lines, encoding="utf-8")
        (self.relevance_dir / f"{key}.json").write_text(
            serialize_record(relevance) + "\n", encoding="utf-8"
        )
        return run_path

    def load_assessments(self, patient_id: str, trial_id: str) -> list[CriterionAssessment]:
        path = self.assessments_dir / f"{self.pair_key(patient_id, trial_id)}.jsonl"
        if not path.exists():
            return []
        return read_records(path, "CriterionAssessment")

    def load_relevance(self, patient_id: str, trial_id: str) -> Optional[RelevanceResult]:
        path = self.relevance_dir / f"{self.pair_key(patient_id, trial_id)}.json"
        if not path.exists():
            return None
        return deserialize_record(path.read_text(encoding="utf-8").strip(), "RelevanceResult")

    def list_assessed_pairs(self) -> list[tuple[str, str]]:
        if not self.assessments_dir.exists():
            return []
        pairs = []
        for path in sorted(self.assessments_dir.glob("*.jsonl")):
            patient_id, _, trial_id = path.stem.partition("__")
            if patient_id and trial_id:
                pairs.append((patient_id, trial_id))
        return pairs

    def load_all_run_assessments(self) -> list[CriterionAssessment]:
        if not self.runs_dir.exists():
            return []
        out: list[CriterionAssessment] = []
        for path in sorted(self.runs_dir.glob("*.jsonl")):
            out.extend(read_records(path, "CriterionAssessment"))
        return out

    # -- feedback --------------------------------------------------------------------

    def append_feedback(self, event: FeedbackEvent) -> bool:
        """Append an event; returns False when event_id already exists (dedup)."""
        self.feedback_path.parent.mkdir(parents=True, exist_ok=True)
        if self.feedback_path.exists():
            existing = {e.event_id for e in self.load_feedback()}
            if event.event_id in existing:
                return False
        with open(self.feedback_path, "a", encoding="utf-8") as fh:
            fh.write(serialize_record(event) + "\n")
        return True

    def load_feedback(self) -> list[FeedbackEvent]:
        if not self.feedback_path.exists():
            return []
        return read_records(self.feedback_path, "FeedbackEvent")
