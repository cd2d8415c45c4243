"""Shared fixture data: the 13-criterion diabetic-cohort trial and patients."""

from __future__ import annotations

import io
import json
from pathlib import Path

from PIL import Image

# The thirteen cohort-selection criteria used by the public benchmark suite.
COHORT_CRITERIA = [
    "Drug abuse, current or past",
    "Current alcohol use over weekly recommended limits",
    "Patient must speak English",
    "Patient must make their own medical decisions",
    "History of intra-abdominal surgery, small or large intestine resection, "
    "or small bowel obstruction",
    "Major diabetes-related complication such as amputation, kidney damage, "
    "skin conditions, retinopathy, nephropathy, or neuropathy resulting from "
    "uncontrolled diabetes",
    "Advanced cardiovascular disease, defined as two or more of: taking 2 or "
    "more medications to treat CAD, history of myocardial infarction, "
    "currently experiencing angina, or ischemia past or present",
    "MI in the past 6 months",
    "Diagnosis of ketoacidosis in the past year",
    "Taken a dietary supplement (excluding vitamin D) in the past 2 months",
    "Use of aspirin to prevent MI",
    "Any hemoglobin A1c (HbA1c) value between 6.5% and 9.5%",
    "Serum creatinine >= upper limit of normal",
]


def cohort_criteria_text() -> str:
    lines = ["Inclusion criteria:"]
    lines.extend(f"- {c}" for c in COHORT_CRITERIA)
    return "\n".join(lines)


def cohort_trial_json(trial_id: str = "trial-cohort") -> dict:
    return {
        "trial_id": trial_id,
        "title": "Diabetic Cohort Selection Study",
        "raw_criteria_text": cohort_criteria_text(),
        "phase": "II",
        "therapeutic_area": "Endocrinology",
    }


PATIENT_NOTES = {
    "p-alpha": (
        "Progress note 2017-11-02.\n"
        "58F with type 2 diabetes mellitus, HbA1c 7.2% this visit.\n"
        "History of myocardial infarction 2017-09-15; on aspirin 81mg daily.\n"
        "Takes a fish oil supplement since October 2017.\n"
        "Serum creatinine 1.4 mg/dL (ULN 1.2). Speaks English, makes own decisions.\n"
    ),
    "p-beta": (
        "Clinic note 2017-12-12.\n"
        "64M, diabetes mellitus with diabetic neuropathy and retinopathy.\n"
        "No history of MI. Denies alcohol or drug use.\n"
        "HbA1c 8.9% in November 2017. Creatinine 0.9 mg/dL.\n"
    ),
    "p-gamma": (
        "Intake note 2017-10-20.\n"
        "49F, diabetes mellitus type 2 without complications.\n"
        "Ketoacidosis episode in March 2017 requiring admission.\n"
        "HbA1c 6.8%. No supplements. Speaks English.\n"
    ),
}


def patient_scan_pdf(shade: int) -> bytes:
    pages = [
        Image.new("RGB", (160, 220), (shade, shade, 240)),
        Image.new("RGB", (160, 220), (240, shade, shade)),
    ]
    buffer = io.BytesIO()
    pages[0].save(buffer, format="PDF", save_all=True, append_images=pages[1:], resolution=72)
    return buffer.getvalue()


def write_cohort_fixture(root: Path) -> dict:
    """Write the trial file plus 3 patients' documents; returns the file map."""
    root.mkdir(parents=True, exist_ok=True)
    trial_path = root / "trial.json"
    trial_path.write_text(json.dumps(cohort_trial_json()), encoding="utf-8")
    files: dict[str, list[Path]] = {}
    for index, (patient_id, note) in enumerate(sorted(PATIENT_NOTES.items())):
        note_path = root / f"{patient_id}-note.txt"
        note_path.write_text(note, encoding="utf-8")
        pdf_path = root / f"{patient_id}-scan.pdf"
        pdf_path.write_bytes(patient_scan_pdf(40 + 60 * index))
        files[patient_id] = [note_path, pdf_path]
    return {"trial": trial_path, "patients": files}
