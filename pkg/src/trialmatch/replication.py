"""Optional live replication harness for the public cohort-selection benchmark.

Requires (1) the benchmark XML files obtained under their data-use agreement
and (2) live provider credentials in the gateway config. Each patient's
clinical notes are rendered to 72-DPI page images, assessed with the
all-pages strategy against the thirteen benchmark criteria, and scored
against the gold tags. This runs for hours and costs real money; it is
never executed in CI (see README).
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional

from .core import (
    CriterionKind,
    EligibilityCriterion,
    PageSelection,
    PatientRecord,
    RetrievalStrategy,
    StrategyVariant,
    Trial,
    Verdict,
)
from .evaluation import ClassificationReport, classification_report
from .gateway import Gateway
from .ingest import ingest_patient
from .matching import assess_criterion, document_order
from .store import VectorStore

logger = logging.getLogger(__name__)

# Benchmark tag -> criterion description, in the benchmark's canonical order.
BENCHMARK_CRITERIA: dict[str, str] = {
    "DRUG-ABUSE": "Drug abuse, current or past",
    "ALCOHOL-ABUSE": "Current alcohol use over weekly recommended limits",
    "ENGLISH": "Patient must speak English",
    "MAKES-DECISIONS": "Patient must make their own medical decisions",
    "ABDOMINAL": "History of intra-abdominal surgery, small or large intestine "
    "resection, or small bowel obstruction",
    "MAJOR-DIABETES": "Major diabetes-related complication. Major complication is "
    "defined as any of the following resulting from (or strongly correlated with) "
    "uncontrolled diabetes: amputation, kidney damage, skin conditions, "
    "retinopathy, nephropathy, neuropathy",
    "ADVANCED-CAD": "Advanced cardiovascular disease, defined as having 2 or more "
    "of: taking 2 or more medications to treat CAD, history of myocardial "
    "infarction, currently experiencing angina, ischemia past or present",
    "MI-6MOS": "MI in the past 6 months",
    "KETO-1YR": "Diagnosis of ketoacidosis in the past year",
    "DIETSUPP-2MOS": "Taken a dietary supplement (excluding vitamin D) in the past 2 months",
    "ASP-FOR-MI": "Use of aspirin to prevent MI",
    "HBA1C": "Any hemoglobin A1c (HbA1c) value between 6.5% and 9.5%",
    "CREATININE": "Serum creatinine >= upper limit of normal",
}


@dataclass(frozen=True)
class BenchmarkPatient:
    patient_id: str
    text: str
    gold: dict[str, str]  # tag -> "met" | "not met"


def parse_benchmark_xml(path: Path) -> BenchmarkPatient:
    """Parse one benchmark patient file (TEXT plus met/not-met TAGS)."""
    tree = ET.parse(path)
    root = tree.getroot()
    text_node = root.find("TEXT")
    tags_node = root.find("TAGS")
    if text_node is None or tags_node is None:
        raise ValueError(f"{path}: not a benchmark patient file (TEXT/TAGS missing)")
    gold = {}
    for tag in tags_node:
        gold[tag.tag] = tag.attrib.get("met", "").strip().lower()
    return BenchmarkPatient(
        patient_id=path.stem, text=text_node.text or "", gold=gold
    )


def benchmark_trial() -> Trial:
    criteria = tuple(
        EligibilityCriterion(
            criterion_id=tag,
            description=description,
            kind=CriterionKind.INCLUSION,
            guidelines=(description,),
        )
        for tag, description in BENCHMARK_CRITERIA.items()
    )
    return Trial(
        trial_id="benchmark-cohort",
        title="Cohort Selection Benchmark",
        raw_criteria_text="\n".join(BENCHMARK_CRITERIA.values()),
        criteria=criteria,
        relevance_criterion="Patient has a diagnosis of diabetes mellitus",
        prepped=True,
    )


@dataclass
class ReplicationResult:
    patients: int = 0
    assessed: int = 0
    labels: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)
    report: Optional[ClassificationReport] = None

    @property
    def accuracy(self) -> float:
        return self.report.accuracy if self.report else 0.0


def run_replication(
    gateway: Gateway,
    data_dir: Path,
    as_of_date: date = date(2018, 1, 1),
    text_dpi: int = 72,
    limit: Optional[int] = None,
) -> ReplicationResult:
    """Assess every benchmark patient with the all-pages strategy.

    Predictions map Met -> "met" and Unmet -> "not met"; Unknown counts as
    neither (always wrong against the binary gold labels).
    """
    trial = benchmark_trial()
    result = ReplicationResult()
    strategy = RetrievalStrategy(StrategyVariant.ALL_PAGES)
    xml_files = sorted(Path(data_dir).glob("*.xml"))
    if limit:
        xml_files = xml_files[:limit]
    if not xml_files:
        raise ValueError(f"no benchmark XML files under {data_dir}")

    for xml_path in xml_files:
        patient = parse_benchmark_xml(xml_path)
        store = VectorStore()
        record, _ = ingest_patient(
            patient.patient_id,
            [(f"{patient.patient_id}.txt", patient.text.encode("utf-8"))],
            gateway,
            store,
            text_dpi=text_dpi,
        )
        result.patients += 1
        selection = PageSelection(
            strategy=strategy,
            selected_page_ids=tuple(p.page_id for p in document_order(record)),
        )
        for criterion in trial.criteria:
            gold = patient.gold.get(criterion.criterion_id)
            if gold not in ("met", "not met"):
                continue
            assessment = assess_criterion(
                gateway, record, trial, criterion, selection, as_of_date
            )
            result.assessed += 1
            key = (patient.patient_id, criterion.criterion_id)
            result.labels[key] = gold
            if assessment.verdict is Verdict.MET:
                result.predictions[key] = "met"
            elif assessment.verdict is Verdict.UNMET:
                result.predictions[key] = "not met"
            else:
                result.predictions[key] = "unknown"
        logger.info("assessed benchmark patient %s", patient.patient_id)

    result.report = classification_report(
        result.labels, result.predictions, ["met", "not met"]
    )
    return result
