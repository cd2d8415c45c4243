from __future__ import annotations

from pathlib import Path

import pytest

from trialmatch.replication import (
    BENCHMARK_CRITERIA,
    benchmark_trial,
    parse_benchmark_xml,
    run_replication,
)

from .conftest import make_gateway

SYNTHETIC_XML = """<?xml version="1.0" encoding="UTF-8" ?>
<PatientMatching>
<TEXT><![CDATA[
Record date: 2017-11-02
58F with type 2 diabetes mellitus. HbA1c 7.2%.
History of MI 2017-09-15; on aspirin 81mg daily.
]]></TEXT>
<TAGS>
<ABDOMINAL met="not met" />
<ADVANCED-CAD met="met" />
<ALCOHOL-ABUSE met="not met" />
<ASP-FOR-MI met="met" />
<CREATININE met="not met" />
<DIETSUPP-2MOS met="met" />
<DRUG-ABUSE met="not met" />
<ENGLISH met="met" />
<HBA1C met="met" />
<KETO-1YR met="not met" />
<MAJOR-DIABETES met="met" />
<MAKES-DECISIONS met="met" />
<MI-6MOS met="not met" />
</TAGS>
</PatientMatching>
"""


@pytest.fixture
def data_dir(tmp_path) -> Path:
    for name in ("101", "102"):
        (tmp_path / f"{name}.xml").write_text(SYNTHETIC_XML, encoding="utf-8")
    return tmp_path


class TestParse:
    def test_text_and_all_thirteen_tags(self, tmp_path):
        path = tmp_path / "101.xml"
        path.write_text(SYNTHETIC_XML, encoding="utf-8")
        patient = parse_benchmark_xml(path)
        assert patient.patient_id == "101"
        assert "diabetes mellitus" in patient.text
        assert set(patient.gold) == set(BENCHMARK_CRITERIA)
        assert patient.gold["HBA1C"] == "met"
        assert patient.gold["MI-6MOS"] == "not met"

    def test_not_a_patient_file(self, tmp_path):
        path = tmp_path / "bad.xml"
        path.write_text("<root></root>", encoding="utf-8")
        with pytest.raises(ValueError, match="TEXT/TAGS"):
            parse_benchmark_xml(path)


class TestHarness:
    def test_benchmark_trial_has_thirteen_prepped_criteria(self):
        trial = benchmark_trial()
        assert len(trial.criteria) == 13
        assert trial.prepped

    def test_mock_run_covers_every_labeled_pair(self, data_dir):
        gateway, _ = make_gateway(seed=1)
        result = run_replication(gateway, data_dir)
        assert result.patients == 2
        assert result.assessed == 26
        assert set(result.labels) == set(result.predictions)
        assert result.report is not None
        assert result.report.total == 26

    def test_limit_bounds_patient_count(self, data_dir):
        gateway, _ = make_gateway(seed=1)
        result = run_replication(gateway, data_dir, limit=1)
        assert result.patients == 1

    def test_empty_dir_rejected(self, tmp_path):
        gateway, _ = make_gateway()
        with pytest.raises(ValueError, match="no benchmark XML"):
            run_replication(gateway, tmp_path)
