from __future__ import annotations

import statistics
from datetime import datetime, timezone
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trialmatch.core import UsageRecord
from trialmatch.gateway import (
    Gateway,
    ModelRequest,
    ModelRole,
    PriceTable,
    RateLimitError,
    RetryPolicy,
    SchemaValidationExhausted,
    TextPart,
    ImagePart,
    TransportError,
    UsageEntry,
    UsageLog,
    usage_totals,
)
from trialmatch.gateway import schemas

from .conftest import make_gateway, tiny_png


def assess_request(text="HbA1c between 6.5% and 9.5%") -> ModelRequest:
    return ModelRequest(
        model_role=ModelRole.ASSESSOR,
        system_prompt="assess",
        user_parts=(TextPart(text),),
        response_schema_id=schemas.CRITERION_ASSESSMENT,
    )


class TestStructuredCompletion:
    def test_scripted_payload_passes_through(self, mock_gateway):
        gateway, mock = mock_gateway
        mock.script(ModelRole.ASSESSOR, {"is_met": True, "rationale": "meets it"})
        result = gateway.complete_structured(assess_request())
        assert result.payload["is_met"] is True
        assert result.retry_count == 0
        assert result.usage.input_tokens > 0

    def test_invalid_twice_then_valid_counts_retries(self, mock_gateway):
        gateway, mock = mock_gateway
        mock.script(
            ModelRole.ASSESSOR,
            "not even json",
            {"wrong_key": 1},
            {"is_met": False, "rationale": "no evidence"},
        )
        result = gateway.complete_structured(assess_request())
        assert result.retry_count == 2
        assert result.payload["is_met"] is False
        # usage accumulates across all attempts
        entries = gateway.usage_log.entries()
        assert entries[-1].retry_count == 2

    def test_always_invalid_exhausts_retries(self):
        gateway, mock = make_gateway(retry=RetryPolicy(max_validation_retries=3, backoff_base=0))
        mock.script(ModelRole.ASSESSOR, *(["{}"] * 10))
        with pytest.raises(SchemaValidationExhausted):
            gateway.complete_structured(assess_request())

    def test_repair_note_appended_on_retry(self, mock_gateway):
        gateway, mock = mock_gateway
        seen = []
        original_complete = mock.complete

        def spy(request):
            seen.append(request.text_content())
            return original_complete(request)

        mock.complete = spy
        mock.script(ModelRole.ASSESSOR, "oops", {"is_met": True, "rationale": "r"})
        gateway.complete_structured(assess_request())
        assert "failed validation" in seen[1]

    def test_unregistered_schema_rejected(self, mock_gateway):
        gateway, _ = mock_gateway
        request = ModelRequest(
            model_role=ModelRole.ASSESSOR,
            system_prompt="s",
            user_parts=(TextPart("x"),),
            response_schema_id="no_such_schema",
        )
        with pytest.raises(Exception, match="unregistered"):
            gateway.complete_structured(request)

    def test_text_only_roles_reject_images(self):
        with pytest.raises(ValueError, match="text-only"):
            ModelRequest(
                model_role=ModelRole.SPLITTER,
                system_prompt="s",
                user_parts=(ImagePart(tiny_png()),),
                response_schema_id=schemas.CRITERIA_SPLIT,
            )


class TestTransportRetries:
    def test_transport_error_then_success(self, mock_gateway):
        gateway, mock = mock_gateway
        mock.script(
            ModelRole.ASSESSOR,
            TransportError("flaky"),
            {"is_met": True, "rationale": "after retry"},
        )
        result = gateway.complete_structured(assess_request())
        assert result.payload["rationale"] == "after retry"
        assert result.attempts == 2
        assert gateway.usage_log.entries()[-1].attempts == 2

    def test_rate_limit_retried(self, mock_gateway):
        gateway, mock = mock_gateway
        mock.script(
            ModelRole.ASSESSOR,
            RateLimitError("throttled"),
            {"is_met": False, "rationale": "ok"},
        )
        result = gateway.complete_structured(assess_request())
        assert result.attempts == 2

    def test_backoff_never_exceeds_max_attempts(self):
        sleeps = []
        gateway, mock = make_gateway(
            retry=RetryPolicy(max_transport_attempts=3, backoff_base=0.25)
        )
        gateway.sleeper = sleeps.append
        mock.script(ModelRole.ASSESSOR, *[TransportError(f"fail {i}") for i in range(10)])
        with pytest.raises(TransportError, match="after 3 attempts"):
            gateway.complete_structured(assess_request())
        assert sleeps == [0.25, 0.5]


class TestEmbedding:
    def test_three_pages_three_vectors_dim8(self, mock_gateway):
        gateway, _ = mock_gateway
        pages = [tiny_png((i, i, i)) for i in (10, 20, 30)]
        batch = gateway.embed_images(pages)
        assert len(batch.vectors) == 3
        assert all(v is not None and v.dimension == 8 for v in batch.vectors)
        assert batch.failures == []

    def test_identical_page_identical_vector(self, mock_gateway):
        gateway, _ = mock_gateway
        page = tiny_png()
        batch = gateway.embed_images([page, page])
        assert batch.vectors[0] == batch.vectors[1]

    def test_empty_list_is_precondition_error(self, mock_gateway):
        gateway, _ = mock_gateway
        with pytest.raises(ValueError):
            gateway.embed_images([])
        with pytest.raises(ValueError):
            gateway.embed_texts([])

    def test_undecodable_image_fails_per_item(self, mock_gateway):
        gateway, _ = mock_gateway
        good = tiny_png()
        batch = gateway.embed_images([good, b"not an image", good])
        assert batch.vectors[0] is not None
        assert batch.vectors[1] is None
        assert batch.vectors[2] is not None
        assert len(batch.failures) == 1 and batch.failures[0][0] == 1

    def test_unit_norm_mock_vectors(self, mock_gateway):
        gateway, _ = mock_gateway
        batch = gateway.embed_texts(["some text"])
        norm = sum(v * v for v in batch.vectors[0].values)
        assert norm == pytest.approx(1.0, abs=1e-9)


class TestMockPurity:
    def test_identical_requests_identical_responses(self):
        gateway_a, _ = make_gateway(seed=7)
        gateway_b, _ = make_gateway(seed=7)
        result_a = gateway_a.complete_structured(assess_request("criterion text"))
        result_b = gateway_b.complete_structured(assess_request("criterion text"))
        assert result_a.payload == result_b.payload
        assert result_a.usage == result_b.usage

    def test_seed_changes_response(self):
        payloads = set()
        for seed in range(6):
            gateway, _ = make_gateway(seed=seed)
            payloads.add(str(gateway.complete_structured(assess_request()).payload))
        assert len(payloads) > 1


class TestUsageAccounting:
    def _entry(self, wall_time=1.0, cost="0", role=ModelRole.ASSESSOR, tokens=(10, 5)):
        return UsageEntry(
            timestamp=datetime(2024, 1, 1, tzinfo=timezone.utc),
            model_role=role,
            usage=UsageRecord(
                input_tokens=tokens[0],
                output_tokens=tokens[1],
                wall_time=wall_time,
                cost=Decimal(cost),
            ),
        )

    def test_mean_wall_time(self):
        entries = [self._entry(wall_time=w) for w in (10.0, 20.0, 30.0)]
        aggregate = usage_totals(entries)
        assert aggregate.wall_time.mean == 20.0
        assert aggregate.totals.wall_time == 60.0

    def test_single_call_cost_point_15(self):
        aggregate = usage_totals([self._entry(cost="0.15")])
        assert aggregate.totals.cost == Decimal("0.15")
        assert aggregate.cost.mean == pytest.approx(0.15)

    def test_empty_selection_zero_totals(self):
        aggregate = usage_totals([])
        assert aggregate.count == 0
        assert aggregate.totals == UsageRecord()
        assert aggregate.wall_time is None and aggregate.cost is None

    def test_role_filter(self):
        entries = [
            self._entry(role=ModelRole.ASSESSOR),
            self._entry(role=ModelRole.SPLITTER),
        ]
        assert usage_totals(entries, model_role=ModelRole.SPLITTER).count == 1

    def test_time_range_filter(self):
        entries = [
            UsageEntry(
                timestamp=datetime(2024, 1, day, tzinfo=timezone.utc),
                model_role=ModelRole.ASSESSOR,
                usage=UsageRecord(wall_time=float(day)),
            )
            for day in (1, 5, 9)
        ]
        window = usage_totals(
            entries,
            start=datetime(2024, 1, 2, tzinfo=timezone.utc),
            end=datetime(2024, 1, 8, tzinfo=timezone.utc),
        )
        assert window.count == 1
        assert window.totals.wall_time == 5.0

    def test_quartiles_match_sorting_oracle(self):
        values = [5.0, 1.0, 9.0, 3.0, 7.0, 2.0, 8.0]
        entries = [self._entry(wall_time=v) for v in values]
        aggregate = usage_totals(entries)

        ordered = sorted(values)
        n = len(ordered)

        def oracle_quantile(i):
            j, remainder = divmod(i * (n - 1), 4)
            if remainder == 0:
                return ordered[j]
            return (ordered[j] * (4 - remainder) + ordered[j + 1] * remainder) / 4

        assert aggregate.wall_time.q1 == oracle_quantile(1)
        assert aggregate.wall_time.median == oracle_quantile(2)
        assert aggregate.wall_time.q3 == oracle_quantile(3)

    @settings(max_examples=100, deadline=None)
    @given(
        input_tokens=st.integers(min_value=0, max_value=10**6),
        output_tokens=st.integers(min_value=0, max_value=10**6),
    )
    def test_cost_recomputation_matches(self, input_tokens, output_tokens):
        table = PriceTable.from_mapping(
            {"Assessor": {"input_per_million": "15", "output_per_million": "60"}}
        )
        cost = table.cost(ModelRole.ASSESSOR, input_tokens, output_tokens)
        price = table.for_role(ModelRole.ASSESSOR)
        assert cost == input_tokens * price.input_per_token + output_tokens * price.output_per_token

    def test_gateway_cost_equals_tokens_times_prices(self):
        gateway, mock = make_gateway(
            prices={"Assessor": {"input_per_million": "15", "output_per_million": "60"}}
        )
        result = gateway.complete_structured(assess_request())
        price = gateway.price_table.for_role(ModelRole.ASSESSOR)
        expected = (
            result.usage.input_tokens * price.input_per_token
            + result.usage.output_tokens * price.output_per_token
        )
        assert result.usage.cost == expected


class TestUsageLogPersistence:
    def test_log_round_trip(self, tmp_path):
        path = tmp_path / "usage.jsonl"
        log = UsageLog(path)
        log.append(
            UsageEntry(
                timestamp=datetime(2024, 5, 1, tzinfo=timezone.utc),
                model_role=ModelRole.EMBEDDER,
                usage=UsageRecord(3, 0, 0.5, Decimal("0.001")),
                attempts=2,
                retry_count=1,
                context="test",
            )
        )
        reloaded = UsageLog(path)
        assert reloaded.entries() == log.entries()
