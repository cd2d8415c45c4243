"""Usage accounting: price table, append-only call log, aggregation.

Costs are exact: prices and per-call costs are Decimal, so aggregate totals
always equal summed tokens times the configured per-token prices.
"""

from __future__ import annotations

import json
import statistics
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Optional

from ..core import UsageRecord
from .base import ModelRole

MILLION = Decimal(1_000_000)


@dataclass(frozen=True)
class RolePrice:
    input_per_token: Decimal
    output_per_token: Decimal

    @classmethod
    def per_million(cls, input_per_million, output_per_million) -> "RolePrice":
        return cls(
            input_per_token=Decimal(str(input_per_million)) / MILLION,
            output_per_token=Decimal(str(output_per_million)) / MILLION,
        )


DEFAULT_PRICES: dict[str, RolePrice] = {
    "default": RolePrice.per_million("2.5", "10"),
}


@dataclass(frozen=True)
class PriceTable:
    """Per-role per-token prices; unknown roles fall back to ``default``."""

    prices: dict[str, RolePrice] = field(default_factory=lambda: dict(DEFAULT_PRICES))

    def for_role(self, role: ModelRole) -> RolePrice:
        return self.prices.get(role.value) or self.prices.get("default") or RolePrice(
            Decimal(0), Decimal(0)
        )

    def cost(self, role: ModelRole, input_tokens: int, output_tokens: int) -> Decimal:
        price = self.for_role(role)
        return (
            input_tokens * price.input_per_token
            + output_tokens * price.output_per_token
        )

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PriceTable":
        prices = dict(DEFAULT_PRICES)
        for role_name, entry in (mapping or {}).items():
            prices[role_name] = RolePrice.per_million(
                entry.get("input_per_million", "0"),
                entry.get("output_per_million", "0"),
            )
        return cls(prices=prices)


@dataclass(frozen=True)
class UsageEntry:
    """One logged gateway call."""

    timestamp: datetime
    model_role: ModelRole
    usage: UsageRecord
    attempts: int = 1
    retry_count: int = 0
    context: str = ""


class UsageLog:
    """Append-only line-delimited usage log; appends are atomic."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._entries: list[UsageEntry] = []
        if self.path and self.path.exists():
            self._entries = list(self._read(self.path))

    def append(self, entry: UsageEntry) -> None:
        with self._lock:
            self._entries.append(entry)
            if self.path:
                line = json.dumps(self._encode(entry), sort_keys=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")

    def entries(self) -> list[UsageEntry]:
        with self._lock:
            return list(self._entries)

    @staticmethod
    def _encode(entry: UsageEntry) -> dict:
        return {
            "timestamp": entry.timestamp.isoformat(),
            "model_role": entry.model_role.value,
            "input_tokens": entry.usage.input_tokens,
            "output_tokens": entry.usage.output_tokens,
            "wall_time": entry.usage.wall_time,
            "cost": str(entry.usage.cost),
            "attempts": entry.attempts,
            "retry_count": entry.retry_count,
            "context": entry.context,
        }

    @staticmethod
    def _read(path: Path) -> Iterable[UsageEntry]:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                yield UsageEntry(
                    timestamp=datetime.fromisoformat(raw["timestamp"]),
                    model_role=ModelRole(raw["model_role"]),
                    usage=UsageRecord(
                        input_tokens=int(raw["input_tokens"]),
                        output_tokens=int(raw["output_tokens"]),
                        wall_time=float(raw["wall_time"]),
                        cost=Decimal(raw["cost"]),
                    ),
                    attempts=int(raw.get("attempts", 1)),
                    retry_count=int(raw.get("retry_count", 0)),
                    context=raw.get("context", ""),
                )


@dataclass(frozen=True)
class Distribution:
    mean: float
    q1: float
    median: float
    q3: float


@dataclass(frozen=True)
class UsageAggregate:
    count: int
    totals: UsageRecord
    wall_time: Optional[Distribution] = None
    cost: Optional[Distribution] = None


def _distribution(values: list[float]) -> Distribution:
    mean = statistics.fmean(values)
    if len(values) == 1:
        v = values[0]
        return Distribution(mean=mean, q1=v, median=v, q3=v)
    q1, median, q3 = statistics.quantiles(values, n=4, method="inclusive")
    return Distribution(mean=mean, q1=q1, median=median, q3=q3)


def usage_totals(
    entries: Iterable[UsageEntry],
    model_role: Optional[ModelRole] = None,
    start: Optional[datetime] = None,
    end: Optional[datetime] = None,
) -> UsageAggregate:
    """Aggregate matching calls: exact sums plus mean/quartile distributions.

    An empty selection yields zero totals with distributions absent.
    """
    selected = [
        e
        for e in entries
        if (model_role is None or e.model_role is model_role)
        and (start is None or e.timestamp >= start)
        and (end is None or e.timestamp <= end)
    ]
    if not selected:
        return UsageAggregate(count=0, totals=UsageRecord())

    totals = UsageRecord()
    for e in selected:
        totals = totals + e.usage
    return UsageAggregate(
        count=len(selected),
        totals=totals,
        wall_time=_distribution([e.usage.wall_time for e in selected]),
        cost=_distribution([float(e.usage.cost) for e in selected]),
    )


def utcnow() -> datetime:
    return datetime.now(timezone.utc)
