"""Request-weighted response-time and processing-time aggregates."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional


class IncompleteCloudletError(RuntimeError):
    pass


@dataclass
class Aggregate:
    """Exact weighted sum, count, min and max of millisecond samples."""

    count: int = 0
    total: int = 0
    min: Optional[int] = None
    max: Optional[int] = None

    def add(self, value: int, weight: int = 1):
        self.count += weight
        self.total += value * weight
        self.min = value if self.min is None else min(self.min, value)
        self.max = value if self.max is None else max(self.max, value)

    def merge(self, other: "Aggregate") -> "Aggregate":
        if not other.count:
            return Aggregate(self.count, self.total, self.min, self.max)
        if not self.count:
            return Aggregate(other.count, other.total, other.min, other.max)
        return Aggregate(
            self.count + other.count,
            self.total + other.total,
            min(self.min, other.min),
            max(self.max, other.max),
        )

    @property
    def mean(self) -> Optional[Fraction]:
        return Fraction(self.total, self.count) if self.count else None

    @property
    def mean_ms(self) -> Optional[int]:
        """Mean rounded half-up to a whole millisecond, ``None`` when empty."""
        if not self.count:
            return None
        return (2 * self.total + self.count) // (2 * self.count)


class MetricsStore:
    def __init__(self, user_bases=(), datacenters=()):
        self.per_ub = {ub: Aggregate() for ub in user_bases}
        self.per_dc = {dc: Aggregate() for dc in datacenters}
        self.overall = Aggregate()

    def __eq__(self, other):
        if not isinstance(other, MetricsStore):
            return NotImplemented
        return (self.per_ub, self.per_dc, self.overall) == (other.per_ub, other.per_dc, other.overall)

    def __repr__(self):
        return f"MetricsStore(requests={self.overall.count}, mean_ms={self.overall.mean_ms})"

    def record(self, cloudlet):
        if cloudlet.response_at is None or cloudlet.service_end_at is None:
            raise IncompleteCloudletError(f"cloudlet {cloudlet.id} has not completed")
        weight = cloudlet.group_size
        rt = cloudlet.response_time
        self.per_ub.setdefault(cloudlet.origin, Aggregate()).add(rt, weight)
        self.overall.add(rt, weight)
        self.per_dc.setdefault(cloudlet.assigned_dc, Aggregate()).add(cloudlet.processing_time, weight)

    def merge(self, other: "MetricsStore") -> "MetricsStore":
        merged = MetricsStore()
        for name in ("per_ub", "per_dc"):
            mine, theirs, out = getattr(self, name), getattr(other, name), getattr(merged, name)
            for key in list(mine) + [k for k in theirs if k not in mine]:
                out[key] = mine.get(key, Aggregate()).merge(theirs.get(key, Aggregate()))
        merged.overall = self.overall.merge(other.overall)
        return merged

    def summarize(self):
        """Report rows: the overall line, one per user base, one per data center."""
        rows = [_row("overall", "ALL", self.overall)]
        rows += [_row("user_base", ub, agg) for ub, agg in self.per_ub.items()]
        rows += [_row("datacenter", dc, agg) for dc, agg in self.per_dc.items()]
        return rows


def _row(scope, key, agg):
    return {
        "scope": scope,
        "id": key,
        "requests": agg.count,
        "avg_ms": agg.mean_ms,
        "min_ms": agg.min,
        "max_ms": agg.max,
    }
