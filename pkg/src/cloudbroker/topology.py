"""Regions and internet characteristics (latency and bandwidth between regions)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

NUM_REGIONS = 6

# One-way latency in ms. Symmetric, tiered by rough continental distance:
# R0 N. America, R1 S. America, R2 Europe, R3 Asia, R4 Africa, R5 Oceania.
DEFAULT_LATENCY = (
    (25, 100, 150, 250, 250, 100),
    (100, 25, 250, 500, 350, 200),
    (150, 250, 25, 150, 150, 200),
    (250, 500, 150, 25, 500, 500),
    (250, 350, 150, 500, 25, 500),
    (100, 200, 200, 500, 500, 25),
)

# Throughput in bytes per ms (2 Gbit/s inside a region, 1 Gbit/s across).
DEFAULT_BANDWIDTH = tuple(
    tuple(250_000 if src == dst else 125_000 for dst in range(NUM_REGIONS))
    for src in range(NUM_REGIONS)
)


def check_region(value, name="region"):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name}: region index must be an integer, got {value!r}")
    if not 0 <= value < NUM_REGIONS:
        raise ValueError(f"{name}: region index must be in [0, {NUM_REGIONS - 1}], got {value}")
    return value


def _as_matrix(rows, name):
    try:
        matrix = tuple(tuple(row) for row in rows)
    except TypeError:
        raise ValueError(f"{name}: expected a {NUM_REGIONS}x{NUM_REGIONS} matrix") from None
    if len(matrix) != NUM_REGIONS or any(len(row) != NUM_REGIONS for row in matrix):
        raise ValueError(f"{name}: expected a {NUM_REGIONS}x{NUM_REGIONS} matrix")
    for i, row in enumerate(matrix):
        for j, cell in enumerate(row):
            if isinstance(cell, bool) or not isinstance(cell, int):
                raise ValueError(f"{name}[{i}][{j}]: must be an integer, got {cell!r}")
    return matrix


@dataclass(frozen=True)
class InternetCharacteristics:
    """Latency (ms, one-way) and bandwidth (bytes/ms) between every pair of regions.

    Transfers are independent of one another: there is no link contention.
    """

    latency: Sequence[Sequence[int]] = field(default=DEFAULT_LATENCY)
    bandwidth: Sequence[Sequence[int]] = field(default=DEFAULT_BANDWIDTH)

    def __post_init__(self):
        latency = _as_matrix(self.latency, "internet.latency")
        bandwidth = _as_matrix(self.bandwidth, "internet.bandwidth")
        for i, row in enumerate(latency):
            for j, cell in enumerate(row):
                if cell < 0:
                    raise ValueError(f"internet.latency[{i}][{j}]: must be >= 0, got {cell}")
        for i, row in enumerate(bandwidth):
            for j, cell in enumerate(row):
                if cell <= 0:
                    raise ValueError(f"internet.bandwidth[{i}][{j}]: must be > 0, got {cell}")
        object.__setattr__(self, "latency", latency)
        object.__setattr__(self, "bandwidth", bandwidth)

    def transfer_delay(self, src: int, dst: int, size: int) -> int:
        """Milliseconds to move ``size`` bytes from region ``src`` to ``dst``.

        Latency plus transmission time, the latter rounded up to a whole ms.
        """
        return self.latency[src][dst] + -(-size // self.bandwidth[src][dst])

    def proximity_order(self, src: int) -> list[int]:
        """All regions sorted by latency from ``src``; equal latencies by index."""
        row = self.latency[src]
        return sorted(range(NUM_REGIONS), key=lambda r: (row[r], r))

    def to_dict(self):
        return {
            "latency": [list(row) for row in self.latency],
            "bandwidth": [list(row) for row in self.bandwidth],
        }
