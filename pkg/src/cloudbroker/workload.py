"""User bases and the grouped request traffic (cloudlets) they generate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .topology import check_region

HOUR_MS = 3_600_000
DAY_MS = 24 * HOUR_MS

ARRIVAL_MODES = ("deterministic", "poisson")


@dataclass(frozen=True)
class UserBase:
    id: str
    region: int
    peak_window: tuple = (0.0, 0.0)
    users_peak: int = 0
    users_offpeak: int = 0
    requests_per_user_per_hour: int = 12
    request_size: int = 100
    instruction_length: int = 500

    def __post_init__(self):
        where = f"user_bases[{self.id}]"
        check_region(self.region, f"{where}.region")
        start, end = self.peak_window
        if not 0 <= start < end <= 24:
            raise ValueError(
                f"{where}.peak_window: need 0 <= start < end <= 24, got {self.peak_window!r}"
            )
        for name in ("users_peak", "users_offpeak", "requests_per_user_per_hour",
                     "request_size", "instruction_length"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ValueError(f"{where}.{name}: must be a non-negative integer, got {value!r}")
        if self.users_peak < self.users_offpeak:
            raise ValueError(f"{where}.users_peak: must be >= users_offpeak")
        object.__setattr__(self, "peak_window", (float(start), float(end)))

    def scaled_down(self, factor: int) -> "UserBase":
        return UserBase(
            id=self.id,
            region=self.region,
            peak_window=self.peak_window,
            users_peak=round(self.users_peak / factor),
            users_offpeak=round(self.users_offpeak / factor),
            requests_per_user_per_hour=self.requests_per_user_per_hour,
            request_size=self.request_size,
            instruction_length=self.instruction_length,
        )

    def to_dict(self):
        return {
            "id": self.id,
            "region": self.region,
            "peak_window": list(self.peak_window),
            "users_peak": self.users_peak,
            "users_offpeak": self.users_offpeak,
            "requests_per_user_per_hour": self.requests_per_user_per_hour,
            "request_size": self.request_size,
            "instruction_length": self.instruction_length,
        }


# Six user bases of a social networking application, one per region.
REFERENCE_USER_BASES = (
    UserBase("UB1", 0, (13, 15), 11_048_660, 1_104_866),
    UserBase("UB2", 1, (15, 17), 5_626_555, 562_655),
    UserBase("UB3", 2, (20, 22), 11_641_787, 1_164_178),
    UserBase("UB4", 3, (1, 3), 10_764_114, 1_076_411),
    UserBase("UB5", 4, (21, 23), 2_010_279, 201_027),
    UserBase("UB6", 5, (9, 11), 679_869, 67_986),
)


@dataclass(eq=False)
class Cloudlet:
    """A batch of user requests travelling through the system as one unit."""

    id: int
    origin: str
    origin_region: int
    group_size: int
    total_instructions: int
    payload_size: int
    emitted_at: int
    arrived_dc_at: Optional[int] = None
    service_start_at: Optional[int] = None
    service_end_at: Optional[int] = None
    response_at: Optional[int] = None
    assigned_dc: Optional[int] = None
    assigned_vms: list = field(default_factory=list)
    slices_left: int = 0

    @property
    def response_time(self) -> int:
        return self.response_at - self.emitted_at

    @property
    def processing_time(self) -> int:
        return self.service_end_at - self.arrived_dc_at


def active_users(ub: UserBase, clock_gmt_hour: float) -> int:
    start, end = ub.peak_window
    return ub.users_peak if start <= clock_gmt_hour < end else ub.users_offpeak


def _rate_segments(ub, sim_start_gmt_hour, duration):
    """Split [0, duration) into pieces of constant active-user count."""
    start_ms = round(sim_start_gmt_hour * HOUR_MS) % DAY_MS
    peak_lo, peak_hi = (round(h * HOUR_MS) for h in ub.peak_window)
    cuts = {0, duration}
    for edge in (peak_lo, peak_hi):
        t = (edge - start_ms) % DAY_MS
        while t < duration:
            if t > 0:
                cuts.add(t)
            t += DAY_MS
    cuts = sorted(cuts)
    for a, b in zip(cuts, cuts[1:]):
        of_day = (start_ms + a) % DAY_MS
        users = ub.users_peak if peak_lo <= of_day < peak_hi else ub.users_offpeak
        yield a, b, users


def generate(ub: UserBase, sim_start_gmt_hour: float, duration: int, rng=None,
             grouping_factor: int = 10_000, mode: str = "deterministic"):
    """Emission schedule for one user base as a list of ``(emit_ms, group_size)``.

    In ``deterministic`` mode full groups are evenly spaced over each
    constant-rate segment, followed by at most one partial group holding the
    segment's remainder. ``poisson`` mode draws exponential gaps between full
    groups from ``rng`` (a :class:`random.Random`); the request count then
    matches the rate only in expectation.
    """
    if duration <= 0:
        raise ValueError("duration: must be > 0")
    if mode not in ARRIVAL_MODES:
        raise ValueError(f"arrival_mode: must be one of {ARRIVAL_MODES}, got {mode!r}")
    out = []
    for a, b, users in _rate_segments(ub, sim_start_gmt_hour, duration):
        per_hour = users * ub.requests_per_user_per_hour
        if per_hour == 0:
            continue
        if mode == "deterministic":
            total = per_hour * (b - a) // HOUR_MS
            full, rest = divmod(total, grouping_factor)
            for i in range(full):
                out.append((a + i * grouping_factor * HOUR_MS // per_hour, grouping_factor))
            if rest:
                out.append((a + full * grouping_factor * HOUR_MS // per_hour, rest))
        else:
            mean_gap = grouping_factor * HOUR_MS / per_hour
            t = a + rng.expovariate(1.0 / mean_gap)
            while t < b:
                out.append((math.floor(t), grouping_factor))
                t += rng.expovariate(1.0 / mean_gap)
    return out
