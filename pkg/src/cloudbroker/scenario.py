"""Scenario configuration: defaults, JSON document loading, validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .broker import BROKER_POLICIES
from .datacenter import LB_POLICIES
from .topology import InternetCharacteristics, check_region
from .workload import ARRIVAL_MODES, REFERENCE_USER_BASES, UserBase


class ScenarioError(ValueError):
    """A configuration document is malformed or violates a constraint."""


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    seed: int = 0
    duration_ms: int = 3_600_000
    sim_start_gmt_hour: float = 13.0
    user_bases: tuple = REFERENCE_USER_BASES
    arrival_mode: str = "deterministic"
    dc_placement: tuple = (0, 2)
    vm_count: int = 25
    vm_capacity: int = 500_000
    hosts: int = 40
    processors_per_host: int = 4
    internet: InternetCharacteristics = field(default_factory=InternetCharacteristics)
    broker_policy: str = "round_robin"
    broker_params: dict = field(default_factory=dict)
    lb_policy: str = "round_robin"
    user_grouping_factor: int = 10_000
    request_grouping_factor: int = 1_000

    def __post_init__(self):
        object.__setattr__(self, "user_bases", tuple(self.user_bases))
        object.__setattr__(self, "dc_placement", tuple(self.dc_placement))
        object.__setattr__(self, "broker_params", dict(self.broker_params))
        _validate(self)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def scaled_down(self, factor: int) -> "Scenario":
        """A miniature of this scenario with the same offered load per unit of capacity.

        User counts and VM capacity are both divided by ``factor``, so
        utilization is preserved while the number of cloudlets to simulate
        shrinks by ``factor``.
        """
        if factor < 1:
            raise ScenarioError(f"scale_down: must be >= 1, got {factor}")
        if factor == 1:
            return self
        capacity = max(1, round(self.vm_capacity / factor))
        return self.replace(
            user_bases=tuple(ub.scaled_down(factor) for ub in self.user_bases),
            vm_capacity=capacity,
        )

    def to_dict(self):
        return {
            "name": self.name,
            "seed": self.seed,
            "duration_ms": self.duration_ms,
            "sim_start_gmt_hour": self.sim_start_gmt_hour,
            "user_bases": [ub.to_dict() for ub in self.user_bases],
            "arrival_mode": self.arrival_mode,
            "dc_placement": list(self.dc_placement),
            "vm_count": self.vm_count,
            "vm_capacity": self.vm_capacity,
            "hosts": self.hosts,
            "processors_per_host": self.processors_per_host,
            "internet": self.internet.to_dict(),
            "broker": {"policy": self.broker_policy, **self.broker_params},
            "lb_policy": self.lb_policy,
            "user_grouping_factor": self.user_grouping_factor,
            "request_grouping_factor": self.request_grouping_factor,
        }


def _positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ScenarioError(f"{name}: must be an integer >= {minimum}, got {value!r}")


def _validate(s):
    if not isinstance(s.seed, int) or isinstance(s.seed, bool):
        raise ScenarioError(f"seed: must be an integer, got {s.seed!r}")
    _positive_int(s.duration_ms, "duration_ms")
    if not isinstance(s.sim_start_gmt_hour, (int, float)) or not 0 <= s.sim_start_gmt_hour < 24:
        raise ScenarioError(f"sim_start_gmt_hour: must be in [0, 24), got {s.sim_start_gmt_hour!r}")
    if s.arrival_mode not in ARRIVAL_MODES:
        raise ScenarioError(f"arrival_mode: must be one of {ARRIVAL_MODES}, got {s.arrival_mode!r}")
    if not s.dc_placement:
        raise ScenarioError("dc_placement: at least one data center is required")
    for i, region in enumerate(s.dc_placement):
        try:
            check_region(region, f"dc_placement[{i}]")
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
    _positive_int(s.hosts, "hosts")
    _positive_int(s.processors_per_host, "processors_per_host")
    _positive_int(s.vm_count, "vm_count")
    if s.vm_count > s.hosts * s.processors_per_host:
        raise ScenarioError(
            f"vm_count: {s.vm_count} VMs exceed {s.hosts} hosts x {s.processors_per_host} processors"
        )
    _positive_int(s.vm_capacity, "vm_capacity")
    _positive_int(s.user_grouping_factor, "user_grouping_factor")
    _positive_int(s.request_grouping_factor, "request_grouping_factor")
    if s.broker_policy not in BROKER_POLICIES:
        raise ScenarioError(f"broker.policy: must be one of {BROKER_POLICIES}, got {s.broker_policy!r}")
    if s.lb_policy not in LB_POLICIES:
        raise ScenarioError(f"lb_policy: must be one of {LB_POLICIES}, got {s.lb_policy!r}")
    ids = [ub.id for ub in s.user_bases]
    if len(set(ids)) != len(ids):
        raise ScenarioError("user_bases: ids must be unique")


_FIELDS = {
    "name", "seed", "duration_ms", "sim_start_gmt_hour", "user_bases", "arrival_mode",
    "dc_placement", "vm_count", "vm_capacity", "hosts", "processors_per_host", "internet",
    "broker", "lb_policy", "user_grouping_factor", "request_grouping_factor", "scale_down",
    "sweep",
}
_UB_FIELDS = {f.name for f in dataclasses.fields(UserBase)}


def load_scenario(document) -> Scenario:
    """Build a validated :class:`Scenario` from a config document.

    ``document`` is a mapping, a JSON string, or ``None``. Missing keys take
    their defaults; an empty document yields the six-region reference setup.
    Every failure raises :class:`ScenarioError` naming the offending field.
    """
    if document is None:
        document = {}
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document) if document.strip() else {}
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"parse error: {exc}") from None
    if not isinstance(document, dict):
        raise ScenarioError("document: top level must be an object")
    unknown = set(document) - _FIELDS
    if unknown:
        raise ScenarioError(f"{sorted(unknown)[0]}: unknown field")

    kwargs = {k: document[k] for k in (
        "name", "seed", "duration_ms", "sim_start_gmt_hour", "arrival_mode", "dc_placement",
        "vm_count", "vm_capacity", "hosts", "processors_per_host", "lb_policy",
        "user_grouping_factor", "request_grouping_factor",
    ) if k in document}
    if "dc_placement" in kwargs and not isinstance(kwargs["dc_placement"], list):
        raise ScenarioError("dc_placement: must be a list of region indices")

    if "user_bases" in document:
        rows = document["user_bases"]
        if not isinstance(rows, list):
            raise ScenarioError("user_bases: must be a list")
        bases = []
        for i, row in enumerate(rows):
            if not isinstance(row, dict):
                raise ScenarioError(f"user_bases[{i}]: must be an object")
            extra = set(row) - _UB_FIELDS
            if extra:
                raise ScenarioError(f"user_bases[{i}].{sorted(extra)[0]}: unknown field")
            if "id" not in row or "region" not in row:
                raise ScenarioError(f"user_bases[{i}]: 'id' and 'region' are required")
            row = dict(row)
            if "peak_window" in row:
                window = row["peak_window"]
                if not isinstance(window, list) or len(window) != 2:
                    raise ScenarioError(f"user_bases[{i}].peak_window: must be [start_hour, end_hour]")
                row["peak_window"] = tuple(window)
            try:
                bases.append(UserBase(**row))
            except (TypeError, ValueError) as exc:
                raise ScenarioError(str(exc)) from None
        kwargs["user_bases"] = tuple(bases)

    if "internet" in document:
        net = document["internet"]
        if not isinstance(net, dict) or set(net) - {"latency", "bandwidth"}:
            raise ScenarioError("internet: must be an object with 'latency' and/or 'bandwidth'")
        try:
            kwargs["internet"] = InternetCharacteristics(**net)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None

    if "broker" in document:
        broker = document["broker"]
        if isinstance(broker, str):
            broker = {"policy": broker}
        if not isinstance(broker, dict):
            raise ScenarioError("broker: must be a policy name or an object")
        broker = dict(broker)
        if "policy" in broker:
            kwargs["broker_policy"] = broker.pop("policy")
        kwargs["broker_params"] = broker

    try:
        scenario = Scenario(**kwargs)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None
    _check_broker_params(scenario)

    if "scale_down" in document:
        _positive_int(document["scale_down"], "scale_down")
        scenario = scenario.scaled_down(document["scale_down"])
    return scenario


def _check_broker_params(scenario):
    from .engine import Simulation

    try:
        Simulation(scenario)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def load_scenario_file(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    return load_scenario(text)
