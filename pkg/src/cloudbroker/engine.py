"""Discrete-event core: integer-millisecond clock, event queue, main loop.

A cloudlet's life follows the request routing path of a user request:

    CLOUDLET_EMIT          user base emits; the broker picks a data center
    REQUEST_ARRIVE_AT_DC   controller splits it into slices for the VM balancer
    SERVICE_COMPLETE       one slice finishes on a VM
    RESPONSE_ARRIVE_AT_UB  response is back at the originating user base

Generation stops at the scenario duration; everything already in flight
drains before :meth:`Simulation.run` returns.
"""

from __future__ import annotations

import enum
import heapq
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .broker import make_broker
from .datacenter import DataCenter
from .metrics import MetricsStore
from .seeding import stream
from .workload import Cloudlet, generate

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """Internal inconsistency; always a bug, never a recoverable condition."""


class EventKind(enum.Enum):
    CLOUDLET_EMIT = "CloudletEmit"
    REQUEST_ARRIVE_AT_DC = "RequestArriveAtDC"
    SERVICE_COMPLETE = "ServiceComplete"
    RESPONSE_ARRIVE_AT_UB = "ResponseArriveAtUB"
    MONITOR_TICK = "MonitorTick"


@dataclass(frozen=True)
class Event:
    fire_at: int
    sequence: int
    kind: EventKind
    payload: dict = field(default_factory=dict, compare=False)


class EventQueue:
    """Events ordered by ``(fire_at, sequence)``; sequence is the scheduling order."""

    def __init__(self):
        self.clock = 0
        self._heap = []
        self._sequence = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, fire_at: int, kind: EventKind, **payload) -> Event:
        if fire_at < self.clock:
            raise SimulationError(f"cannot schedule {kind.value} at {fire_at}, clock is {self.clock}")
        event = Event(fire_at, self._sequence, kind, payload)
        self._sequence += 1
        heapq.heappush(self._heap, (fire_at, event.sequence, event))
        return event

    def pop(self) -> Event:
        _, _, event = heapq.heappop(self._heap)
        self.clock = event.fire_at
        return event


class TraceRecord(NamedTuple):
    time: int
    kind: str
    cloudlet: Optional[int] = None
    dc: Optional[int] = None
    vm: Optional[int] = None
    slice: Optional[int] = None


class Simulation:
    """One independent run of a :class:`~cloudbroker.scenario.Scenario`.

    With ``trace=True`` every lifecycle step is appended to :attr:`trace`.
    Completed cloudlets stay available in :attr:`cloudlets`.
    """

    def __init__(self, scenario, trace=False):
        self.scenario = scenario
        self.queue = EventQueue()
        self.trace = [] if trace else None
        self.internet = scenario.internet
        self.user_bases = {ub.id: ub for ub in scenario.user_bases}
        self.datacenters = [
            DataCenter(
                i, region,
                vm_count=scenario.vm_count,
                vm_capacity=scenario.vm_capacity,
                lb_policy=scenario.lb_policy,
                hosts=scenario.hosts,
                processors_per_host=scenario.processors_per_host,
                request_grouping_factor=scenario.request_grouping_factor,
                log=self._dc_log(i) if trace else None,
            )
            for i, region in enumerate(scenario.dc_placement)
        ]
        self.broker = make_broker(
            scenario.broker_policy, self.datacenters, self.internet,
            rng=stream(scenario.seed, "broker"), **scenario.broker_params,
        )
        self.metrics = MetricsStore(self.user_bases, range(len(self.datacenters)))
        self.cloudlets = []
        self.requests_emitted = 0
        self.requests_completed = 0

    @property
    def clock(self):
        return self.queue.clock

    def _dc_log(self, dc_id):
        def record(kind, now, piece, vm_id):
            self.trace.append(TraceRecord(now, kind, piece.cloudlet.id, dc_id, vm_id, piece.index))
        return record

    def _note(self, kind, cloudlet=None, dc=None):
        if self.trace is not None:
            self.trace.append(TraceRecord(self.clock, kind, cloudlet, dc))

    def _schedule_starts(self, dc, starts):
        for start in starts:
            self.queue.schedule(start.finish_at, EventKind.SERVICE_COMPLETE, dc=dc.id, vm=start.vm)

    def _seed_events(self):
        s = self.scenario
        for ub in s.user_bases:
            rng = stream(s.seed, "workload", ub.id) if s.arrival_mode == "poisson" else None
            for emit_at, size in generate(ub, s.sim_start_gmt_hour, s.duration_ms, rng,
                                          s.user_grouping_factor, s.arrival_mode):
                cloudlet = Cloudlet(
                    id=len(self.cloudlets),
                    origin=ub.id,
                    origin_region=ub.region,
                    group_size=size,
                    total_instructions=size * ub.instruction_length,
                    payload_size=size * ub.request_size,
                    emitted_at=emit_at,
                )
                self.cloudlets.append(cloudlet)
                self.queue.schedule(emit_at, EventKind.CLOUDLET_EMIT, cloudlet=cloudlet)
        if self.broker.monitor_interval is not None and len(self.queue):
            self.queue.schedule(self.broker.monitor_interval, EventKind.MONITOR_TICK)

    def run(self) -> MetricsStore:
        self._seed_events()
        handlers = {
            EventKind.CLOUDLET_EMIT: self._on_emit,
            EventKind.REQUEST_ARRIVE_AT_DC: self._on_arrive,
            EventKind.SERVICE_COMPLETE: self._on_complete,
            EventKind.RESPONSE_ARRIVE_AT_UB: self._on_response,
            EventKind.MONITOR_TICK: self._on_tick,
        }
        processed = 0
        while self.queue:
            event = self.queue.pop()
            handlers[event.kind](event)
            processed += 1
        log.debug("%s: %d events, clock %d ms", self.scenario.name, processed, self.clock)
        if self.requests_completed != self.requests_emitted:
            raise SimulationError(
                f"{self.requests_emitted} requests emitted but {self.requests_completed} completed"
            )
        return self.metrics

    def _on_emit(self, event):
        cloudlet = event.payload["cloudlet"]
        self.requests_emitted += cloudlet.group_size
        self._note("emit", cloudlet.id)
        dc = self.broker.select(cloudlet.origin_region, self.clock)
        cloudlet.assigned_dc = dc.id
        delay = self.internet.transfer_delay(cloudlet.origin_region, dc.region, cloudlet.payload_size)
        self.queue.schedule(self.clock + delay, EventKind.REQUEST_ARRIVE_AT_DC,
                            cloudlet=cloudlet, dc=dc.id)

    def _on_arrive(self, event):
        cloudlet = event.payload["cloudlet"]
        dc = self.datacenters[event.payload["dc"]]
        self._note("arrive", cloudlet.id, dc.id)
        _, starts = dc.submit(cloudlet, self.clock)
        self._schedule_starts(dc, starts)

    def _on_complete(self, event):
        dc = self.datacenters[event.payload["dc"]]
        piece, starts = dc.service_complete(event.payload["vm"], self.clock)
        self._schedule_starts(dc, starts)
        cloudlet = piece.cloudlet
        if cloudlet.slices_left == 0:
            delay = self.internet.transfer_delay(dc.region, cloudlet.origin_region, cloudlet.payload_size)
            self.queue.schedule(self.clock + delay, EventKind.RESPONSE_ARRIVE_AT_UB, cloudlet=cloudlet)

    def _on_response(self, event):
        cloudlet = event.payload["cloudlet"]
        cloudlet.response_at = self.clock
        self._note("response", cloudlet.id, cloudlet.assigned_dc)
        self.metrics.record(cloudlet)
        self.requests_completed += cloudlet.group_size
        self.broker.record_response_sample(
            cloudlet.assigned_dc, cloudlet.response_time, cloudlet.processing_time
        )

    def _on_tick(self, event):
        self._note("tick")
        for dc_id, change in self.broker.tick(self.clock):
            dc = self.datacenters[dc_id]
            if change > 0:
                self._note("scale_up", dc=dc_id)
                self._schedule_starts(dc, dc.add_vm(self.clock))
            else:
                self._note("scale_down", dc=dc_id)
                dc.remove_vm()
        if len(self.queue):
            self.queue.schedule(self.clock + self.broker.monitor_interval, EventKind.MONITOR_TICK)


def run(scenario, trace=False) -> MetricsStore:
    return Simulation(scenario, trace=trace).run()
