"""Data centers, their VM pools, and the VM load-balancing policies.

Every VM serves one service slice at a time. Under round-robin and active
monitoring a VM keeps its own FIFO of assigned slices; under throttling a VM
never holds more than one slice and excess work waits in the data center's
pending queue until a VM is released.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .topology import check_region

LB_POLICIES = ("round_robin", "throttled", "active_monitoring")


@dataclass(eq=False)
class ServiceSlice:
    cloudlet: object
    index: int
    size: int
    instructions: int
    vm: Optional[int] = None
    started_at: Optional[int] = None
    finished_at: Optional[int] = None


@dataclass(eq=False)
class Vm:
    id: int
    host: int
    capacity: int
    queue: deque = field(default_factory=deque)
    current: Optional[ServiceSlice] = None
    outstanding: int = 0
    retired: bool = False

    @property
    def idle(self) -> bool:
        return self.outstanding == 0

    def service_time(self, instructions: int) -> int:
        """Milliseconds to execute ``instructions`` (capacity is per second), rounded up."""
        return -(-instructions * 1000 // self.capacity)


class RoundRobinBalancer:
    """Hands out VMs in circular order, ignoring their current load."""

    name = "round_robin"

    def __init__(self):
        self.cursor = -1

    def register(self, vm_id):
        pass

    def unregister(self, vm_id):
        pass

    def allocate(self, vm_ids):
        self.cursor = (self.cursor + 1) % len(vm_ids)
        return vm_ids[self.cursor]

    def release(self, vm_id):
        pass


class ThrottledBalancer:
    """Index table of VM availability; one job per VM, ``None`` when all are busy."""

    name = "throttled"

    def __init__(self):
        self.available = {}

    def register(self, vm_id):
        self.available[vm_id] = True

    def unregister(self, vm_id):
        del self.available[vm_id]

    def allocate(self, vm_ids):
        for vm_id in vm_ids:
            if self.available[vm_id]:
                self.available[vm_id] = False
                return vm_id
        return None

    def release(self, vm_id):
        self.available[vm_id] = True


class ActiveMonitoringBalancer:
    """Index table of outstanding allocations; picks the least loaded VM."""

    name = "active_monitoring"

    def __init__(self):
        self.allocations = {}

    def register(self, vm_id):
        self.allocations[vm_id] = 0

    def unregister(self, vm_id):
        del self.allocations[vm_id]

    def allocate(self, vm_ids):
        chosen = min(vm_ids, key=lambda v: (self.allocations[v], v))
        self.allocations[chosen] += 1
        return chosen

    def release(self, vm_id):
        self.allocations[vm_id] -= 1


BALANCERS = {
    cls.name: cls for cls in (RoundRobinBalancer, ThrottledBalancer, ActiveMonitoringBalancer)
}


def make_balancer(policy):
    try:
        return BALANCERS[policy]()
    except KeyError:
        raise ValueError(f"lb_policy: must be one of {LB_POLICIES}, got {policy!r}") from None


def split_requests(group_size, factor):
    """Sizes of the service slices a request group is cut into."""
    full, rest = divmod(group_size, factor)
    return [factor] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class Start:
    """A slice entering service; the engine schedules its completion."""

    vm: int
    slice: ServiceSlice
    finish_at: int


class DataCenter:
    """A data center together with its controller.

    ``log`` is an optional ``callable(kind, now, slice, vm_id)`` receiving
    ``"assign"``, ``"queue"``, ``"start"`` and ``"complete"`` notifications.
    """

    def __init__(self, id, region, vm_count=25, vm_capacity=500_000,
                 lb_policy="round_robin", hosts=40, processors_per_host=4,
                 request_grouping_factor=1_000, log: Optional[Callable] = None):
        check_region(region, f"data_centers[{id}].region")
        if vm_count < 1:
            raise ValueError("vm_count: a data center needs at least one VM")
        if vm_count > hosts * processors_per_host:
            raise ValueError(
                f"vm_count: {vm_count} VMs exceed {hosts} hosts x {processors_per_host} processors"
            )
        if vm_capacity <= 0:
            raise ValueError("vm_capacity: must be > 0")
        self.id = id
        self.region = region
        self.hosts = hosts
        self.processors_per_host = processors_per_host
        self.vm_capacity = vm_capacity
        self.request_grouping_factor = request_grouping_factor
        self.lb = make_balancer(lb_policy)
        self.throttled = isinstance(self.lb, ThrottledBalancer)
        self.pending = deque()
        self.pending_removals = 0
        self.vms = []
        self._log = log
        for _ in range(vm_count):
            self._new_vm()

    def __repr__(self):
        return f"DataCenter(id={self.id}, region={self.region}, vms={len(self.active_vm_ids())})"

    @property
    def max_vms(self):
        return self.hosts * self.processors_per_host

    @property
    def vm_count(self):
        """VM count once deferred removals have taken effect."""
        return len(self.active_vm_ids()) - self.pending_removals

    def active_vm_ids(self):
        return [vm.id for vm in self.vms if not vm.retired]

    def _new_vm(self):
        vm = Vm(len(self.vms), len(self.vms) // self.processors_per_host, self.vm_capacity)
        self.vms.append(vm)
        self.lb.register(vm.id)
        return vm

    def _emit(self, kind, now, piece, vm_id):
        if self._log is not None:
            self._log(kind, now, piece, vm_id)

    def _begin(self, vm, piece, now):
        vm.current = piece
        piece.started_at = now
        cloudlet = piece.cloudlet
        if cloudlet.service_start_at is None:
            cloudlet.service_start_at = now
        self._emit("start", now, piece, vm.id)
        return Start(vm.id, piece, now + vm.service_time(piece.instructions))

    def _assign(self, vm, piece, now):
        piece.vm = vm.id
        vm.outstanding += 1
        if vm.id not in piece.cloudlet.assigned_vms:
            piece.cloudlet.assigned_vms.append(vm.id)
        self._emit("assign", now, piece, vm.id)
        if vm.current is None:
            return self._begin(vm, piece, now)
        vm.queue.append(piece)
        return None

    def submit(self, cloudlet, now):
        """Split an arriving cloudlet into slices and dispatch them.

        Returns ``(placements, starts)``: one ``(slice, vm_id or None)`` per
        slice, ``None`` meaning it waits in the pending queue, and the slices
        that entered service immediately.
        """
        cloudlet.arrived_dc_at = now
        cloudlet.assigned_dc = self.id
        sizes = split_requests(cloudlet.group_size, self.request_grouping_factor)
        cloudlet.slices_left = len(sizes)
        per_request = cloudlet.total_instructions // cloudlet.group_size
        placements, starts = [], []
        for index, size in enumerate(sizes):
            piece = ServiceSlice(cloudlet, index, size, size * per_request)
            vm_id = self.lb.allocate(self.active_vm_ids())
            if vm_id is None:
                self.pending.append(piece)
                self._emit("queue", now, piece, None)
            else:
                start = self._assign(self.vms[vm_id], piece, now)
                if start is not None:
                    starts.append(start)
            placements.append((piece, vm_id))
        return placements, starts

    def service_complete(self, vm_id, now):
        """Finish the slice running on ``vm_id`` and start whatever comes next.

        Returns ``(finished_slice, starts)``. When the finished slice was the
        last of its cloudlet, the cloudlet's ``service_end_at`` is set.
        """
        vm = self.vms[vm_id]
        piece = vm.current
        vm.current = None
        vm.outstanding -= 1
        piece.finished_at = now
        self.lb.release(vm_id)
        self._emit("complete", now, piece, vm_id)
        cloudlet = piece.cloudlet
        cloudlet.slices_left -= 1
        if cloudlet.slices_left == 0:
            cloudlet.service_end_at = now

        starts = []
        if vm.queue:
            starts.append(self._begin(vm, vm.queue.popleft(), now))
        elif self.throttled and self.pending:
            self.lb.allocate([vm_id])
            starts.append(self._assign(vm, self.pending.popleft(), now))
        if vm.idle and self.pending_removals:
            self._retire(vm)
            self.pending_removals -= 1
        return piece, starts

    def _retire(self, vm):
        vm.retired = True
        self.lb.unregister(vm.id)

    def add_vm(self, now):
        """Grow the pool by one VM; returns any pending work it picks up."""
        if self.pending_removals:
            self.pending_removals -= 1
            return []
        retired = [vm for vm in self.vms if vm.retired]
        if retired:
            vm = retired[0]
            vm.retired = False
            self.lb.register(vm.id)
        else:
            vm = self._new_vm()
        starts = []
        if self.throttled and self.pending:
            self.lb.allocate([vm.id])
            starts.append(self._assign(vm, self.pending.popleft(), now))
        return starts

    def remove_vm(self):
        """Shrink the pool by one VM, deferred until some VM is idle."""
        idle = [vm for vm in self.vms if not vm.retired and vm.idle]
        if idle:
            self._retire(idle[-1])
        else:
            self.pending_removals += 1
