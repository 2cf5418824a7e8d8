"""Service broker policies: choose the data center that serves each cloudlet."""

from __future__ import annotations

BROKER_POLICIES = ("round_robin", "proximity", "perf_optimized", "dynamic_config")


def round_robin_next(cursor: int, size: int) -> int:
    """Advance the data-center cursor one step around the circle."""
    cursor = cursor + 1
    if cursor >= size:
        cursor = 0
    return cursor


class ServiceBroker:
    """Base class. Subclasses implement :meth:`select`."""

    policy = None
    monitor_interval = None

    def __init__(self, datacenters, internet, rng=None):
        if not datacenters:
            raise ValueError("dc_placement: at least one data center is required")
        self.datacenters = list(datacenters)
        self.internet = internet
        self.rng = rng

    def select(self, origin_region, now):
        raise NotImplementedError

    def record_response_sample(self, dc_id, observed_rt, processing_time=None):
        if observed_rt < 0:
            raise ValueError("observed response time must be >= 0")

    def tick(self, now):
        return []


class RoundRobinBroker(ServiceBroker):
    """Assigns cloudlets to data centers in circular order.

    The choice depends only on how many cloudlets came before; origin,
    latency and load are ignored.
    """

    policy = "round_robin"

    def __init__(self, datacenters, internet, rng=None):
        super().__init__(datacenters, internet, rng)
        self.cursor = -1

    def select(self, origin_region, now):
        self.cursor = round_robin_next(self.cursor, len(self.datacenters))
        return self.datacenters[self.cursor]


class ProximityBroker(ServiceBroker):
    """Routes to a data center in the lowest-latency region hosting one.

    Ties between several equally close data centers are broken by a draw
    from the seeded stream (``tie_break="random"``) or by lowest id.
    """

    policy = "proximity"

    def __init__(self, datacenters, internet, rng=None, tie_break="random"):
        super().__init__(datacenters, internet, rng)
        if tie_break not in ("random", "lowest_id"):
            raise ValueError(f"broker.tie_break: must be 'random' or 'lowest_id', got {tie_break!r}")
        if tie_break == "random" and rng is None:
            raise ValueError("broker.tie_break: 'random' needs a seeded rng")
        self.tie_break = tie_break

    def closest(self, origin_region):
        hosting = {dc.region for dc in self.datacenters}
        nearest = next(r for r in self.internet.proximity_order(origin_region) if r in hosting)
        best = self.internet.latency[origin_region][nearest]
        row = self.internet.latency[origin_region]
        return [dc for dc in self.datacenters if row[dc.region] == best]

    def select(self, origin_region, now):
        candidates = self.closest(origin_region)
        if len(candidates) == 1 or self.tie_break == "lowest_id":
            return candidates[0]
        return candidates[self.rng.randrange(len(candidates))]


class PerformanceOptimizedBroker(ServiceBroker):
    """Routes to the data center with the best recently observed response time.

    Each data center keeps an exponentially smoothed response-time estimate.
    A data center without samples is scored at twice the one-way latency from
    the origin, which makes unexplored data centers look attractive.
    """

    policy = "perf_optimized"

    def __init__(self, datacenters, internet, rng=None, alpha=0.5):
        super().__init__(datacenters, internet, rng)
        if not 0 < alpha <= 1:
            raise ValueError(f"broker.alpha: must be in (0, 1], got {alpha!r}")
        self.alpha = alpha
        self.rt_estimate = {}

    def score(self, dc, origin_region):
        if dc.id in self.rt_estimate:
            return self.rt_estimate[dc.id]
        return 2 * self.internet.latency[origin_region][dc.region]

    def select(self, origin_region, now):
        return min(self.datacenters, key=lambda dc: (self.score(dc, origin_region), dc.id))

    def record_response_sample(self, dc_id, observed_rt, processing_time=None):
        super().record_response_sample(dc_id, observed_rt, processing_time)
        previous = self.rt_estimate.get(dc_id)
        if previous is None:
            self.rt_estimate[dc_id] = observed_rt
        else:
            self.rt_estimate[dc_id] = self.alpha * observed_rt + (1 - self.alpha) * previous


class DynamicConfigBroker(ProximityBroker):
    """Proximity routing plus VM scaling driven by processing times.

    Every ``monitor_interval`` ms the mean processing time observed per data
    center since the last tick is compared with the best processing time
    that data center ever achieved: above ``k_up`` times the best adds a VM,
    below ``k_down`` times the best removes one.
    """

    policy = "dynamic_config"

    def __init__(self, datacenters, internet, rng=None, tie_break="random",
                 k_up=1.5, k_down=1.1, monitor_interval_ms=60_000,
                 min_vms=1, max_vms=None):
        super().__init__(datacenters, internet, rng, tie_break)
        if monitor_interval_ms <= 0:
            raise ValueError("broker.monitor_interval_ms: must be > 0")
        if k_down > k_up:
            raise ValueError("broker.k_down: must not exceed k_up")
        self.k_up = k_up
        self.k_down = k_down
        self.monitor_interval = monitor_interval_ms
        self.best_proc_time = {}
        self.recent = {}
        self.bounds = {}
        for dc in self.datacenters:
            upper = max_vms if max_vms is not None else 2 * dc.vm_count
            upper = min(upper, dc.max_vms)
            if not 1 <= min_vms <= dc.vm_count <= upper:
                raise ValueError(
                    f"broker.min_vms/max_vms: need 1 <= min_vms <= vm_count <= max_vms for DC {dc.id}"
                )
            self.bounds[dc.id] = (min_vms, upper)

    def record_response_sample(self, dc_id, observed_rt, processing_time=None):
        super().record_response_sample(dc_id, observed_rt, processing_time)
        if processing_time is None:
            return
        best = self.best_proc_time.get(dc_id)
        if best is None or processing_time < best:
            self.best_proc_time[dc_id] = processing_time
        self.recent.setdefault(dc_id, []).append(processing_time)

    def tick(self, now):
        """Return scaling actions as ``(dc_id, +1 | -1)`` pairs."""
        actions = []
        for dc in self.datacenters:
            samples = self.recent.get(dc.id)
            if not samples:
                continue
            best = self.best_proc_time[dc.id]
            mean = sum(samples) / len(samples)
            low, high = self.bounds[dc.id]
            if mean > self.k_up * best and dc.vm_count < high:
                actions.append((dc.id, +1))
            elif mean < self.k_down * best and dc.vm_count > low:
                actions.append((dc.id, -1))
        self.recent.clear()
        return actions


BROKERS = {
    cls.policy: cls
    for cls in (RoundRobinBroker, ProximityBroker, PerformanceOptimizedBroker, DynamicConfigBroker)
}


def make_broker(policy, datacenters, internet, rng=None, **params):
    try:
        cls = BROKERS[policy]
    except KeyError:
        raise ValueError(f"broker.policy: must be one of {BROKER_POLICIES}, got {policy!r}") from None
    try:
        return cls(datacenters, internet, rng, **params)
    except TypeError as exc:
        raise ValueError(f"broker: bad parameters for {policy!r}: {exc}") from None
