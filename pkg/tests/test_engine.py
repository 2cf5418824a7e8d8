import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudbroker.engine import EventKind, EventQueue, Simulation, SimulationError, run
from cloudbroker.scenario import Scenario
from cloudbroker.topology import InternetCharacteristics
from cloudbroker.workload import UserBase

from .conftest import small_scenario


def test_zero_delay_event_is_next():
    q = EventQueue()
    e = q.schedule(q.clock, EventKind.MONITOR_TICK)
    assert q.pop() is e


def test_equal_times_pop_in_scheduling_order():
    q = EventQueue()
    events = [q.schedule(t, EventKind.MONITOR_TICK, tag=i) for i, t in enumerate([5, 3, 5])]
    expected = sorted(events, key=lambda e: (e.fire_at, e.sequence))
    assert [q.pop().payload["tag"] for _ in range(3)] == [e.payload["tag"] for e in expected]
    assert [e.payload["tag"] for e in expected] == [1, 0, 2]


def test_scheduling_in_the_past_is_a_hard_fault():
    q = EventQueue()
    q.schedule(10, EventKind.MONITOR_TICK)
    q.pop()
    with pytest.raises(SimulationError):
        q.schedule(9, EventKind.MONITOR_TICK)


@given(st.lists(st.integers(0, 50), max_size=40))
def test_queue_order_is_sort_by_time_then_sequence(times):
    q = EventQueue()
    events = [q.schedule(t, EventKind.MONITOR_TICK) for t in times]
    popped = [q.pop() for _ in times]
    assert popped == sorted(events, key=lambda e: (e.fire_at, e.sequence))
    assert all(a.fire_at <= b.fire_at for a, b in zip(popped, popped[1:]))


def test_empty_scenario_has_zero_counts():
    metrics = run(Scenario(user_bases=()))
    assert metrics.overall.count == 0
    assert metrics.overall.mean is None


def single_request_scenario(**changes):
    flat = tuple((100,) * 6 for _ in range(6))
    params = dict(
        user_bases=(UserBase("UB", 0, (0, 1), 1, 1, request_size=0, instruction_length=500),),
        duration_ms=300_000,  # 1 user x 12 req/h x 5 min = 1 request
        sim_start_gmt_hour=12.0,
        dc_placement=(0,),
        vm_count=1,
        vm_capacity=1_000,
        internet=InternetCharacteristics(flat, flat),
    )
    params.update(changes)
    return Scenario(**params)


@pytest.mark.parametrize("broker", ["round_robin", "proximity", "perf_optimized", "dynamic_config"])
@pytest.mark.parametrize("lb", ["round_robin", "throttled", "active_monitoring"])
def test_single_request_round_trip(broker, lb):
    sim = Simulation(single_request_scenario(broker_policy=broker, lb_policy=lb))
    metrics = sim.run()
    # two 100 ms legs plus 500 instruction-units at 1000 units/s
    assert metrics.overall.count == 1
    assert metrics.overall.mean == 2 * 100 + 500
    (c,) = sim.cloudlets
    assert (c.emitted_at, c.arrived_dc_at, c.service_start_at, c.service_end_at, c.response_at) == (
        0, 100, 100, 600, 700)


def test_same_seed_gives_identical_trace_and_metrics():
    scenario = small_scenario("proximity", "throttled", dc_placement=(0, 0, 2))
    a, b = Simulation(scenario, trace=True), Simulation(scenario, trace=True)
    assert a.run() == b.run()
    assert a.trace == b.trace


def test_clock_ends_at_last_event_and_drains_past_duration():
    scenario = small_scenario("round_robin", "throttled", vm_capacity=5_000)
    sim = Simulation(scenario, trace=True)
    sim.run()
    assert sim.clock == max(c.response_at for c in sim.cloudlets)
    assert sim.clock > scenario.duration_ms
    assert all(c.emitted_at < scenario.duration_ms for c in sim.cloudlets)
    times = [r.time for r in sim.trace]
    assert times == sorted(times)


def test_monitor_ticks_stop_once_work_drains():
    sim = Simulation(small_scenario("dynamic_config", "round_robin"), trace=True)
    sim.run()
    ticks = [r.time for r in sim.trace if r.kind == "tick"]
    assert ticks == list(range(60_000, 60_000 * (len(ticks) + 1), 60_000))
    assert ticks[-1] <= sim.clock < ticks[-1] + 60_000


def test_lifecycle_timestamps_are_ordered():
    for broker in ("round_robin", "perf_optimized"):
        sim = Simulation(small_scenario(broker, "active_monitoring"))
        sim.run()
        for c in sim.cloudlets:
            assert c.emitted_at <= c.arrived_dc_at <= c.service_start_at <= c.service_end_at <= c.response_at


def test_response_is_last_slice_plus_transfer():
    scenario = small_scenario("round_robin", "round_robin")
    sim = Simulation(scenario, trace=True)
    sim.run()
    finished = {}
    for rec in sim.trace:
        if rec.kind == "complete":
            finished[rec.cloudlet] = max(finished.get(rec.cloudlet, 0), rec.time)
    net = scenario.internet
    for c in sim.cloudlets:
        dc_region = scenario.dc_placement[c.assigned_dc]
        assert c.response_at == finished[c.id] + net.transfer_delay(dc_region, c.origin_region, c.payload_size)
