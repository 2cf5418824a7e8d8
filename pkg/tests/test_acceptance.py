"""Exit criteria for the build, one test per criterion."""

import time
from collections import Counter, defaultdict
from fractions import Fraction

import pytest

from cloudbroker.broker import RoundRobinBroker
from cloudbroker.datacenter import DataCenter
from cloudbroker.engine import Simulation
from cloudbroker.experiment import REFERENCE_DISTRIBUTIONS, SweepGrid, render_report, run_sweep
from cloudbroker.topology import InternetCharacteristics
from cloudbroker.workload import Cloudlet

from .conftest import small_scenario
from .replay import Replay

BROKERS = ("round_robin", "proximity", "perf_optimized", "dynamic_config")
LBS = ("round_robin", "throttled", "active_monitoring")


class _Dc:
    def __init__(self, name):
        self.name = name
        self.region = 0


@pytest.fixture(scope="module")
def desk_sweep(desk_base):
    grid = SweepGrid(desk_base)
    started = time.perf_counter()
    results = run_sweep(grid, parallelism=1)
    return grid, results, time.perf_counter() - started


@pytest.fixture(scope="module")
def desk_sims(desk_base):
    grid = SweepGrid(desk_base)
    sims = {}
    for cell in grid.cells():
        sim = Simulation(grid.scenario_for(cell), trace=True)
        sim.run()
        sims[cell] = sim
    return sims


def test_c1_round_robin_broker_walkthrough(criterion):
    expected = {
        1: ["DC1"] * 6,
        2: ["DC1", "DC2", "DC1", "DC2", "DC1", "DC2"],
        3: ["DC1", "DC2", "DC3", "DC1", "DC2", "DC3"],
    }
    started = time.perf_counter()
    got = {}
    for n in (1, 2, 3):
        broker = RoundRobinBroker([_Dc(f"DC{i + 1}") for i in range(n)], InternetCharacteristics())
        got[n] = [broker.select(origin, now=0).name for origin in (0, 5, 3, 1, 2, 4)]
    elapsed = time.perf_counter() - started
    ok = got == expected and elapsed < 1.0
    assert criterion(1, ok, f"selection sequences {got} in {elapsed:.4f}s")


def test_c2_grid_cardinality(desk_sweep, criterion):
    grid, results, elapsed = desk_sweep
    cells = [r.cell for r in results]
    combos = {(c.distribution, c.broker_policy, c.lb_policy) for c in cells}
    expected = {(d, b, lb) for d in REFERENCE_DISTRIBUTIONS for b in BROKERS for lb in LBS}
    ok = len(results) == 72 and combos == expected and elapsed < 120
    assert criterion(2, ok, f"{len(results)} cells, {len(combos)} distinct, desk grid in {elapsed:.2f}s")


def test_c3_round_robin_beats_proximity_where_peak_is_local(desk_sweep, desk_base, criterion):
    _, results, _ = desk_sweep
    start = desk_base.sim_start_gmt_hour
    assert start == 13.0
    peak_regions = {
        ub.region for ub in desk_base.user_bases if ub.peak_window[0] <= start < ub.peak_window[1]
    }
    assert peak_regions == {0}
    by_cell = {(r.cell.distribution, r.cell.broker_policy, r.cell.lb_policy): r.metrics.overall
               for r in results}
    checked, failures = [], []
    for dist in REFERENCE_DISTRIBUTIONS:
        if not peak_regions & set(dist):
            continue
        for lb in LBS:
            rr = by_cell[(dist, "round_robin", lb)].mean
            prox = by_cell[(dist, "proximity", lb)].mean
            checked.append((dist, lb))
            if not rr < prox:
                failures.append((dist, lb, float(rr), float(prox)))
    ok = not failures and ((0, 2), "round_robin") in checked and len(checked) == 9
    assert criterion(3, ok, f"{len(checked)} (distribution, lb) pairs checked, violations: {failures}")


def test_c4_throttled_never_runs_two_slices_on_a_vm(desk_sims, criterion):
    violations = 0
    runs = 0
    for cell, sim in desk_sims.items():
        if cell.lb_policy != "throttled":
            continue
        runs += 1
        load = defaultdict(int)
        for rec in sim.trace:
            if rec.kind == "assign":
                load[rec.dc, rec.vm] += 1
                violations += load[rec.dc, rec.vm] > 1
            elif rec.kind == "complete":
                load[rec.dc, rec.vm] -= 1
    ok = violations == 0 and runs == 24
    assert criterion(4, ok, f"{violations} violations across {runs} throttled runs")


def test_c5_conservation_and_trace_average(desk_sims, criterion):
    bad = []
    for cell, sim in desk_sims.items():
        emitted = sum(c.group_size for c in sim.cloudlets)
        completed = sum(c.group_size for c in sim.cloudlets if c.response_at is not None)
        num = sum((c.response_at - c.emitted_at) * c.group_size for c in sim.cloudlets)
        overall = sim.metrics.overall
        if not (emitted == completed == sim.requests_emitted == sim.requests_completed
                == overall.count and overall.total == num
                and overall.mean == Fraction(num, emitted)):
            bad.append(cell.label)
    ok = not bad and len(desk_sims) == 72
    assert criterion(5, ok, f"{len(desk_sims)} cells conserved, mismatches: {bad}")


def test_c6_determinism_across_reruns_and_parallelism(desk_base, desk_sweep, criterion):
    grid, results, _ = desk_sweep
    serial = render_report(results)
    again = render_report(run_sweep(grid, parallelism=1))
    parallel = render_report(run_sweep(grid, parallelism=8))
    one_cell = SweepGrid(desk_base, dc_distributions=[(0, 2)], broker_policies=["proximity"],
                         lb_policies=["throttled"])
    block = render_report(run_sweep(one_cell, parallelism=1)).splitlines()[1:]
    in_full = [line for line in serial.splitlines() if ",R0+R2,proximity,throttled," in line]
    ok = serial == again == parallel and block == in_full and len(block) == 7
    assert criterion(6, ok, f"serial/rerun/parallel-8 reports identical={serial == again == parallel}, "
                            f"isolated cell block identical={block == in_full}")


def test_c7_replay_oracle_on_small_instances(criterion):
    mismatched = []
    cloudlets = set()
    for broker in BROKERS:
        for lb in LBS:
            scenario = small_scenario(broker, lb)
            sim = Simulation(scenario)
            metrics = sim.run()
            oracle = Replay(scenario).run()
            cloudlets.add(len(sim.cloudlets))
            engine_ts = {
                c.id: (c.emitted_at, c.arrived_dc_at, c.service_start_at, c.service_end_at,
                       c.response_at, c.assigned_dc)
                for c in sim.cloudlets
            }
            by_ub = {ub: agg.mean for ub, agg in metrics.per_ub.items()}
            if (engine_ts != oracle.timestamps() or metrics.overall.mean != oracle.average()
                    or by_ub != oracle.average_by_ub()):
                mismatched.append(f"{broker}/{lb}")
    ok = not mismatched and cloudlets == {5}
    assert criterion(7, ok, f"12 policy combinations, cloudlets per run {sorted(cloudlets)}, "
                            f"mismatches: {mismatched}")


def test_c8_load_balancer_fairness(desk_base, criterion):
    n, k = 5, 7
    dc = DataCenter(0, 0, vm_count=n, vm_capacity=1_000_000, lb_policy="round_robin",
                    request_grouping_factor=1)
    assigned = Counter()
    for cid in range(k):
        placements, _ = dc.submit(Cloudlet(cid, "UB", 0, n, n * 500, n * 100, 0), now=0)
        assigned.update(vm for _, vm in placements)
    rr_ok = assigned == Counter({vm: k for vm in range(n)})

    checks = violations = 0
    for dist in REFERENCE_DISTRIBUTIONS:
        scenario = desk_base.replace(dc_placement=dist, broker_policy="round_robin",
                                     lb_policy="active_monitoring")
        sim = Simulation(scenario)
        for center in sim.datacenters:
            original = center.lb.allocate

            def watched(vm_ids, center=center, original=original):
                nonlocal checks, violations
                loads = {v: center.vms[v].outstanding for v in vm_ids}
                chosen = original(vm_ids)
                checks += 1
                violations += loads[chosen] != min(loads.values())
                return chosen

            center.lb.allocate = watched
        sim.run()
    ok = rr_ok and violations == 0 and checks > 0
    assert criterion(8, ok, f"RR {n} VMs x {k} rounds -> {dict(assigned)}; "
                            f"AM argmin held at {checks - violations}/{checks} allocations")
