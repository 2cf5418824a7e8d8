import pytest

from cloudbroker.scenario import Scenario
from cloudbroker.topology import InternetCharacteristics
from cloudbroker.workload import UserBase

# Distinct odd latencies so that no two routes cost the same.
ODD_LATENCY = (
    (7, 53, 131, 211, 241, 97),
    (53, 11, 89, 307, 331, 173),
    (131, 89, 13, 149, 157, 199),
    (211, 307, 149, 17, 401, 457),
    (241, 331, 157, 401, 19, 487),
    (97, 173, 199, 457, 487, 23),
)
FLAT_BANDWIDTH = tuple((1000,) * 6 for _ in range(6))


def small_scenario(broker="round_robin", lb="round_robin", **changes):
    """Five cloudlets, two data centers with two VMs each, heavy queueing."""
    bases = (
        UserBase("A", 0, (0, 1), 10_000, 10_000),  # 2 x 10,000 at 0 and 300 s
        UserBase("B", 1, (0, 1), 7_500, 7_500),    # 10,000 at 0, 5,000 at 400 s
        UserBase("C", 3, (0, 1), 1_000, 1_000),    # 2,000 at 0
    )
    params = dict(
        name="small",
        seed=7,
        duration_ms=600_000,
        sim_start_gmt_hour=12.0,
        user_bases=bases,
        dc_placement=(0, 2),
        vm_count=2,
        vm_capacity=20_000,
        internet=InternetCharacteristics(ODD_LATENCY, FLAT_BANDWIDTH),
        broker_policy=broker,
        lb_policy=lb,
        request_grouping_factor=4_000,
    )
    params.update(changes)
    return Scenario(**params)


@pytest.fixture
def small():
    return small_scenario


@pytest.fixture(scope="session")
def desk_base():
    return Scenario(name="desk").scaled_down(1000)


_acceptance_lines = []


@pytest.fixture
def criterion():
    """Record one acceptance line; returns the verdict so tests can assert on it."""

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
