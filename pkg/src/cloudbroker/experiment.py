"""Parameter sweeps over data-center placement, broker policy and VM balancer."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .broker import BROKER_POLICIES
from .datacenter import LB_POLICIES
from .engine import Simulation
from .scenario import Scenario, ScenarioError
from .seeding import derive_seed
from .topology import check_region

PARALLEL_ENV = "CLOUDBROKER_PARALLEL"

REFERENCE_DISTRIBUTIONS = ((0, 2), (1, 2), (1, 3), (0, 1, 2), (0, 2, 4), (1, 3, 5))

REPORT_HEADER = (
    "scenario", "dc_distribution", "broker_policy", "lb_policy",
    "overall_avg_rt_ms", "overall_min_rt_ms", "overall_max_rt_ms",
    "requests", "ub_id", "ub_avg_rt_ms",
)


class CellError(RuntimeError):
    def __init__(self, cell, cause):
        super().__init__(f"cell {cell.label}: {cause!r}")
        self.cell = cell
        self.cause = cause


@dataclass(frozen=True)
class Cell:
    distribution: tuple
    broker_policy: str
    lb_policy: str

    @property
    def label(self):
        return f"{distribution_label(self.distribution)}/{self.broker_policy}/{self.lb_policy}"


@dataclass(frozen=True)
class CellResult:
    cell: Cell
    scenario: Scenario
    metrics: object
    requests_emitted: int
    requests_completed: int


def distribution_label(regions):
    return "+".join(f"R{r}" for r in regions)


@dataclass(frozen=True)
class SweepGrid:
    base: Scenario
    dc_distributions: tuple = REFERENCE_DISTRIBUTIONS
    broker_policies: tuple = BROKER_POLICIES
    lb_policies: tuple = LB_POLICIES
    broker_params: dict = None

    def __post_init__(self):
        params = dict(self.broker_params or {})
        for policy, values in params.items():
            if policy not in BROKER_POLICIES or not isinstance(values, dict):
                raise ScenarioError(f"sweep.broker_params: expected policy -> object, got {policy!r}")
        object.__setattr__(self, "broker_params", params)
        for name in ("dc_distributions", "broker_policies", "lb_policies"):
            values = tuple(getattr(self, name))
            if not values:
                raise ScenarioError(f"sweep.{name}: must not be empty")
            object.__setattr__(self, name, values)
        object.__setattr__(self, "dc_distributions", tuple(tuple(d) for d in self.dc_distributions))
        for i, dist in enumerate(self.dc_distributions):
            if not dist:
                raise ScenarioError(f"sweep.dc_distributions[{i}]: must not be empty")
            for region in dist:
                try:
                    check_region(region, f"sweep.dc_distributions[{i}]")
                except ValueError as exc:
                    raise ScenarioError(str(exc)) from None
        for policy in self.broker_policies:
            if policy not in BROKER_POLICIES:
                raise ScenarioError(f"sweep.broker_policies: unknown policy {policy!r}")
        for policy in self.lb_policies:
            if policy not in LB_POLICIES:
                raise ScenarioError(f"sweep.lb_policies: unknown policy {policy!r}")

    def cells(self):
        """Cells in canonical order: distribution, then broker, then balancer."""
        return [
            Cell(dist, broker, lb)
            for dist in self.dc_distributions
            for broker in self.broker_policies
            for lb in self.lb_policies
        ]

    def scenario_for(self, cell: Cell) -> Scenario:
        seed = derive_seed(self.base.seed, list(cell.distribution), cell.broker_policy, cell.lb_policy)
        if cell.broker_policy in self.broker_params:
            params = self.broker_params[cell.broker_policy]
        elif cell.broker_policy == self.base.broker_policy:
            params = self.base.broker_params
        else:
            params = {}
        return self.base.replace(
            seed=seed,
            dc_placement=cell.distribution,
            broker_policy=cell.broker_policy,
            broker_params=params,
            lb_policy=cell.lb_policy,
        )

    def __len__(self):
        return len(self.dc_distributions) * len(self.broker_policies) * len(self.lb_policies)


def grid_from_document(base: Scenario, document) -> SweepGrid:
    sweep = (document or {}).get("sweep", {})
    if not isinstance(sweep, dict):
        raise ScenarioError("sweep: must be an object")
    unknown = set(sweep) - {"dc_distributions", "broker_policies", "lb_policies", "broker_params"}
    if unknown:
        raise ScenarioError(f"sweep.{sorted(unknown)[0]}: unknown field")
    return SweepGrid(base, **sweep)


def run_cell(grid: SweepGrid, cell: Cell) -> CellResult:
    scenario = grid.scenario_for(cell)
    try:
        sim = Simulation(scenario)
        metrics = sim.run()
    except Exception as exc:
        raise CellError(cell, exc) from exc
    return CellResult(cell, scenario, metrics, sim.requests_emitted, sim.requests_completed)


def _run_packed(args):
    return run_cell(*args)


def default_parallelism():
    value = os.environ.get(PARALLEL_ENV)
    return int(value) if value else 1


def run_sweep(grid: SweepGrid, parallelism=None):
    """Run every cell of ``grid``; results come back in canonical grid order.

    Each cell is seeded from the base seed and its own descriptor, so the
    output does not depend on ``parallelism`` or on which other cells exist.
    """
    if parallelism is None:
        parallelism = default_parallelism()
    jobs = [(grid, cell) for cell in grid.cells()]
    if parallelism <= 1 or len(jobs) <= 1:
        return [_run_packed(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_packed, jobs))


def _fmt(value):
    return "" if value is None else str(value)


def report_rows(results):
    for result in results:
        overall = result.metrics.overall
        head = [
            result.scenario.name,
            distribution_label(result.cell.distribution),
            result.cell.broker_policy,
            result.cell.lb_policy,
            _fmt(overall.mean_ms),
            _fmt(overall.min),
            _fmt(overall.max),
        ]
        for ub_id, agg in result.metrics.per_ub.items():
            yield head + [str(agg.count), ub_id, _fmt(agg.mean_ms)]
        yield head + [str(overall.count), "ALL", _fmt(overall.mean_ms)]


def render_report(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    writer.writerows(report_rows(results))
    return buf.getvalue()


def emit_report(results, destination):
    """Write the CSV report to a path or an open text stream."""
    results = list(results)
    if not results:
        raise ValueError("emit_report: no results to write")
    text = render_report(results)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
