"""Discrete-event simulation of service-broker (data-center selection) and
VM load-balancing policies for multi-region cloud applications."""

from .broker import (
    DynamicConfigBroker,
    PerformanceOptimizedBroker,
    ProximityBroker,
    RoundRobinBroker,
    make_broker,
    round_robin_next,
)
from .datacenter import DataCenter, split_requests
from .engine import EventKind, EventQueue, Simulation, SimulationError, run
from .experiment import SweepGrid, emit_report, render_report, run_sweep
from .metrics import Aggregate, MetricsStore
from .scenario import Scenario, ScenarioError, load_scenario
from .topology import InternetCharacteristics
from .workload import REFERENCE_USER_BASES, Cloudlet, UserBase, active_users, generate

__version__ = "0.1.0"
