"""leocp: constellation-aware control-plane toolkit.

Places ground control nodes to minimize worst-case satellite-to-
controller latency, predicts per-satellite handover schedules, and
simulates seamless vs. drain-and-rejoin controller handovers.
"""

__version__ = "0.1.0"

from .orbits import GroundStation, SatelliteElement, WalkerShell, generate_constellation
from .topology import DistanceField, TopologySnapshot, build_snapshot, shortest_distances
from .placement import PlacementProblem, PlacementSolution, cnpa
from .assignment import AssignmentParams, HandoverSchedule, predict_handovers
from .protocol import DelayProfile, HandoverRecord, Protocol, Simulation
from .scenario import ScenarioSpec, run_scenario

__all__ = [
    "AssignmentParams",
    "DelayProfile",
    "DistanceField",
    "GroundStation",
    "HandoverRecord",
    "HandoverSchedule",
    "PlacementProblem",
    "PlacementSolution",
    "Protocol",
    "SatelliteElement",
    "ScenarioSpec",
    "Simulation",
    "TopologySnapshot",
    "WalkerShell",
    "build_snapshot",
    "cnpa",
    "generate_constellation",
    "predict_handovers",
    "run_scenario",
    "shortest_distances",
]
