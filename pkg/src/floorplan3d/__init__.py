"""3D floorplanning for MCNC-style block netlists.

Grid placement by extremal optimisation, squeezing toward a rally point and
3D half-perimeter wire-length, with an optional distributed multi-seed runner.
"""

from .eo import EOParams, GridPlacement, GridShape, run_eo
from .hypergraph import LayoutHypergraph, from_netlist, from_nets, neighbors, stats
from .pipeline import PipelineJob, RunResult, run_pipeline
from .squeeze import GeometricPlacement, PlacedBox, RallyPoint, Squeezer, squeeze
from .wirelength import net_hpwl, total_wirelength
from .yal import parse_yal, read_yal

__version__ = "0.1.0"

__all__ = [
    "EOParams", "GridPlacement", "GridShape", "run_eo",
    "LayoutHypergraph", "from_netlist", "from_nets", "neighbors", "stats",
    "PipelineJob", "RunResult", "run_pipeline",
    "GeometricPlacement", "PlacedBox", "RallyPoint", "Squeezer", "squeeze",
    "net_hpwl", "total_wirelength",
    "parse_yal", "read_yal",
]
