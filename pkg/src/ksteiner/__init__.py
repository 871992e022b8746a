"""k-Steiner trees in normed planes.

Oriented Dirichlet cell partitions pick the candidate MST neighbours of a
steiner point, fixed-topology placement optimises its coordinates, and a
constant-time forest-fixed MST update prices each candidate tree.
"""
from ._accel import USE_NUMBA
from .mst import (PP1Table, PP2Table, SpanningTree, UpdatedTree, ViableForest, build_mst,
                  fmst_update, is_viable, preprocess_pp1, preprocess_pp2)
from .norms import (GeometryError, HexFrame, UnitBall, construct_hex_frame, nearest_in_cone,
                    norm_distance)
from .odc import Box, ODCPartition, build_odc_partition, working_box
from .oracles import (OracleConfig, OracleSizeError, brute_mst, fmst_contraction_oracle,
                      grid_steiner_oracle, nearest_in_cone_scan)
from .overlay import OODCRegion, locate, overlay_partitions
from .solver import ProblemSpec, Solution, solve
from .topology import (CostFunction, Placement, ToleranceNotReached, TopologyInstance,
                       solve_fixed_topology)

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "Box", "CostFunction", "GeometryError", "HexFrame", "ODCPartition",
    "OODCRegion", "OracleConfig", "OracleSizeError", "PP1Table", "PP2Table", "Placement",
    "ProblemSpec", "Solution", "SpanningTree", "ToleranceNotReached", "TopologyInstance",
    "UnitBall", "UpdatedTree", "ViableForest", "brute_mst", "build_mst", "build_odc_partition",
    "construct_hex_frame", "fmst_contraction_oracle", "fmst_update", "grid_steiner_oracle",
    "is_viable", "locate", "nearest_in_cone", "nearest_in_cone_scan", "norm_distance",
    "overlay_partitions", "preprocess_pp1", "preprocess_pp2", "solve", "solve_fixed_topology",
    "working_box",
]
