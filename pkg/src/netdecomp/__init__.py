"""Deterministic network decomposition in a simulated CONGEST model."""
from .graph import Graph, IdAssignment, assign_ids, gen, load_graph, parse_spec, generate, save_graph
from .sim import ModelConfig, RoundMetrics, run_protocol
from .carving import CarveParams, CarveResult, CarveTrace, carve
from .decomposition import (Decomposition, decompose, decompose_fast, decompose_fast_id_independent,
                            carve_rg_baseline, carve_id_independent_slow)
from .coloring import balanced_color_nodes, balanced_color_clusters
from .applications import mis_via_decomposition, coloring_via_decomposition
from .verify import (Bounds, CheckReport, check_balance, check_carve_trace, check_coloring,
                     check_decomposition, check_mis)

__version__ = "0.1.0"

__all__ = [
    "Graph", "IdAssignment", "assign_ids", "gen", "load_graph", "parse_spec", "generate", "save_graph",
    "ModelConfig", "RoundMetrics", "run_protocol",
    "CarveParams", "CarveResult", "CarveTrace", "carve",
    "Decomposition", "decompose", "decompose_fast", "decompose_fast_id_independent",
    "carve_rg_baseline", "carve_id_independent_slow",
    "balanced_color_nodes", "balanced_color_clusters",
    "mis_via_decomposition", "coloring_via_decomposition",
    "Bounds", "CheckReport", "check_balance", "check_carve_trace", "check_coloring", "check_decomposition",
    "check_mis",
]
