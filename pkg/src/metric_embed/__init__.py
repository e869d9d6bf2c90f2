"""Random-shift decompositions, probabilistic tree embeddings and l1-oblivious routing."""
from .decomp import (Clustering, approx_random_shift_decompose, blur, random_shift_decompose,
                     sample_clustering)
from .experiments import ExperimentConfig, Report, estimate_center_sum, estimate_separation, run_experiment
from .generators import generate_graph
from .graph import WeightedGraph, num_levels, parse_graph, read_graph
from .hierarchy import Hierarchy, RefinedHierarchy, ball_growth_profile, build_hierarchy, refine
from .oracles import floyd_warshall, opt_transshipment
from .paths import PathCollection, build_path_collection, decompose_root_path
from .rng import RandomStreams, ShiftVector, sample_shifts
from .routing import (RoutingOperator, apply, apply_transpose, build_routing_operator, compute_p_values,
                      verify_competitive_ratio, verify_or_rebuild)
from .sssp import SsspResult, sssp_approx, sssp_exact
from .tree import TreeEmbedding, build_tree, stretch_stats, tree_distance

__version__ = "0.1.0"
