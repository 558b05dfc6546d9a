"""Community detection in node-attributed networks.

A generative block model in which the linking propensity of a node pair
is modulated by each endpoint's attribute distance to the other's
cluster prototype, inferred with sum-product message passing and an
EM-style learner, plus closed-form detectability oracles and a synthetic
benchmark generator.
"""

__version__ = "0.1.0"

from .bp import BpConfig, BpResult, init_messages, run_bp
from .detectability import (DetectabilitySpec, fixed_point_messages,
                            ks_detectable, lambda1_closed_form,
                            lambda1_indicative, threshold_epsilon,
                            transfer_matrix)
from .graph import (AttributedGraph, DegreeStats, Partition, degree_stats,
                    from_edges, load_graph, save_graph)
from .learner import DetectionResult, LearnerConfig, detect, init_centers, solve_gamma_star
from .metrics import accuracy, avg_f1, confusion, modularity, nmi, onmi
from .model import (CrsbmParams, PopularityFunction, log_likelihood,
                    make_params, mle_nu, mle_omega, normalized_distances)
from .synth import SsbmSpec, generate_ssbm

__all__ = [
    "AttributedGraph", "BpConfig", "BpResult", "CrsbmParams", "DegreeStats",
    "DetectabilitySpec", "DetectionResult", "LearnerConfig", "Partition",
    "PopularityFunction", "SsbmSpec", "accuracy", "avg_f1", "confusion",
    "degree_stats", "detect", "fixed_point_messages", "from_edges",
    "generate_ssbm", "init_centers", "init_messages", "ks_detectable",
    "lambda1_closed_form", "lambda1_indicative", "load_graph",
    "log_likelihood", "make_params", "mle_nu", "mle_omega", "modularity",
    "nmi", "normalized_distances", "onmi", "run_bp", "save_graph",
    "solve_gamma_star", "threshold_epsilon", "transfer_matrix",
]
