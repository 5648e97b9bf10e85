"""Influence maximization from observed propagation data, no diffusion
parameters required: Lorentz-model node embeddings plus distance-to-origin
seed selection, evaluated against hidden-parameter IC/WLT simulators."""

from .graph import SocialGraph, load_edge_list, neighbors
from .diffusion import (IcInstance, WltInstance, PropagationInstance,
                        sample_ic_instance, sample_wlt_instance, simulate_ic,
                        simulate_wlt, generate_instances, estimate_spread,
                        exact_spread_bruteforce)
from .lorentz import LorentzPoint, RotationSet, lorentz_inner, sq_lorentz_dist, ldo, rotate
from .embedding import EmbeddingTable, TrainConfig, train, total_loss, gradient_check
from .selection import (SelectionResult, ldo_scores, select_him_md, select_asw,
                        select_degree_topk, select_random)

__version__ = "0.1.0"

__all__ = [
    "SocialGraph", "load_edge_list", "neighbors",
    "IcInstance", "WltInstance", "PropagationInstance",
    "sample_ic_instance", "sample_wlt_instance", "simulate_ic", "simulate_wlt",
    "generate_instances", "estimate_spread", "exact_spread_bruteforce",
    "LorentzPoint", "RotationSet", "lorentz_inner", "sq_lorentz_dist", "ldo",
    "rotate",
    "EmbeddingTable", "TrainConfig", "train", "total_loss", "gradient_check",
    "SelectionResult", "ldo_scores", "select_him_md", "select_asw",
    "select_degree_topk", "select_random",
]
