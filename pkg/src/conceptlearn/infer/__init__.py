from .priors import init_prior, log_prior_density, sample_candidates
from .graphs import FactStore, InferenceTask, build_task
from .gnn import init_gnn, gnn_refine, np_gnn_refine, np_score_candidates
from .models import GraphInference, SequentialInference, PrototypeBaseline, make_inference

__all__ = [
    "init_prior", "log_prior_density", "sample_candidates",
    "FactStore", "InferenceTask", "build_task",
    "init_gnn", "gnn_refine", "np_gnn_refine", "np_score_candidates",
    "GraphInference", "SequentialInference", "PrototypeBaseline", "make_inference",
]
