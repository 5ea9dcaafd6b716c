"""Joint vector embeddings for whole graphs and the nodes inside them."""

__version__ = "0.1.0"

from .errors import DeadEndError, NetVectorError, ParseError, ValidationError
from .graph import (EgoNetwork, Graph, StructuralFeatures, ego_network, load_edge_list,
                    load_karate, load_labels, parse_edge_list, structural_features,
                    write_edge_list)
from .model import (EmbeddingModel, WindowSample, dm_score, init, inverse_scores,
                    predicted_representation, read_embeddings, write_embeddings)
from .sampler import (AliasTable, WalkConfig, WalkCorpus, WalkEngine, build_alias,
                      generate_corpus, read_corpus, transition_distribution, write_corpus)
from .trainer import (NoiseDistribution, TrainConfig, TrainResult, build_noise, dm_step,
                      inverse_step, ns_objective, train)

__all__ = [
    "AliasTable", "DeadEndError", "EgoNetwork", "EmbeddingModel", "Graph", "NetVectorError",
    "NoiseDistribution", "ParseError", "StructuralFeatures", "TrainConfig", "TrainResult",
    "ValidationError", "WalkConfig", "WalkCorpus", "WalkEngine", "WindowSample",
    "build_alias", "build_noise", "dm_score", "dm_step", "ego_network", "generate_corpus",
    "init", "inverse_scores", "inverse_step", "load_edge_list", "load_karate", "load_labels",
    "ns_objective", "parse_edge_list", "predicted_representation", "read_corpus",
    "read_embeddings", "structural_features", "train", "transition_distribution",
    "write_corpus", "write_edge_list", "write_embeddings",
]
