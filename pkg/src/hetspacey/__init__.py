"""Spacey random walks on heterogeneous graphs and skipgram node embeddings."""

from .estimator import SpaceyEmbedding
from .evaluation import (
    OneVsRestLogisticRegression,
    auc,
    classification_protocol,
    edge_features,
    js_divergence,
    link_prediction_protocol,
    lp_split,
    macro_f1,
    micro_f1,
    stationarity_trace,
)
from .graph import MetaSchema, TypedGraph, generate_synthetic, load_graph, save_graph
from .metalang import build_spacey_graph, parse_metagraph, parse_metapath
from .skipgram import TrainConfig, train
from .walks import WalkConfig, generate_corpus, simulate

__version__ = "0.1.0"

__all__ = [
    "MetaSchema",
    "OneVsRestLogisticRegression",
    "SpaceyEmbedding",
    "TrainConfig",
    "TypedGraph",
    "WalkConfig",
    "auc",
    "build_spacey_graph",
    "classification_protocol",
    "edge_features",
    "generate_corpus",
    "generate_synthetic",
    "js_divergence",
    "link_prediction_protocol",
    "load_graph",
    "lp_split",
    "macro_f1",
    "micro_f1",
    "parse_metagraph",
    "parse_metapath",
    "save_graph",
    "simulate",
    "stationarity_trace",
    "train",
]
