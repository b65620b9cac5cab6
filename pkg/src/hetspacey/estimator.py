"""Walk-then-train node embedding as a scikit-learn transformer."""

from __future__ import annotations

import logging
import time

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .graph import GraphError, TypedGraph, derive_schema
from .metalang import parse_metagraph, parse_metapath
from .skipgram import TrainConfig, train
from .walks import WalkConfig, generate_corpus

logger = logging.getLogger(__name__)

GUIDANCE_MODES = ("markovian", "metapath", "metagraph", "metaschema")


def resolve_guidance(g: TypedGraph, mode: str, metapath=None, metagraph=None):
    """Guidance object and walker mode for a pipeline ``mode``."""
    if mode not in GUIDANCE_MODES:
        raise GraphError(f"unknown mode {mode!r}; expected one of {', '.join(GUIDANCE_MODES)}")
    schema = derive_schema(g)
    if mode in ("markovian", "metapath"):
        if not metapath:
            raise GraphError(f"mode {mode!r} needs a meta-path")
        return parse_metapath(metapath, schema), "markovian" if mode == "markovian" else "spacey"
    if mode == "metagraph":
        if not metagraph:
            raise GraphError("mode 'metagraph' needs member meta-paths")
        specs = [metagraph] if isinstance(metagraph, str) else list(metagraph)
        return parse_metagraph(specs, schema), "spacey"
    return schema, "spacey"


class SpaceyEmbedding(TransformerMixin, BaseEstimator):
    """Node embeddings from guided random walks and a heterogeneous skipgram.

    ``fit`` takes a :class:`TypedGraph`; ``transform`` maps node ids to rows of
    the learned center vectors. Nodes never visited keep their random
    initialization.

    Parameters
    ----------
    mode : {"markovian", "metapath", "metagraph", "metaschema"}
        Walk guidance. ``markovian`` follows ``metapath`` strictly; the
        others are spacey walks guided by a meta-path, a meta-graph (list of
        meta-paths) or the whole schema.
    """

    def __init__(self, mode="metaschema", metapath=None, metagraph=None, alpha=0.8, walk_times=20,
                 walk_length=320, dimension=128, window=10, negatives=5, learning_rate=0.025, epochs=1,
                 negative_scope="type", seed=0, n_jobs=1):
        self.mode = mode
        self.metapath = metapath
        self.metagraph = metagraph
        self.alpha = alpha
        self.walk_times = walk_times
        self.walk_length = walk_length
        self.dimension = dimension
        self.window = window
        self.negatives = negatives
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.negative_scope = negative_scope
        self.seed = seed
        self.n_jobs = n_jobs

    def walk_config(self) -> WalkConfig:
        return WalkConfig(walk_times=self.walk_times, walk_length=self.walk_length, alpha=self.alpha,
                          seed=self.seed, n_jobs=self.n_jobs, min_walk_nodes=self.window + 1)

    def train_config(self) -> TrainConfig:
        return TrainConfig(dimension=self.dimension, window=self.window, negatives=self.negatives,
                           learning_rate=self.learning_rate, epochs=self.epochs, seed=self.seed,
                           negative_scope=self.negative_scope)

    def fit(self, X, y=None):
        if not isinstance(X, TypedGraph):
            raise TypeError(f"fit expects a TypedGraph, got {type(X).__name__}")
        guidance, walk_mode = resolve_guidance(X, self.mode, self.metapath, self.metagraph)
        wcfg = self.walk_config()
        wcfg.mode = walk_mode
        t0 = time.perf_counter()
        corpus = generate_corpus(X, guidance, wcfg)
        t1 = time.perf_counter()
        if len(corpus) == 0:
            raise GraphError("walk corpus is empty; no eligible start node produced a walk")
        emb = train(corpus, X, self.train_config())
        t2 = time.perf_counter()
        self.embedding_ = emb.center
        self.context_ = emb.context
        self.vocabulary_ = emb.nodes
        self.corpus_stats_ = dict(corpus.stats, walk_secs=t1 - t0, train_secs=t2 - t1)
        self.n_nodes_ = X.node_count
        logger.info("phase=walk secs=%.3f nodes=%d", t1 - t0, X.node_count)
        logger.info("phase=train secs=%.3f nodes=%d", t2 - t1, X.node_count)
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        ids = check_array(np.asarray(X).reshape(-1, 1), dtype=np.int64).ravel()
        if ids.size and (ids.min() < 0 or ids.max() >= self.n_nodes_):
            raise ValueError(f"node ids must lie in [0, {self.n_nodes_})")
        return self.embedding_[ids]

    def fit_transform(self, X, y=None, **fit_params):
        self.fit(X, y)
        return self.embedding_.copy()
