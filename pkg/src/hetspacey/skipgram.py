"""Heterogeneous skipgram with negative sampling.

Negatives for a (center, context) pair are drawn from the unigram^0.75 table
of the context node's type (``negative_scope="type"``) or from one global
table (``"global"``). The single-pair update is one numba function shared by
:func:`sgd_step` and the training kernels.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import GraphError, TypedGraph

logger = logging.getLogger(__name__)


class TrainingError(GraphError):
    pass


@dataclass
class Vocabulary:
    counts: np.ndarray
    node_types: np.ndarray
    scope: str
    power: float
    table_nodes: np.ndarray
    table_cdf: np.ndarray
    table_ptr: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return np.flatnonzero(self.counts)

    def segment(self, t: int) -> int:
        return 0 if self.scope == "global" else int(t)

    def table(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and sampling probabilities of the table used for context type ``t``."""
        s = self.segment(t)
        lo, hi = self.table_ptr[s], self.table_ptr[s + 1]
        cdf = self.table_cdf[lo:hi]
        return self.table_nodes[lo:hi], np.diff(np.concatenate([[0.0], cdf]))


def build_vocab(corpus, g: TypedGraph, power: float = 0.75, scope: str = "type") -> Vocabulary:
    if scope not in ("type", "global"):
        raise TrainingError(f"negative scope must be 'type' or 'global', got {scope!r}")
    tokens, _ = corpus.flat() if hasattr(corpus, "flat") else _flatten(corpus)
    if tokens.size == 0:
        raise TrainingError("empty corpus")
    if tokens.min() < 0 or tokens.max() >= g.node_count:
        bad = tokens[(tokens < 0) | (tokens >= g.node_count)][0]
        raise TrainingError(f"corpus token {bad} is not a node of the graph")
    counts = np.bincount(tokens, minlength=g.node_count).astype(np.int64)
    groups = [np.flatnonzero(counts)] if scope == "global" else [
        np.flatnonzero((counts > 0) & (g.node_types == t)) for t in range(g.type_count)
    ]
    nodes, cdfs, ptr = [], [], [0]
    for members in groups:
        if members.size:
            w = counts[members].astype(float) ** power
            cdf = np.cumsum(w / w.sum())
            cdf[-1] = 1.0
        else:
            cdf = np.empty(0)
        nodes.append(members.astype(np.int32))
        cdfs.append(cdf)
        ptr.append(ptr[-1] + members.size)
    return Vocabulary(counts, g.node_types, scope, power, np.concatenate(nodes),
                      np.concatenate(cdfs), np.asarray(ptr, dtype=np.int64))


def _flatten(walks):
    arrs = [np.asarray(w, dtype=np.int32) for w in walks]
    offsets = np.zeros(len(arrs) + 1, dtype=np.int64)
    np.cumsum([a.size for a in arrs], out=offsets[1:])
    tokens = np.concatenate(arrs) if arrs else np.empty(0, dtype=np.int32)
    return tokens, offsets


def window_pairs(seq, win: int, node_types=None):
    """Yield ``(center, context)`` for every ``q != p`` with ``|p - q| <= win``.

    With ``node_types`` the context's type is appended to each tuple.
    """
    if win < 1:
        raise TrainingError("window radius must be >= 1")
    n = len(seq)
    for p in range(n):
        for q in range(max(0, p - win), min(n, p + win + 1)):
            if q == p:
                continue
            if node_types is None:
                yield seq[p], seq[q]
            else:
                yield seq[p], seq[q], int(node_types[seq[q]])


def count_pairs(n: int, win: int) -> int:
    """Number of ordered in-window pairs in a sequence of length ``n``."""
    span = min(win, n - 1)
    if span <= 0:
        return 0
    return 2 * (span * n - span * (span + 1) // 2)


@dataclass
class EmbeddingMatrix:
    """Center vectors ``center[i]`` and context vectors ``context[i]`` for every graph node.

    Only ``nodes`` (the vocabulary) were trained; the other rows stay at
    their initialization.
    """

    center: np.ndarray
    context: np.ndarray
    nodes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def dimension(self) -> int:
        return int(self.center.shape[1])

    def vectors(self, nodes) -> np.ndarray:
        return self.center[np.asarray(nodes, dtype=np.int64)]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.center).all() and np.isfinite(self.context).all())


@dataclass
class TrainConfig:
    dimension: int = 128
    window: int = 10
    negatives: int = 5
    learning_rate: float = 0.025
    epochs: int = 1
    seed: int = 0
    deterministic: bool = True
    negative_scope: str = "type"
    window_mode: str = "radius"
    threads: int = 1
    min_lr_fraction: float = 1e-4

    def validate(self) -> None:
        if self.dimension < 1:
            raise TrainingError("dimension must be >= 1")
        if self.negatives < 1:
            raise TrainingError("negatives must be >= 1")
        if self.window < 1:
            raise TrainingError("window must be >= 1")
        if self.learning_rate <= 0:
            raise TrainingError("learning_rate must be positive")
        if self.epochs < 0:
            raise TrainingError("epochs must be >= 0")
        if self.window_mode not in ("radius", "span"):
            raise TrainingError("window_mode must be 'radius' or 'span'")

    @property
    def radius(self) -> int:
        return self.window if self.window_mode == "radius" else max(1, self.window // 2)


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _pair_update(V, U, center, ctx, negs, n_negs, lr, grad):
    """One ascent step on log s(u_ctx.v) + sum log s(-u_neg.v); ``grad`` is scratch."""
    d = V.shape[1]
    v = V[center]
    for a in range(d):
        grad[a] = 0.0
    for r in range(-1, n_negs):
        row = U[ctx] if r < 0 else U[negs[r]]
        dot = 0.0
        for a in range(d):
            dot += row[a] * v[a]
        g = lr * (1.0 - _sigmoid(dot)) if r < 0 else -lr * _sigmoid(dot)
        for a in range(d):
            grad[a] += g * row[a]
            row[a] += g * v[a]
    for a in range(d):
        v[a] += grad[a]


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _draw(table_nodes, table_cdf, lo, hi, u):
    # first index with cdf > u
    a, b = lo, hi
    while a < b:
        mid = (a + b) // 2
        if table_cdf[mid] > u:
            b = mid
        else:
            a = mid + 1
    if a >= hi:
        a = hi - 1
    return table_nodes[a]


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _sample_many(table_nodes, table_cdf, lo, hi, n, seed):
    np.random.seed(seed)
    out = np.empty(n, dtype=np.int32)
    for i in range(n):
        out[i] = _draw(table_nodes, table_cdf, lo, hi, np.random.random())
    return out


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _train_range(tokens, offsets, w_lo, w_hi, radius, m, node_types, per_type,
                 table_nodes, table_cdf, table_ptr, V, U, lr0, min_frac, total, done0, seed):
    np.random.seed(seed)
    grad = np.empty(V.shape[1])
    negs = np.empty(m, dtype=np.int64)
    done = done0
    for w in range(w_lo, w_hi):
        lo_w, hi_w = offsets[w], offsets[w + 1]
        for p in range(lo_w, hi_w):
            center = tokens[p]
            q0 = max(lo_w, p - radius)
            q1 = min(hi_w, p + radius + 1)
            for q in range(q0, q1):
                if q == p:
                    continue
                ctx = tokens[q]
                frac = 1.0 - done / total
                if frac < min_frac:
                    frac = min_frac
                lr = lr0 * frac
                s = node_types[ctx] if per_type else 0
                t_lo, t_hi = table_ptr[s], table_ptr[s + 1]
                k = 0
                for r in range(m):
                    neg = _draw(table_nodes, table_cdf, t_lo, t_hi, np.random.random())
                    if neg != ctx:
                        negs[k] = neg
                        k += 1
                _pair_update(V, U, center, ctx, negs, k, lr, grad)
                done += 1
    return done - done0


@numba.njit(parallel=True, cache=True, fastmath=True, error_model="numpy")
def _train_parallel(tokens, offsets, bounds, radius, m, node_types, per_type,
                    table_nodes, table_cdf, table_ptr, V, U, lr0, min_frac, total, starts, seed):
    # asynchronous updates on shared rows; results vary run to run
    n_shards = bounds.shape[0] - 1
    done = np.zeros(n_shards, dtype=np.int64)
    for s in numba.prange(n_shards):
        done[s] = _train_range(tokens, offsets, bounds[s], bounds[s + 1], radius, m, node_types, per_type,
                               table_nodes, table_cdf, table_ptr, V, U, lr0, min_frac, total,
                               starts[s], seed + s)
    return done.sum()


def init_embeddings(n_nodes: int, dimension: int, seed: int) -> EmbeddingMatrix:
    rng = np.random.default_rng(seed)
    center = rng.uniform(-0.5 / dimension, 0.5 / dimension, size=(n_nodes, dimension))
    return EmbeddingMatrix(center, np.zeros((n_nodes, dimension)))


def objective(emb: EmbeddingMatrix, center: int, context: int, negatives) -> float:
    """Negative-sampling log-likelihood of one pair (the quantity ascended)."""
    v = emb.center[center]
    out = -np.logaddexp(0.0, -float(emb.context[context] @ v))
    for neg in negatives:
        out -= np.logaddexp(0.0, float(emb.context[neg] @ v))
    return float(out)


def gradients(emb: EmbeddingMatrix, center: int, context: int, negatives) -> tuple[np.ndarray, dict]:
    """Analytic gradients of :func:`objective`.

    Returns ``(d_center, d_rows)`` where ``d_rows`` maps each context-table row
    touched (the context and every negative) to its gradient. A row that
    appears more than once accumulates.
    """
    v = emb.center[center]
    u = emb.context[context]
    g_pos = 1.0 - _sigmoid(float(u @ v))
    dv = g_pos * u
    rows = {int(context): g_pos * v}
    for neg in negatives:
        neg = int(neg)
        g_neg = _sigmoid(float(emb.context[neg] @ v))
        dv = dv - g_neg * emb.context[neg]
        rows[neg] = rows.get(neg, 0.0) - g_neg * v
    return dv, rows


def sgd_step(emb: EmbeddingMatrix, center: int, context: int, negatives, lr: float) -> EmbeddingMatrix:
    """Apply one in-place ascent step for the pair and its negatives."""
    n = emb.center.shape[0]
    negs = np.asarray(negatives, dtype=np.int64)
    for node in (center, context, *negs.tolist()):
        if not 0 <= node < n:
            raise TrainingError(f"unknown node {node}")
    if lr <= 0:
        raise TrainingError("learning rate must be positive")
    _pair_update(emb.center, emb.context, center, context, negs, negs.size, lr, np.empty(emb.dimension))
    if not (np.isfinite(emb.center[center]).all() and np.isfinite(emb.context[context]).all()):
        raise FloatingPointError(f"non-finite vector after update of pair ({center}, {context}) at lr={lr}")
    return emb


def sample_negatives(vocab: Vocabulary, context_type: int, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` negatives for a context of ``context_type`` with the training sampler."""
    s = vocab.segment(context_type)
    lo, hi = int(vocab.table_ptr[s]), int(vocab.table_ptr[s + 1])
    if hi == lo:
        raise TrainingError(f"no vocabulary nodes for type {context_type}")
    return _sample_many(vocab.table_nodes, vocab.table_cdf, lo, hi, n, seed)


def softmax_prob(emb: EmbeddingMatrix, center: int, context: int, candidates) -> float:
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        raise TrainingError("empty candidate set")
    logits = emb.context[cand] @ emb.center[center]
    logits = logits - logits.max()
    p = np.exp(logits)
    p /= p.sum()
    hit = np.flatnonzero(cand == context)
    return float(p[hit].sum())


def train(corpus, g: TypedGraph, cfg: TrainConfig, vocab: Vocabulary | None = None,
          return_updates: bool = False):
    """Train embeddings over ``corpus``; each in-window pair is visited once per epoch.

    The learning rate decays linearly with processed pairs from
    ``learning_rate`` to ``learning_rate * min_lr_fraction``.
    """
    cfg.validate()
    tokens, offsets = corpus.flat() if hasattr(corpus, "flat") else _flatten(corpus)
    if tokens.size == 0:
        raise TrainingError("empty corpus")
    vocab = vocab or build_vocab(corpus, g, scope=cfg.negative_scope)
    emb = init_embeddings(g.node_count, cfg.dimension, cfg.seed)
    emb.nodes = vocab.nodes
    radius = cfg.radius
    lengths = np.diff(offsets)
    pairs_per_epoch = int(sum(count_pairs(int(n), radius) for n in lengths))
    total = max(1, pairs_per_epoch * cfg.epochs)
    per_type = cfg.negative_scope == "type"
    node_types = g.node_types.astype(np.int64)
    updates = 0
    for epoch in range(cfg.epochs):
        seed = (cfg.seed * 1_000_003 + epoch) % (2**32)
        if cfg.deterministic or cfg.threads <= 1:
            updates += _train_range(tokens, offsets, 0, len(lengths), radius, cfg.negatives, node_types,
                                    per_type, vocab.table_nodes, vocab.table_cdf, vocab.table_ptr,
                                    emb.center, emb.context, cfg.learning_rate, cfg.min_lr_fraction,
                                    float(total), updates, seed)
        else:
            numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
            n_shards = max(1, cfg.threads)
            bounds = np.linspace(0, len(lengths), n_shards + 1).astype(np.int64)
            # approximate per-shard progress offsets for the decay schedule
            shard_pairs = np.array([sum(count_pairs(int(n), radius) for n in lengths[bounds[s]:bounds[s + 1]])
                                    for s in range(n_shards)], dtype=np.int64)
            starts = updates + np.concatenate([[0], np.cumsum(shard_pairs)[:-1]]).astype(np.int64)
            updates += _train_parallel(tokens, offsets, bounds, radius, cfg.negatives, node_types, per_type,
                                       vocab.table_nodes, vocab.table_cdf, vocab.table_ptr, emb.center,
                                       emb.context, cfg.learning_rate, cfg.min_lr_fraction, float(total),
                                       starts, seed)
        if not emb.is_finite():
            raise FloatingPointError(f"non-finite embeddings after epoch {epoch}")
        logger.info("epoch %d done: %d pair updates", epoch, updates)
    if return_updates:
        return emb, int(updates), pairs_per_epoch
    return emb


def write_embeddings_text(path, emb: EmbeddingMatrix, g: TypedGraph, nodes=None) -> None:
    nodes = emb.nodes if nodes is None else np.asarray(nodes)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(nodes)} {emb.dimension}\n")
        for u in nodes.tolist():
            fh.write(g.name_of(u) + " " + " ".join(repr(float(x)) for x in emb.center[u]) + "\n")


def read_embeddings_text(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise GraphError(f"{path}:1: expected '<count> <dimension>' header")
        count, dim = int(header[0]), int(header[1])
        names, rows = [], []
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise GraphError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            names.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(names) != count:
        raise GraphError(f"{path}: header announces {count} rows, found {len(names)}")
    return names, np.array(rows, dtype=float).reshape(len(rows), dim)


def write_embeddings_binary(path, emb: EmbeddingMatrix, g: TypedGraph, nodes=None) -> None:
    """Raw little-endian float32 rows plus ``<path>.index`` with ``<count> <dim>`` and one id per line."""
    nodes = emb.nodes if nodes is None else np.asarray(nodes)
    emb.center[nodes].astype("<f4").tofile(path)
    with open(f"{path}.index", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(nodes)} {emb.dimension}\n")
        for u in nodes.tolist():
            fh.write(g.name_of(u) + "\n")


def read_embeddings_binary(path) -> tuple[list[str], np.ndarray]:
    with open(f"{path}.index", encoding="utf-8") as fh:
        count, dim = (int(x) for x in fh.readline().split())
        names = [line.rstrip("\n") for line in fh if line.strip()]
    data = np.fromfile(path, dtype="<f4")
    if data.size != count * dim or len(names) != count:
        raise GraphError(f"{path}: size does not match its index")
    return names, data.reshape(count, dim).astype(float)
