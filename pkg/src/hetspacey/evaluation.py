"""Node classification, link prediction and walk-stationarity diagnostics."""

from __future__ import annotations

import logging
import random
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .graph import GraphError, TypedGraph
from .walks import WalkerState, _Guide, run_walk, start_nodes, walk_seed

logger = logging.getLogger(__name__)

OPERATORS = ("average", "hadamard", "weighted-l1", "weighted-l2")


class EvaluationError(GraphError):
    pass


def edge_features(u, v, op: str) -> np.ndarray:
    """Binary edge operator applied componentwise; ``u`` and ``v`` may be stacked row-wise."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise EvaluationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if op == "average":
        return (u + v) / 2.0
    if op == "hadamard":
        return u * v
    if op == "weighted-l1":
        return np.abs(u - v)
    if op == "weighted-l2":
        return (u - v) ** 2
    raise EvaluationError(f"unknown operator {op!r}; expected one of {', '.join(OPERATORS)}")


def _binarize(y) -> tuple[np.ndarray, np.ndarray, bool]:
    """Label input to an indicator matrix. Returns (Y, classes, multilabel)."""
    if isinstance(y, np.ndarray) and y.ndim == 2:
        Y = (y != 0).astype(float)
        return Y, np.arange(Y.shape[1]), True
    items = list(y)
    multilabel = any(isinstance(t, (set, frozenset, list, tuple)) for t in items)
    if multilabel:
        sets = [frozenset(t) if isinstance(t, (set, frozenset, list, tuple)) else frozenset([t]) for t in items]
        classes = np.array(sorted(set().union(*sets)), dtype=object)
        index = {c: i for i, c in enumerate(classes)}
        Y = np.zeros((len(sets), len(classes)))
        for r, s in enumerate(sets):
            for c in s:
                Y[r, index[c]] = 1.0
        return Y, classes, True
    arr = np.asarray(items)
    classes = np.unique(arr)
    return (arr[:, None] == classes[None, :]).astype(float), classes, False


class OneVsRestLogisticRegression(ClassifierMixin, BaseEstimator):
    """One binary L2-penalized logistic model per class, full-batch gradient descent.

    Single-label targets predict the argmax score; multi-label targets (an
    indicator matrix or a sequence of label sets) threshold each model at 0.5.
    The intercept is not penalized.
    """

    def __init__(self, l2: float = 1e-4, max_iter: int = 500, learning_rate: float = 0.1):
        self.l2 = l2
        self.max_iter = max_iter
        self.learning_rate = learning_rate

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        Y, classes, multilabel = _binarize(y)
        if Y.shape[0] != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {Y.shape[0]}")
        if len(classes) < 2:
            raise ValueError("need at least two classes; got a single-class target")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        n = X.shape[0]
        W = np.zeros((X.shape[1], Y.shape[1]))
        b = np.zeros(Y.shape[1])
        for _ in range(self.max_iter):
            P = expit(X @ W + b)
            R = (P - Y) / n
            W -= self.learning_rate * (X.T @ R + self.l2 * W)
            b -= self.learning_rate * R.sum(axis=0)
        self.coef_ = W.T
        self.intercept_ = b
        self.classes_ = classes
        self.multilabel_ = multilabel
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return X @ self.coef_.T + self.intercept_

    def predict_proba(self, X):
        return expit(self.decision_function(X))

    def predict(self, X):
        scores = self.decision_function(X)
        if self.multilabel_:
            return (scores > 0).astype(int)
        return self.classes_[np.argmax(scores, axis=1)]


def _as_indicator(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(truth, np.ndarray) and truth.ndim == 2:
        P, T = np.asarray(pred) != 0, truth != 0
        if P.shape != T.shape:
            raise EvaluationError("prediction and truth shapes differ")
        return P, T
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise EvaluationError("prediction and truth lengths differ")
    if not truth:
        raise EvaluationError("empty input")
    if any(isinstance(t, (set, frozenset, list, tuple)) for t in truth + pred):
        as_set = lambda t: frozenset(t) if isinstance(t, (set, frozenset, list, tuple)) else frozenset([t])
        ps, ts = [as_set(t) for t in pred], [as_set(t) for t in truth]
        classes = sorted(set().union(*ts, *ps), key=repr)
        P = np.array([[c in s for c in classes] for s in ps], dtype=bool).reshape(len(ps), len(classes))
        T = np.array([[c in s for c in classes] for s in ts], dtype=bool).reshape(len(ts), len(classes))
        return P, T
    classes = np.unique(np.concatenate([np.asarray(truth), np.asarray(pred)]))
    pa, ta = np.asarray(pred), np.asarray(truth)
    return pa[:, None] == classes[None, :], ta[:, None] == classes[None, :]


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)


def micro_f1(pred, truth) -> float:
    P, T = _as_indicator(pred, truth)
    if T.size == 0:
        raise EvaluationError("empty input")
    tp = np.sum(P & T)
    fp = np.sum(P & ~T)
    fn = np.sum(~P & T)
    return float(_f1(tp, fp, fn))


def macro_f1(pred, truth) -> float:
    """Mean per-label F1 over labels present in truth or predictions (0 when a label has neither)."""
    P, T = _as_indicator(pred, truth)
    if T.size == 0:
        raise EvaluationError("empty input")
    tp = np.sum(P & T, axis=0)
    fp = np.sum(P & ~T, axis=0)
    fn = np.sum(~P & T, axis=0)
    return float(np.mean(_f1(tp, fp, fn)))


@dataclass
class ClassificationReport:
    micro_runs: list
    macro_runs: list
    baseline_runs: list = field(default_factory=list)
    train_fraction: float = 0.5
    seed: int = 0

    @property
    def micro_f1(self) -> float:
        return float(np.mean(self.micro_runs))

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.macro_runs))

    @property
    def micro_var(self) -> float:
        return float(np.var(self.micro_runs))

    @property
    def macro_var(self) -> float:
        return float(np.var(self.macro_runs))

    @property
    def baseline(self) -> float:
        return float(np.mean(self.baseline_runs)) if self.baseline_runs else float("nan")

    def summary(self) -> dict:
        return {
            "repeats": len(self.micro_runs),
            "train_fraction": self.train_fraction,
            "seed": self.seed,
            "micro_f1_mean": self.micro_f1,
            "micro_f1_var": self.micro_var,
            "macro_f1_mean": self.macro_f1,
            "macro_f1_var": self.macro_var,
            "majority_micro_f1_mean": self.baseline,
        }

    def rows(self) -> list[tuple]:
        return [("run", "micro_f1", "macro_f1", "majority_micro_f1")] + [
            (i, mi, ma, bl) for i, (mi, ma, bl) in enumerate(
                zip(self.micro_runs, self.macro_runs, self.baseline_runs or [float("nan")] * len(self.micro_runs)))
        ]


def _majority_prediction(y_train, n_test, multilabel):
    if multilabel:
        Y = np.asarray(y_train)
        return np.tile((Y.mean(axis=0) > 0.5).astype(int), (n_test, 1))
    vals, counts = np.unique(np.asarray(y_train), return_counts=True)
    return np.full(n_test, vals[np.argmax(counts)])


def classification_protocol(embeddings: np.ndarray, labeled_nodes: Mapping[int, object] | Sequence,
                            repeats: int = 10, train_fraction: float = 0.5, seed: int = 0,
                            classifier: Callable[[], object] | None = None) -> ClassificationReport:
    """Repeated random train/test splits of the labeled nodes.

    ``labeled_nodes`` maps node id to a label (or a set of labels for
    multi-label data). Also records the majority-class micro-F1 on each split.
    """
    items = sorted(labeled_nodes.items()) if isinstance(labeled_nodes, Mapping) else list(labeled_nodes)
    if repeats < 1:
        raise EvaluationError("repeats must be >= 1")
    nodes = np.array([u for u, _ in items], dtype=np.int64)
    n = nodes.size
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n - n_train < 1:
        raise EvaluationError(f"too few labeled nodes ({n}) to split at train_fraction={train_fraction}")
    emb = np.asarray(embeddings, dtype=float)
    if nodes.min() < 0 or nodes.max() >= emb.shape[0]:
        raise EvaluationError("a labeled node has no embedding row")
    X = emb[nodes]
    Y, classes, multilabel = _binarize([lab for _, lab in items])
    y = Y.astype(int) if multilabel else classes[np.argmax(Y, axis=1)]
    make = classifier or OneVsRestLogisticRegression
    rng = np.random.default_rng(seed)
    micro, macro, base = [], [], []
    for _ in range(repeats):
        perm = rng.permutation(n)
        tr, te = perm[:n_train], perm[n_train:]
        if len(np.unique(y[tr], axis=0)) < 2:
            raise EvaluationError("a training split contains a single class")
        clf = make().fit(X[tr], y[tr])
        pred = clf.predict(X[te])
        micro.append(micro_f1(pred, y[te]))
        macro.append(macro_f1(pred, y[te]))
        base.append(micro_f1(_majority_prediction(y[tr], te.size, multilabel), y[te]))
    return ClassificationReport(micro, macro, base, train_fraction, seed)


def auc(scores, labels) -> float:
    """Mann-Whitney statistic with midranks: P(s_pos > s_neg) + 0.5 P(tie)."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise EvaluationError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("AUC needs both positive and negative examples")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class LinkSplit:
    train_graph: TypedGraph
    hidden: np.ndarray
    train_pos: np.ndarray
    train_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    meta: dict


def _type_pair(g: TypedGraph, edge_type) -> tuple[int, int]:
    a, b = edge_type
    a = g.type_id(a) if isinstance(a, str) else int(a)
    b = g.type_id(b) if isinstance(b, str) else int(b)
    return a, b


def _orphans(g: TypedGraph, hidden: np.ndarray, nodes: np.ndarray) -> bool:
    lost = np.bincount(hidden.ravel(), minlength=g.node_count)
    deg = np.diff(g.indptr)
    return bool(np.any(lost[nodes] >= deg[nodes]))


def lp_split(g: TypedGraph, edge_type, hide_fraction: float = 0.2, sample: int = 2048,
             seed: int = 0, max_resample: int = 100) -> LinkSplit:
    """Hide a fraction of one edge type and build balanced train/test pairs.

    Hidden sets that would leave some endpoint with no remaining edge are
    redrawn up to ``max_resample`` times. Negatives are uniform non-adjacent
    pairs of the same type pair, rejected against the full original graph.
    """
    a, b = _type_pair(g, edge_type)
    edges = g.edges_between(a, b)
    m = edges.shape[0]
    n_hide = int(round(hide_fraction * m))
    if n_hide < 2:
        raise EvaluationError(f"only {m} edges of type {g.type_names[a]}-{g.type_names[b]}; nothing to hide")
    rng = np.random.default_rng(seed)
    orphan_free = False
    for attempt in range(max_resample):
        hidden = edges[np.sort(rng.choice(m, size=n_hide, replace=False))]
        if not _orphans(g, hidden, np.unique(hidden)):
            orphan_free = True
            break
    if not orphan_free:
        warnings.warn(f"could not avoid isolating nodes after {max_resample} hidden-set draws", RuntimeWarning)
    fallback = n_hide < sample
    n_pos = n_hide if fallback else sample
    if fallback:
        logger.info("only %d hidden edges; using all as positives", n_hide)
    pos = hidden[np.sort(rng.choice(n_hide, size=n_pos, replace=False))]
    pa, pb = g.nodes_of_type(a), g.nodes_of_type(b)
    n_possible = pa.size * pb.size if a != b else pa.size * (pa.size - 1) // 2
    if n_possible - m < n_pos:
        raise EvaluationError("not enough non-adjacent pairs to sample negatives")
    neg_set: set = set()
    neg = []
    while len(neg) < n_pos:
        u = int(pa[rng.integers(pa.size)])
        v = int(pb[rng.integers(pb.size)])
        key = (min(u, v), max(u, v))
        if u == v or key in neg_set or g.has_edge(u, v):
            continue
        neg_set.add(key)
        neg.append(key)
    neg = np.array(neg, dtype=np.int64).reshape(-1, 2)
    half = n_pos // 2
    pp, pn = rng.permutation(n_pos), rng.permutation(n_pos)
    train_graph = g.without_edges(hidden)
    split = LinkSplit(train_graph, hidden, pos[pp[:half]], neg[pn[:half]], pos[pp[half:]], neg[pn[half:]],
                      {"seed": seed, "edge_type": (g.type_names[a], g.type_names[b]), "edges": m,
                       "hidden": n_hide, "positives": n_pos, "negatives": n_pos, "fallback": fallback,
                       "orphan_free": orphan_free, "resample_attempts": attempt + 1})
    for u, v in split.test_pos.tolist():
        if train_graph.has_edge(u, v):
            raise EvaluationError(f"leak: test edge ({u}, {v}) present in training graph")
    return split


@dataclass
class LinkPredictionReport:
    auc: dict
    meta: dict

    @property
    def mean_auc(self) -> float:
        return float(np.mean([self.auc[op] for op in OPERATORS]))

    def summary(self) -> dict:
        out = {f"auc_{op}": v for op, v in self.auc.items()}
        out["auc_mean"] = self.mean_auc
        out.update({k: v for k, v in self.meta.items() if not isinstance(v, (tuple, list))})
        out["edge_type"] = "-".join(self.meta.get("edge_type", ()))
        return out


def link_prediction_protocol(embeddings: np.ndarray, split: LinkSplit,
                             classifier: Callable[[], object] | None = None) -> LinkPredictionReport:
    """Train a binary classifier on edge features for each operator; score test pairs by AUC."""
    emb = np.asarray(embeddings, dtype=float)
    make = classifier or OneVsRestLogisticRegression
    tr = np.vstack([split.train_pos, split.train_neg])
    te = np.vstack([split.test_pos, split.test_neg])
    ytr = np.r_[np.ones(len(split.train_pos)), np.zeros(len(split.train_neg))].astype(int)
    yte = np.r_[np.ones(len(split.test_pos)), np.zeros(len(split.test_neg))].astype(int)
    out = {}
    for op in OPERATORS:
        clf = make().fit(edge_features(emb[tr[:, 0]], emb[tr[:, 1]], op), ytr)
        scores = clf.decision_function(edge_features(emb[te[:, 0]], emb[te[:, 1]], op))
        col = list(clf.classes_).index(1)
        out[op] = auc(scores[:, col], yte)
    return LinkPredictionReport(out, dict(split.meta))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in bits."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise EvaluationError("distributions have different supports")
    s = p + q

    def kl(a):
        # a / m written as 2a / (p + q): halving a subnormal sum can underflow to zero
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(2 * a[nz] / s[nz])))

    return max(0.0, 0.5 * kl(p) + 0.5 * kl(q))


def stationarity_trace(g: TypedGraph, guidance, max_step: int, n_walks: int = 1000, *,
                       alpha: float = 0.8, mode: str = "spacey", seed: int = 0,
                       start: int | None = None, lag: int = 1, cumulative: bool = False) -> np.ndarray:
    """JS divergence between across-walk node distributions ``lag`` steps apart.

    Entry ``s - 1`` compares steps ``s - lag`` and ``s`` (zero for ``s < lag``).
    With ``cumulative`` the distribution at step ``s`` pools every node visited
    up to ``s`` instead of the nodes occupied at ``s``. Walks start at
    ``start`` (default: the first eligible start node); walks that hit a dead
    end stop contributing.
    """
    if max_step < 2:
        raise EvaluationError("trace needs walks of at least 2 steps")
    if lag < 1:
        raise EvaluationError("lag must be >= 1")
    guide = _Guide(guidance, g)
    if start is None:
        starts = start_nodes(g, guide)
        if starts.size == 0:
            raise EvaluationError("no eligible start node")
        start = int(starts[0])
    counts = np.zeros((max_step + 1, g.node_count))
    rng = random.Random()
    for r in range(n_walks):
        rng.seed(walk_seed(seed, start, r))
        state = WalkerState.start(g, guide, start, alpha=alpha, mode=mode, rng=rng)
        nodes, _ = run_walk(g, state, max_step)
        counts[np.arange(len(nodes)), nodes] += 1
    if cumulative:
        counts = np.cumsum(counts, axis=0)
    totals = counts.sum(axis=1, keepdims=True)
    if np.any(totals[1:] == 0):
        raise EvaluationError("every walk died before reaching max_step")
    dist = counts / totals
    return np.array([js_divergence(dist[s - lag], dist[s]) if s >= lag else 0.0
                     for s in range(1, max_step + 1)])


def parameter_sweep(axis: str, values: Sequence, run: Callable[[dict], Mapping[str, float]],
                    base: Mapping | None = None) -> list[dict]:
    """Evaluate ``run(params)`` with ``params[axis]`` set to each value in turn.

    ``run`` is the full walk-train-evaluate pipeline; returns one row per value.
    """
    if axis not in ("walk_times", "walk_length", "alpha"):
        raise EvaluationError(f"unknown sweep axis {axis!r}")
    if not values:
        raise EvaluationError("no sweep values")
    rows = []
    for value in values:
        params = dict(base or {})
        params[axis] = value
        row = {axis: value}
        row.update(run(params))
        rows.append(row)
    return rows
