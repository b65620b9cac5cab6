"""Dense small-graph reference computations for second-order walks.

Everything here is O(N^3) in memory and guarded by :data:`MAX_DENSE_NODES`;
it exists to cross-check the walkers, not to run on real graphs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import GraphError, TypedGraph
from .metalang import MetaGraph, MetaPath

logger = logging.getLogger(__name__)

MAX_DENSE_NODES = 200


class OracleError(GraphError):
    pass


class ConvergenceError(OracleError):
    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


@dataclass
class Hypermatrix:
    """Dense transition tensor ``entries[i, j, k] = P(next=k | current=j, previous=i)``."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    def slice_sums(self) -> np.ndarray:
        return self.entries.sum(axis=2)

    def validate(self, atol: float = 1e-12) -> None:
        e = self.entries
        if e.ndim != 3 or not (e.shape[0] == e.shape[1] == e.shape[2]):
            raise OracleError("hypermatrix must be a cube")
        if np.any(e < 0) or np.any(e > 1 + atol):
            raise OracleError("hypermatrix entries must lie in [0, 1]")
        s = self.slice_sums()
        nz = s > 0
        if np.any(np.abs(s[nz] - 1.0) > atol):
            raise OracleError("non-zero hypermatrix slices must sum to 1")


def _check_size(n: int) -> None:
    if n > MAX_DENSE_NODES:
        raise OracleError(f"graph has {n} nodes; dense oracle is capped at {MAX_DENSE_NODES}")


def build_hypermatrix(g: TypedGraph, mp: MetaPath) -> Hypermatrix:
    """Second-order transition tensor of the meta-path constrained walk.

    ``H[i, j, k] = 1 / deg(j, A)`` when ``(type(i), type(j))`` is a window of
    the meta-path with successor ``A``, ``type(k) == A`` and ``j``-``k`` is an
    edge; zero otherwise. The previous node ``i`` enters only through its type.
    """
    if mp.order > 2:
        raise OracleError(f"order {mp.order} meta-paths are not supported")
    n = g.node_count
    _check_size(n)
    H = np.zeros((n, n, n))
    for (p, c), a in mp.pair_windows.items():
        prev_nodes = g.nodes_of_type(p)
        for j in g.nodes_of_type(c).tolist():
            nbrs = g.adjacency(j, a)
            if nbrs.size == 0:
                continue
            H[np.ix_(prev_nodes, [j], nbrs)] = 1.0 / nbrs.size
    return Hypermatrix(H)


def integrate_hypermatrices(hs: Sequence[Hypermatrix]) -> Hypermatrix:
    """Average of the members over those that are non-zero at each entry."""
    if not hs:
        raise OracleError("nothing to integrate")
    n = hs[0].n
    if any(h.n != n for h in hs):
        raise OracleError("hypermatrices differ in size")
    total = np.zeros_like(hs[0].entries)
    count = np.zeros(hs[0].entries.shape, dtype=np.int64)
    for h in hs:
        total += h.entries
        count += h.entries > 0
    out = np.zeros_like(total)
    np.divide(total, count, out=out, where=count > 0)
    return Hypermatrix(out)


def tensor_apply(H: Hypermatrix, x: np.ndarray) -> np.ndarray:
    """``y_k = sum_{i,j} H[i, j, k] x_i x_j``."""
    return np.einsum("ijk,i,j->k", H.entries, x, x)


@dataclass
class FixedPoint:
    x: np.ndarray
    iterations: int
    residual: float


def fixed_point_residual(H: Hypermatrix, x: np.ndarray) -> float:
    y = tensor_apply(H, x)
    s = y.sum()
    if s <= 0:
        return float("inf")
    return float(np.max(np.abs(y / s - x)))


def fixed_point_stationary(H: Hypermatrix, tol: float = 1e-10, max_iter: int = 100_000,
                           damping: float = 0.5, start: np.ndarray | None = None) -> FixedPoint:
    """Solve ``x = normalize(H (x ⊗ x))`` by damped iteration.

    ``H (x ⊗ x)`` has mass below one whenever part of ``x ⊗ x`` sits on
    type-invalid contexts, so the image is renormalized before comparison.
    """
    if tol <= 0:
        raise OracleError("tol must be positive")
    n = H.n
    x = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    res = fixed_point_residual(H, x)
    for it in range(1, max_iter + 1):
        y = tensor_apply(H, x)
        s = y.sum()
        if s <= 0:
            raise ConvergenceError("tensor image vanished; no valid context carries mass", x, np.inf)
        x = (1.0 - damping) * (y / s) + damping * x
        res = fixed_point_residual(H, x)
        if res <= tol:
            return FixedPoint(x, it, res)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (residual {res:.3e})", x, res)


def spacey_transition_matrix(H: Hypermatrix, x: np.ndarray, w: np.ndarray, alpha: float,
                             renormalize: bool = False) -> np.ndarray:
    """``R[j, k] = sum_i H[i, j, k] ((1 - alpha) x_i + alpha w_i)``.

    The literal matrix has row sums equal to the mixture mass on valid
    predecessors of ``j``; ``renormalize=True`` divides each non-zero row by
    that mass, giving the row-stochastic view the walker actually follows.
    """
    mix = (1.0 - alpha) * np.asarray(x, dtype=float) + alpha * np.asarray(w, dtype=float)
    R = np.einsum("ijk,i->jk", H.entries, mix)
    if renormalize:
        R = row_normalize(R)
    return R


def row_normalize(R: np.ndarray) -> np.ndarray:
    s = R.sum(axis=1, keepdims=True)
    out = np.zeros_like(R)
    np.divide(R, s, out=out, where=s > 0)
    return out


@dataclass
class PairChain:
    states: list
    probs: np.ndarray
    marginal: np.ndarray
    iterations: int


def pair_chain_stationary(H: Hypermatrix, tol: float = 1e-12, max_iter: int = 1_000_000) -> PairChain:
    """Stationary law of the second-order chain lifted to ordered node pairs.

    States are the contexts ``(j, k)`` that some transition can reach. The
    chain is checked for irreducibility, then iterated in its lazy form (the
    meta-path chains are periodic) until successive iterates differ by at most
    ``tol``. ``marginal[k]`` is the mass of pairs ``(j, k)`` whose current node is ``k``.
    """
    E = H.entries
    n = H.n
    reach = E.sum(axis=0) > 0  # (j, k) reachable as a context
    js, ks = np.nonzero(reach)
    states = list(zip(js.tolist(), ks.tolist()))
    if not states:
        raise OracleError("hypermatrix has no valid transitions")
    index = {s: a for a, s in enumerate(states)}
    rows, cols, vals = [], [], []
    for a, (i, j) in enumerate(states):
        for k in np.flatnonzero(E[i, j]).tolist():
            rows.append(a)
            cols.append(index[(j, k)])
            vals.append(E[i, j, k])
    m = len(states)
    T = csr_matrix((vals, (rows, cols)), shape=(m, m))
    out_mass = np.asarray(T.sum(axis=1)).ravel()
    dead = np.flatnonzero(np.abs(out_mass - 1.0) > 1e-9)
    if dead.size:
        i, j = states[dead[0]]
        raise OracleError(f"context ({i}, {j}) has no valid continuation; pair chain is not stochastic")
    ncomp, labels = connected_components(T, directed=True, connection="strong")
    if ncomp > 1:
        main = np.bincount(labels).argmax()
        bad = states[int(np.flatnonzero(labels != main)[0])]
        raise OracleError(f"pair chain is reducible: context {bad} is not mutually reachable with the rest")
    s = np.full(m, 1.0 / m)
    Tt = T.T.tocsr()
    for it in range(1, max_iter + 1):
        nxt = 0.5 * s + 0.5 * (Tt @ s)
        diff = np.max(np.abs(nxt - s))
        s = nxt
        if diff <= tol:
            break
    else:
        raise ConvergenceError("pair chain power iteration did not converge", s, diff)
    s = s / s.sum()
    marginal = np.zeros(n)
    np.add.at(marginal, ks, s)
    return PairChain(states, s, marginal, it)


def empirical_distribution(paths, n: int) -> np.ndarray:
    """Visit-frequency histogram over ``n`` nodes of one trajectory or a corpus."""
    if isinstance(paths, np.ndarray) and paths.ndim == 1:
        tokens = paths
    else:
        arrs = [np.asarray(p, dtype=np.int64) for p in paths]
        tokens = np.concatenate(arrs) if arrs else np.empty(0, dtype=np.int64)
    if tokens.size == 0:
        raise OracleError("empty input")
    counts = np.bincount(np.asarray(tokens, dtype=np.int64), minlength=n).astype(float)
    return counts / counts.sum()


def metagraph_next_distribution(Hbar: Hypermatrix, g: TypedGraph, mg: MetaGraph, w: np.ndarray,
                                current: int, previous: int, alpha: float) -> np.ndarray:
    """Literal next-node law of the meta-graph spacey walk from a dense tensor.

    ``w`` is the dense occupation vector. Predecessors are redrawn from ``w``
    restricted to the meta-graph's predecessor types of ``current``; the next
    type follows the uniform/occupation mixture over successor types whose
    tensor slice is non-empty; the next node follows the integrated tensor.
    """
    n = g.node_count
    types = g.node_types
    tc = int(types[current])
    pred_types = sorted(mg.predecessor_types.get(tc, ()))
    restricted = np.isin(types, pred_types)
    ydist = np.zeros(n)
    ydist[restricted] = alpha * w[restricted] / w[restricted].sum()
    ydist[previous] += 1.0 - alpha
    out = np.zeros(n)
    for y in np.flatnonzero(ydist > 0).tolist():
        row = Hbar.entries[y, current]
        cands = [a for a in sorted(mg.successor_types.get((int(types[y]), tc), ()))
                 if row[types == a].sum() > 0]
        if not cands:
            continue
        mass = np.array([w[types == a].sum() for a in cands])
        z = mass / mass.sum()
        for a, za in zip(cands, z):
            pa = (1.0 - alpha) / len(cands) + alpha * za
            sel = types == a
            out[sel] += ydist[y] * pa * row[sel]
    return out
