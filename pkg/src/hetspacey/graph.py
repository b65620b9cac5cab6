"""Typed graph storage, loaders and the synthetic schema-driven generator.

Adjacency is kept in CSR form with every node's neighbor segment sorted by
(neighbor type, neighbor id), so ``adjacency(u, A)`` is a contiguous slice.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class GraphError(ValueError):
    """Raised for malformed graph input or an invalid graph query."""


class GraphFormatError(GraphError):
    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class NoNeighborError(GraphError):
    """The source node has no neighbor of the requested type."""


@dataclass(frozen=True)
class MetaSchema:
    """Type-level graph: which node types are connected by at least one edge."""

    type_names: tuple[str, ...]
    type_edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    @property
    def type_count(self) -> int:
        return len(self.type_names)

    def type_id(self, name: str) -> int:
        try:
            return self.type_names.index(name)
        except ValueError:
            raise GraphError(f"unknown type name {name!r}; known types: {', '.join(self.type_names)}") from None

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.type_edges

    def adjacent_types(self, a: int) -> tuple[int, ...]:
        out = set()
        for x, y in self.type_edges:
            if x == a:
                out.add(y)
            if y == a:
                out.add(x)
        return tuple(sorted(out))

    def edge_names(self) -> list[tuple[str, str]]:
        return sorted((self.type_names[a], self.type_names[b]) for a, b in self.type_edges)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], type_names: Sequence[str] | None = None) -> "MetaSchema":
        """Build a schema from named type pairs, e.g. ``[("A", "P"), ("P", "V")]``."""
        pairs = list(pairs)
        names = list(type_names) if type_names is not None else []
        for a, b in pairs:
            for t in (a, b):
                if t not in names:
                    names.append(t)
        edges = set()
        for a, b in pairs:
            i, j = names.index(a), names.index(b)
            edges.add((min(i, j), max(i, j)))
        return cls(tuple(names), frozenset(edges))

    @classmethod
    def parse(cls, text: str) -> "MetaSchema":
        """Parse ``"A-P,P-C,P-T"`` style schema strings.

        A bare name such as ``"A-P,X"`` declares a type with no type edges.
        """
        pairs, names = [], []
        for item in text.replace(" ", "").split(","):
            if not item:
                continue
            parts = item.split("-")
            if len(parts) == 1:
                names.append(parts[0])
                continue
            if len(parts) != 2 or not all(parts):
                raise GraphError(f"bad schema pair {item!r}; expected TYPE-TYPE")
            pairs.append((parts[0], parts[1]))
            names.extend(p for p in parts if p not in names)
        if not names:
            raise GraphError("empty schema specification")
        return cls.from_pairs(pairs, list(dict.fromkeys(names)))


class TypedGraph:
    """Immutable undirected multi-typed graph.

    Parameters
    ----------
    node_types : array of int, shape (N,)
        Type id of every node.
    type_names : sequence of str
        Name of every type id.
    src, dst : arrays of int
        Edge endpoints. Direction, duplicates and order are irrelevant; edges are
        stored symmetrically and deduplicated.
    node_names : sequence of str, optional
        External id of every node; defaults to the decimal node id.
    """

    def __init__(self, node_types, type_names: Sequence[str], src=(), dst=(), node_names: Sequence[str] | None = None):
        node_types = np.asarray(node_types, dtype=np.int32)
        n = int(node_types.shape[0])
        t = len(type_names)
        if n and (node_types.min() < 0 or node_types.max() >= t):
            raise GraphError("node type id out of range")
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise GraphError("src and dst must have the same length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise GraphError("edge references unknown node")
        if np.any(src == dst):
            raise GraphError("self-loops are not allowed")

        self.node_types = node_types
        self.type_names = tuple(type_names)
        self.node_names = list(node_names) if node_names is not None else None
        if self.node_names is not None and len(self.node_names) != n:
            raise GraphError("node_names length does not match node count")

        u = np.concatenate([src, dst])
        v = np.concatenate([dst, src])
        if u.size:
            key = np.unique(u * n + v)
            u, v = key // n, key % n
        # sort by (u, type(v), v)
        order = np.lexsort((v, node_types[v] if v.size else v, u))
        u, v = u[order], v[order]
        counts = np.bincount(u, minlength=n) if u.size else np.zeros(n, dtype=np.int64)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self.indices = v.astype(np.int32)
        tcounts = np.zeros((n, t), dtype=np.int64)
        if u.size:
            np.add.at(tcounts, (u, node_types[v]), 1)
        self.type_ptr = np.empty((n, t + 1), dtype=np.int64)
        self.type_ptr[:, 0] = self.indptr[:-1]
        np.cumsum(tcounts, axis=1, out=self.type_ptr[:, 1:])
        self.type_ptr[:, 1:] += self.indptr[:-1, None]
        self.typed_degrees = tcounts
        # bit t set iff the node has at least one neighbor of type t
        self.live_mask = ((tcounts > 0) * (np.int64(1) << np.arange(t, dtype=np.int64))).sum(axis=1).astype(np.int64)
        self._T = t
        self._T1 = t + 1
        self._mask_types = [tuple(a for a in range(t) if m >> a & 1) for m in range(1 << t)] if t <= 16 else None
        self._type_nodes = [np.flatnonzero(node_types == a).astype(np.int32) for a in range(t)]
        self._type_sizes = [int(x.shape[0]) for x in self._type_nodes]
        self._name_index = None
        self.communities = None
        self._make_views()

    def _make_views(self):
        # flat views give fast scalar access from the pure-Python walkers
        self._tp_view = memoryview(self.type_ptr.reshape(-1)).cast("B").cast("q")
        self._deg_view = memoryview(self.typed_degrees.reshape(-1)).cast("B").cast("q")
        self._mask_view = memoryview(self.live_mask).cast("B").cast("q")
        self._ind_view = memoryview(self.indices).cast("B").cast("i")
        self._type_view = memoryview(self.node_types).cast("B").cast("i")
        self._type_nodes_views = [memoryview(a).cast("B").cast("i") for a in self._type_nodes]

    def __getstate__(self):
        state = self.__dict__.copy()
        for key in ("_tp_view", "_deg_view", "_mask_view", "_ind_view", "_type_view", "_type_nodes_views"):
            state.pop(key, None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._make_views()

    def __repr__(self):
        return f"TypedGraph(nodes={self.node_count}, edges={self.edge_count}, types={list(self.type_names)})"

    @property
    def node_count(self) -> int:
        return int(self.node_types.shape[0])

    @property
    def type_count(self) -> int:
        return len(self.type_names)

    @property
    def edge_count(self) -> int:
        """Number of undirected edges."""
        return int(self.indices.shape[0] // 2)

    def type_id(self, name: str) -> int:
        try:
            return self.type_names.index(name)
        except ValueError:
            raise GraphError(f"unknown type name {name!r}") from None

    def node_type(self, u: int) -> int:
        return int(self.node_types[u])

    def name_of(self, u: int) -> str:
        return self.node_names[u] if self.node_names is not None else str(u)

    def node_id(self, name: str) -> int:
        if self.node_names is None:
            return int(name)
        if self._name_index is None:
            self._name_index = {s: i for i, s in enumerate(self.node_names)}
        try:
            return self._name_index[name]
        except KeyError:
            raise GraphError(f"unknown node {name!r}") from None

    def nodes_of_type(self, a: int) -> np.ndarray:
        return self._type_nodes[a]

    def type_sizes(self) -> list[int]:
        return list(self._type_sizes)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def adjacency(self, u: int, a: int) -> np.ndarray:
        return self.indices[self.type_ptr[u, a]:self.type_ptr[u, a + 1]]

    def typed_degree(self, u: int, a: int) -> int:
        return int(self.typed_degrees[u, a])

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def has_edge(self, u: int, v: int) -> bool:
        seg = self.adjacency(u, int(self.node_types[v]))
        i = np.searchsorted(seg, v)
        return bool(i < seg.shape[0] and seg[i] == v)

    def edges(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array with ``u < v``, sorted."""
        u = np.repeat(np.arange(self.node_count, dtype=np.int64), np.diff(self.indptr))
        v = self.indices.astype(np.int64)
        mask = u < v
        out = np.stack([u[mask], v[mask]], axis=1)
        return out[np.lexsort((out[:, 1], out[:, 0]))] if out.size else out.reshape(0, 2)

    def edges_between(self, a: int, b: int) -> np.ndarray:
        e = self.edges()
        ta, tb = self.node_types[e[:, 0]], self.node_types[e[:, 1]]
        mask = ((ta == a) & (tb == b)) | ((ta == b) & (tb == a))
        return e[mask]

    def without_edges(self, removed) -> "TypedGraph":
        """Copy of the graph with the given undirected edges removed."""
        e = self.edges()
        removed = np.asarray(removed, dtype=np.int64).reshape(-1, 2)
        n = self.node_count
        if removed.size:
            lo, hi = removed.min(axis=1), removed.max(axis=1)
            drop = np.isin(e[:, 0] * n + e[:, 1], lo * n + hi)
            e = e[~drop]
        return TypedGraph(self.node_types, self.type_names, e[:, 0], e[:, 1], self.node_names)

    def __eq__(self, other):
        if not isinstance(other, TypedGraph):
            return NotImplemented
        return (
            self.type_names == other.type_names
            and np.array_equal(self.node_types, other.node_types)
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and [self.name_of(i) for i in range(self.node_count)] == [other.name_of(i) for i in range(other.node_count)]
        )

    __hash__ = None


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            yield lineno, line


def _split_fields(line: str) -> list[str]:
    parts = line.split("\t")
    if len(parts) == 1:
        parts = line.split()
    return [p.strip() for p in parts if p.strip()]


def load_graph(nodes_path, edges_path) -> TypedGraph:
    """Load a graph from a nodes file and an edges file.

    Nodes: ``<id> TAB <type>`` per line. Edges: ``<src> TAB <dst> [TAB <relation>]``.
    ``#`` starts a comment. Node ids are assigned densely in file order.
    """
    for p in (nodes_path, edges_path):
        if not Path(p).is_file():
            raise FileNotFoundError(f"no such file: {p}")
    names: list[str] = []
    index: dict[str, int] = {}
    types: list[int] = []
    type_names: list[str] = []
    for lineno, line in _read_lines(nodes_path):
        parts = _split_fields(line)
        if len(parts) != 2:
            raise GraphFormatError(nodes_path, lineno, f"expected '<node-id> TAB <type>', got {line!r}")
        name, tname = parts
        if tname not in type_names:
            type_names.append(tname)
        tid = type_names.index(tname)
        if name in index:
            if types[index[name]] != tid:
                raise GraphFormatError(
                    nodes_path, lineno,
                    f"node {name!r} declared with two types: {type_names[types[index[name]]]!r} and {tname!r}",
                )
            continue
        index[name] = len(names)
        names.append(name)
        types.append(tid)

    src: list[int] = []
    dst: list[int] = []
    for lineno, line in _read_lines(edges_path):
        parts = _split_fields(line)
        if len(parts) not in (2, 3):
            raise GraphFormatError(edges_path, lineno, f"expected '<src> TAB <dst> [TAB <relation>]', got {line!r}")
        try:
            u, v = index[parts[0]], index[parts[1]]
        except KeyError as exc:
            raise GraphFormatError(edges_path, lineno, f"unknown node {exc.args[0]!r}") from None
        if u == v:
            raise GraphFormatError(edges_path, lineno, f"self-loop on node {parts[0]!r}")
        src.append(u)
        dst.append(v)
    return TypedGraph(np.array(types, dtype=np.int32), type_names, src, dst, names)


def save_graph(g: TypedGraph, nodes_path, edges_path) -> None:
    with open(nodes_path, "w", encoding="utf-8", newline="\n") as fh:
        for u in range(g.node_count):
            fh.write(f"{g.name_of(u)}\t{g.type_names[g.node_types[u]]}\n")
    with open(edges_path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in g.edges():
            fh.write(f"{g.name_of(u)}\t{g.name_of(v)}\n")


def derive_schema(g: TypedGraph) -> MetaSchema:
    e = g.edges()
    if e.size == 0:
        return MetaSchema(g.type_names, frozenset())
    ta = g.node_types[e[:, 0]]
    tb = g.node_types[e[:, 1]]
    pairs = {(int(min(a, b)), int(max(a, b))) for a, b in set(zip(ta.tolist(), tb.tolist()))}
    return MetaSchema(g.type_names, frozenset(pairs))


def transition_prob(g: TypedGraph, src: int, dst_type: int, dst: int) -> float:
    """First-order probability of stepping ``src -> dst`` when the next type is ``dst_type``."""
    deg = g.typed_degree(src, dst_type)
    if deg == 0:
        raise NoNeighborError(f"no neighbor of required type {g.type_names[dst_type]!r} at node {g.name_of(src)!r}")
    if int(g.node_types[dst]) != dst_type or not g.has_edge(src, dst):
        return 0.0
    return 1.0 / deg


def sample_typed_neighbor(g: TypedGraph, src: int, dst_type: int, rng) -> int:
    """Draw a neighbor of ``src`` of type ``dst_type`` uniformly (unweighted rows).

    ``rng`` is a :class:`random.Random`; one ``rng.random()`` call is consumed.
    """
    base = src * g._T1 + dst_type
    lo = g._tp_view[base]
    hi = g._tp_view[base + 1]
    if hi == lo:
        raise NoNeighborError(f"no neighbor of required type {g.type_names[dst_type]!r} at node {g.name_of(src)!r}")
    return g._ind_view[lo + int(rng.random() * (hi - lo))]


def _largest_remainder(fracs: Sequence[float], n: int) -> list[int]:
    raw = [f * n for f in fracs]
    out = [int(math.floor(x)) for x in raw]
    rest = n - sum(out)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - out[i]), i))
    for i in order[:rest]:
        out[i] += 1
    return out


def generate_synthetic(
    schema: MetaSchema,
    type_proportions: Mapping[str, float] | None,
    n_nodes: int,
    avg_degree: float,
    seed: int,
    n_communities: int = 0,
    p_in: float = 0.9,
) -> TypedGraph:
    """Random typed graph whose edges follow ``schema.type_edges``.

    The edge budget ``avg_degree * n_nodes / 2`` is split over schema pairs in
    proportion to the combined size of their two types; endpoints are uniform
    within a type. With ``n_communities > 0`` every node gets a latent block
    label (``g.communities``) and each edge endpoint is drawn from the first
    endpoint's block with probability ``p_in``.
    """
    if not schema.type_edges:
        raise GraphError("schema has no type edges")
    if n_nodes < 1:
        raise GraphError("n_nodes must be positive")
    if avg_degree < 1:
        raise GraphError("avg_degree must be >= 1")
    t = schema.type_count
    if type_proportions is None:
        fracs = [1.0 / t] * t
    else:
        unknown = set(type_proportions) - set(schema.type_names)
        if unknown:
            raise GraphError(f"proportions for unknown types: {sorted(unknown)}")
        fracs = [float(type_proportions.get(name, 0.0)) for name in schema.type_names]
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise GraphError(f"type proportions must sum to 1, got {sum(fracs)}")
    sizes = _largest_remainder(fracs, n_nodes)
    node_types = np.repeat(np.arange(t, dtype=np.int32), sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    rng = np.random.default_rng(seed)
    blocks = None
    if n_communities > 0:
        blocks = rng.integers(0, n_communities, size=n_nodes)

    pairs = sorted(schema.type_edges)
    touched = {x for pair in pairs for x in pair}
    for a in range(t):
        if a not in touched and sizes[a]:
            logger.warning("type %s is isolated in the schema; its %d nodes get no edges",
                           schema.type_names[a], sizes[a])
    live = [(a, b) for a, b in pairs if sizes[a] and sizes[b] and (a != b or sizes[a] > 1)]
    for a, b in pairs:
        if (a, b) not in live:
            logger.warning("schema pair %s-%s has an empty type; no edges emitted",
                           schema.type_names[a], schema.type_names[b])
    target = int(round(avg_degree * n_nodes / 2))
    weight = np.array([sizes[a] + sizes[b] for a, b in live], dtype=float)
    budget = _largest_remainder((weight / weight.sum()).tolist(), target) if live else []

    # per-type, per-block member lists for planted mode
    members = {}
    if blocks is not None:
        for a in range(t):
            nodes = np.arange(starts[a], starts[a + 1])
            members[a] = [nodes[blocks[nodes] == c] for c in range(n_communities)]

    all_src, all_dst = [], []
    for (a, b), want in zip(live, budget):
        cap = sizes[a] * sizes[b] if a != b else sizes[a] * (sizes[a] - 1) // 2
        want = min(want, cap)
        keys = np.empty(0, dtype=np.int64)
        for _ in range(100):
            need = want - keys.size
            if need <= 0:
                break
            m = int(need * 1.1) + 16
            u = starts[a] + rng.integers(0, sizes[a], size=m)
            v = starts[b] + rng.integers(0, sizes[b], size=m)
            if blocks is not None:
                same = rng.random(m) < p_in
                for c in range(n_communities):
                    pool = members[b][c]
                    sel = same & (blocks[u] == c)
                    if pool.size and sel.any():
                        v[sel] = pool[rng.integers(0, pool.size, size=int(sel.sum()))]
            ok = u != v
            lo, hi = np.minimum(u[ok], v[ok]), np.maximum(u[ok], v[ok])
            new = lo * n_nodes + hi
            # keep first occurrences in draw order so the result is seed-stable
            merged = np.concatenate([keys, new])
            _, first = np.unique(merged, return_index=True)
            keys = merged[np.sort(first)][:want]
        all_src.append(keys // n_nodes)
        all_dst.append(keys % n_nodes)
    src = np.concatenate(all_src) if all_src else np.empty(0, dtype=np.int64)
    dst = np.concatenate(all_dst) if all_dst else np.empty(0, dtype=np.int64)
    names = [f"{schema.type_names[node_types[i]]}{i}" for i in range(n_nodes)]
    g = TypedGraph(node_types, schema.type_names, src, dst, names)
    g.communities = blocks
    return g
