"""Meta-path constrained Markovian walks and the spacey walkers.

All walkers share :class:`WalkerState`: current node, previous node, a
per-trajectory :class:`OccupationVector` and a ``random.Random`` stream.
Step functions return the next node id, or ``None`` when the walk hits a
dead end (no neighbor of the required type).
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .graph import GraphError, MetaSchema, TypedGraph, derive_schema
from .metalang import MetaGraph, MetaPath, SpaceyGraph, build_spacey_graph

logger = logging.getLogger(__name__)

MODES = ("markovian", "spacey")

# incremented by debug-mode checks; lets test runs confirm the checks executed
debug_counters = {"occupation": 0, "totality": 0, "walks": 0}

# default for walkers created without an explicit ``debug`` flag
DEBUG = os.environ.get("HETSPACEY_DEBUG", "") not in ("", "0")
DENSE_CHECK_NODES = 512


class WalkError(GraphError):
    pass


class OccupationVector:
    """Smoothed visit distribution ``w_i(n) = (1 + counts[i]) / (n + N)``.

    Besides the sparse counts it keeps, per type, the visit log so that a node
    can be drawn from ``w`` restricted to a set of types in O(|types|): within
    type ``T`` the unnormalized mass is ``|T| + visits[T]``, split between a
    uniform pick over the type's nodes (the ``+1`` smoothing) and a uniform
    pick over that type's past visits (the counts).
    """

    __slots__ = ("N", "n", "counts", "type_sizes", "type_visits", "history", "_node_type", "_type_nodes")

    def __init__(self, g: TypedGraph):
        self.N = g.node_count
        self.n = 0
        self.counts: dict[int, int] = {}
        self.type_sizes = g._type_sizes
        self.type_visits = [0] * g.type_count
        self.history: list[list[int]] = [[] for _ in range(g.type_count)]
        self._node_type = g._type_view
        self._type_nodes = g._type_nodes_views

    def visit(self, node: int) -> None:
        self.counts[node] = self.counts.get(node, 0) + 1
        self.n += 1
        t = self._node_type[node]
        self.type_visits[t] += 1
        self.history[t].append(node)

    def weight(self, node: int) -> float:
        return (1 + self.counts.get(node, 0)) / (self.n + self.N)

    def type_mass(self, t: int) -> float:
        return (self.type_sizes[t] + self.type_visits[t]) / (self.n + self.N)

    def dense(self) -> np.ndarray:
        w = np.ones(self.N)
        for node, c in self.counts.items():
            w[node] += c
        return w / (self.n + self.N)

    def check(self) -> None:
        """Assert ``sum(w) == 1`` within 1e-12.

        Small graphs sum the dense vector; above :data:`DENSE_CHECK_NODES`
        the sum is evaluated from the count bookkeeping instead.
        """
        debug_counters["occupation"] += 1
        if self.N <= DENSE_CHECK_NODES:
            d = self.n + self.N
            unvisited = self.N - len(self.counts)
            total = math.fsum([1 / d] * unvisited + [(1 + c) / d for c in self.counts.values()])
        else:
            visited = sum(self.counts.values())
            if visited != self.n or sum(self.type_visits) != self.n:
                raise AssertionError(f"visit counts {visited} disagree with step counter n={self.n}")
            total = (self.N + visited) / (self.n + self.N)
        if abs(total - 1.0) > 1e-12:
            raise AssertionError(f"occupation vector sums to {total!r} at n={self.n}")

    def sample_restricted(self, types: Sequence[int], rng: random.Random) -> int:
        """Draw a node from ``w`` restricted to nodes whose type is in ``types``."""
        sizes, visits = self.type_sizes, self.type_visits
        total = 0
        for t in types:
            total += sizes[t] + visits[t]
        u = rng.random() * total
        for t in types:
            m = sizes[t] + visits[t]
            if u < m:
                if u < sizes[t]:
                    return self._type_nodes[t][int(u)]
                return self.history[t][int(u - sizes[t])]
            u -= m
        t = types[-1]
        hist = self.history[t]
        return hist[-1] if hist else self._type_nodes[t][sizes[t] - 1]


class _Guide:
    """Precomputed integer tables for one guidance structure."""

    def __init__(self, guidance, g: TypedGraph):
        self.guidance = guidance
        self.metapath = self.metagraph = self.schema = self.spacey_graph = None
        if isinstance(guidance, MetaPath):
            self.kind = "metapath"
            self.metapath = guidance
            self.spacey_graph = build_spacey_graph(guidance)
            self.succ = dict(self.spacey_graph.context_successors)
            self.preds = {c: tuple(sorted(s)) for c, s in self.spacey_graph.predecessor_types.items()}
            self.first = guidance.type_sequence[1]
            self.start_types = frozenset([guidance.source_type])
        elif isinstance(guidance, MetaGraph):
            self.kind = "metagraph"
            self.metagraph = guidance
            self.succ = {k: tuple(sorted(v)) for k, v in guidance.successor_types.items()}
            self.preds = {c: tuple(sorted(s)) for c, s in guidance.predecessor_types.items()}
            self.first = tuple(sorted(guidance.first_step_types))
            self.succ_mask = {k: _type_mask(v) for k, v in self.succ.items()}
            self.first_mask = _type_mask(self.first)
            self.start_types = frozenset([guidance.source_type])
        elif isinstance(guidance, MetaSchema):
            self.kind = "metaschema"
            self.schema = guidance
            self.adjacent = [guidance.adjacent_types(t) for t in range(guidance.type_count)]
            self.adjacent_mask = [_type_mask(a) for a in self.adjacent]
            self.start_types = frozenset(range(guidance.type_count))
        else:
            raise WalkError(f"unsupported guidance {type(guidance).__name__}")
        if tuple(getattr(guidance, "type_names", g.type_names)) != tuple(g.type_names):
            raise WalkError("guidance was parsed against a different set of type names than the graph")


@dataclass
class WalkerState:
    current: int
    previous: int | None
    occupation: OccupationVector
    rng: random.Random
    guide: _Guide
    alpha: float = 0.8
    mode: str = "spacey"
    debug: bool = False

    @classmethod
    def start(cls, g: TypedGraph, guidance, node: int, *, alpha=0.8, mode="spacey", seed=0,
              rng=None, occupation=None, debug=None) -> "WalkerState":
        debug = DEBUG if debug is None else debug
        guide = guidance if isinstance(guidance, _Guide) else _Guide(guidance, g)
        if mode not in MODES:
            raise WalkError(f"unknown walk mode {mode!r}")
        if mode == "markovian" and guide.kind != "metapath":
            raise WalkError("markovian mode is defined for meta-path guidance only")
        if not 0.0 <= alpha <= 1.0:
            raise WalkError(f"alpha must lie in [0, 1], got {alpha}")
        occ = occupation if occupation is not None else OccupationVector(g)
        occ.visit(node)
        return cls(node, None, occ, rng if rng is not None else random.Random(seed), guide, alpha, mode, debug)

    def advance(self, nxt: int) -> None:
        self.previous = self.current
        self.current = nxt
        self.occupation.visit(nxt)
        if self.debug:
            self.occupation.check()


def _sample(g: TypedGraph, src: int, t: int, rng: random.Random) -> int:
    base = src * g._T1 + t
    lo = g._tp_view[base]
    hi = g._tp_view[base + 1]
    if hi == lo:
        return -1
    return g._ind_view[lo + int(rng.random() * (hi - lo))]


def _choose_type(cands: Sequence[int], occ: OccupationVector, alpha: float, rng: random.Random) -> int:
    k = len(cands)
    if k == 1:
        return cands[0]
    sizes, visits = occ.type_sizes, occ.type_visits
    z = 0
    for t in cands:
        z += sizes[t] + visits[t]
    u = rng.random()
    base = (1.0 - alpha) / k
    scale = alpha / z
    acc = 0.0
    for t in cands:
        acc += base + scale * (sizes[t] + visits[t])
        if u < acc:
            return t
    return cands[-1]


def _type_mask(types) -> int:
    m = 0
    for t in types:
        m |= 1 << t
    return m


def _live(g: TypedGraph, node: int, types) -> tuple[int, ...]:
    """Candidate types that have at least one neighbor at ``node``."""
    if g._mask_types is not None:
        return g._mask_types[g._mask_view[node] & _type_mask(types)]
    dv = g._deg_view
    base = node * g._T
    return tuple([t for t in types if dv[base + t] > 0])


def history_distribution(state: WalkerState) -> dict[int, float]:
    """Distribution of the assumed predecessor Y(n) (keep-or-redraw law)."""
    guide = state.guide
    tc = state.occupation._node_type[state.current]
    preds = guide.preds.get(tc, ())
    occ = state.occupation
    z = sum(occ.type_sizes[t] + occ.type_visits[t] for t in preds)
    out: dict[int, float] = {}
    if state.previous is not None:
        out[state.previous] = 1.0 - state.alpha
    if state.alpha == 0.0:
        return out
    for t in preds:
        for node in occ._type_nodes[t]:
            p = state.alpha * (1 + occ.counts.get(node, 0)) / z
            out[node] = out.get(node, 0.0) + p
    return out


def _check_totality(state: WalkerState) -> None:
    occ = state.occupation
    debug_counters["totality"] += 1
    preds = state.guide.preds.get(occ._node_type[state.current], ())
    z = sum(occ.type_sizes[t] + occ.type_visits[t] for t in preds)
    if occ.N <= DENSE_CHECK_NODES:
        # same per-node masses as history_distribution, without building the dict
        a = state.alpha
        get = occ.counts.get
        vals = [a * (1 + get(node, 0)) / z for t in preds for node in occ._type_nodes[t]] if a else []
        if state.previous is not None:
            vals.append(1.0 - a)
        total = math.fsum(vals)
    else:
        total = (1.0 - state.alpha) + state.alpha * math.fsum(
            (occ.type_sizes[t] + occ.type_visits[t]) / z for t in preds)
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(f"predecessor distribution sums to {total!r}")


def next_type_distribution(state: WalkerState, g: TypedGraph, y: int | None) -> dict[int, float]:
    """Type-choice law given the assumed predecessor ``y`` (``None`` at the first step)."""
    guide = state.guide
    tv = g._type_view
    tc = tv[state.current]
    if guide.kind == "metapath":
        nt = guide.first if y is None else guide.succ[(tv[y], tc)]
        return {nt: 1.0} if g.typed_degree(state.current, nt) > 0 else {}
    if guide.kind == "metagraph":
        cands = guide.first if y is None else guide.succ.get((tv[y], tc), ())
    else:
        cands = guide.adjacent[tc]
    cands = _live(g, state.current, cands)
    if not cands:
        return {}
    occ = state.occupation
    masses = [occ.type_sizes[t] + occ.type_visits[t] for t in cands]
    z = sum(masses)
    k = len(cands)
    return {t: (1.0 - state.alpha) / k + state.alpha * m / z for t, m in zip(cands, masses)}


def step_distribution(state: WalkerState, g: TypedGraph) -> dict[int, float]:
    """Exact next-node distribution of one step from ``state`` (for small-graph checks)."""
    guide = state.guide
    if guide.kind == "metaschema" or state.previous is None:
        ys = {None: 1.0}
    elif state.mode == "markovian":
        ys = {state.previous: 1.0}
    else:
        ys = history_distribution(state)
    out: dict[int, float] = {}
    for y, py in ys.items():
        for t, pt in next_type_distribution(state, g, y).items():
            nbrs = g.adjacency(state.current, t)
            for k in nbrs.tolist():
                out[k] = out.get(k, 0.0) + py * pt / nbrs.shape[0]
    return out


def markovian_step(state: WalkerState, g: TypedGraph) -> int | None:
    guide = state.guide
    if state.previous is None:
        nt = guide.first
    else:
        tv = g._type_view
        key = (tv[state.previous], tv[state.current])
        if key not in guide.succ:
            raise WalkError(f"context {key} is not a window of meta-path {guide.metapath}")
        nt = guide.succ[key]
    nxt = _sample(g, state.current, nt, state.rng)
    if nxt < 0:
        return None
    state.advance(nxt)
    return nxt


def _draw_predecessor(state: WalkerState, preds: Sequence[int]) -> int:
    if state.debug:
        _check_totality(state)
    if state.rng.random() < 1.0 - state.alpha:
        return state.previous
    return state.occupation.sample_restricted(preds, state.rng)


def spacey_metapath_step(state: WalkerState, g: TypedGraph) -> int | None:
    guide = state.guide
    if state.previous is None:
        nt = guide.first
    else:
        tv = g._type_view
        tc = tv[state.current]
        preds = guide.preds.get(tc)
        if not preds:
            raise WalkError(f"type {g.type_names[tc]} has no predecessor in the spacey graph")
        y = _draw_predecessor(state, preds)
        nt = guide.succ[(tv[y], tc)]
    nxt = _sample(g, state.current, nt, state.rng)
    if nxt < 0:
        return None
    state.advance(nxt)
    return nxt


def _live_masked(g: TypedGraph, node: int, mask: int, types) -> tuple[int, ...]:
    if g._mask_types is not None:
        return g._mask_types[g._mask_view[node] & mask]
    return _live(g, node, types)


def spacey_metagraph_step(state: WalkerState, g: TypedGraph) -> int | None:
    guide = state.guide
    cur = state.current
    if state.previous is None:
        cands = _live_masked(g, cur, guide.first_mask, guide.first)
    else:
        tv = g._type_view
        tc = tv[cur]
        preds = guide.preds.get(tc)
        if not preds:
            raise WalkError(f"type {g.type_names[tc]} has no predecessor in the meta-graph")
        y = _draw_predecessor(state, preds)
        key = (tv[y], tc)
        if key not in guide.succ:
            return None
        cands = _live_masked(g, cur, guide.succ_mask[key], guide.succ[key])
    if not cands:
        return None
    nt = _choose_type(cands, state.occupation, state.alpha, state.rng)
    nxt = _sample(g, cur, nt, state.rng)
    state.advance(nxt)
    return nxt


def spacey_metaschema_step(state: WalkerState, g: TypedGraph) -> int | None:
    cur = state.current
    tc = g._type_view[cur]
    cands = _live_masked(g, cur, state.guide.adjacent_mask[tc], state.guide.adjacent[tc])
    if not cands:
        return None
    nt = _choose_type(cands, state.occupation, state.alpha, state.rng)
    nxt = _sample(g, cur, nt, state.rng)
    state.advance(nxt)
    return nxt


def step(state: WalkerState, g: TypedGraph) -> int | None:
    kind = state.guide.kind
    if state.mode == "markovian":
        return markovian_step(state, g)
    if kind == "metapath":
        return spacey_metapath_step(state, g)
    if kind == "metagraph":
        return spacey_metagraph_step(state, g)
    return spacey_metaschema_step(state, g)


@dataclass
class WalkConfig:
    """Corpus generation settings. ``walk_length`` counts steps, so walks hold up to ``walk_length + 1`` nodes."""

    walk_times: int = 20
    walk_length: int = 320
    alpha: float = 0.8
    seed: int = 0
    mode: str = "spacey"
    start_types: frozenset | None = None
    occupation_scope: str = "walk"
    min_walk_nodes: int = 2
    drop_short: bool = True
    n_jobs: int = 1
    debug: bool | None = None

    def validate(self, guidance=None) -> None:
        if self.walk_times < 1:
            raise WalkError("walk_times must be >= 1")
        order = getattr(guidance, "order", 1)
        if self.walk_length < order + 1 and not isinstance(guidance, MetaSchema):
            raise WalkError(f"walk_length must be >= chain order + 1 ({order + 1})")
        if self.walk_length < 1:
            raise WalkError("walk_length must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise WalkError("alpha must lie in [0, 1]")
        if self.mode not in MODES:
            raise WalkError(f"unknown mode {self.mode!r}")
        if self.occupation_scope not in ("walk", "global"):
            raise WalkError("occupation_scope must be 'walk' or 'global'")


def walk_seed(seed: int, start: int, rep: int) -> int:
    """Per-trajectory seed; independent of worker count and scheduling."""
    return ((seed & 0xFFFFFFFFFFFFFFFF) << 64 | (start & 0xFFFFFFFF) << 32 | (rep & 0xFFFFFFFF)) ^ 0x9E3779B97F4A7C15


def start_nodes(g: TypedGraph, guidance, start_types=None) -> np.ndarray:
    if isinstance(guidance, _Guide):
        allowed = guidance.start_types
    else:
        allowed = _Guide(guidance, g).start_types
    if start_types is not None:
        allowed = allowed & frozenset(start_types)
    mask = np.isin(g.node_types, sorted(allowed))
    return np.flatnonzero(mask)


def run_walk(g: TypedGraph, state: WalkerState, walk_length: int) -> tuple[list[int], bool]:
    """Advance ``state`` up to ``walk_length`` steps; returns (nodes, truncated)."""
    nodes = [state.current]
    stepper = {
        ("markovian", "metapath"): markovian_step,
        ("spacey", "metapath"): spacey_metapath_step,
        ("spacey", "metagraph"): spacey_metagraph_step,
        ("spacey", "metaschema"): spacey_metaschema_step,
    }[(state.mode, state.guide.kind)]
    append = nodes.append
    for _ in range(walk_length):
        nxt = stepper(state, g)
        if nxt is None:
            return nodes, True
        append(nxt)
    return nodes, False


@dataclass
class Corpus:
    walks: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.walks)

    def __iter__(self):
        return iter(self.walks)

    def __getitem__(self, i):
        return self.walks[i]

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated tokens and walk offsets (``offsets[i]:offsets[i+1]``)."""
        lengths = np.fromiter((len(w) for w in self.walks), dtype=np.int64, count=len(self.walks))
        offsets = np.zeros(len(self.walks) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        if self.walks:
            tokens = np.concatenate([np.asarray(w, dtype=np.int32) for w in self.walks])
        else:
            tokens = np.empty(0, dtype=np.int32)
        return tokens, offsets

    def write(self, path, g: TypedGraph) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for w in self.walks:
                fh.write(" ".join(g.name_of(int(u)) for u in w))
                fh.write("\n")

    def write_stats(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.stats, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path, g: TypedGraph) -> "Corpus":
        walks = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                toks = line.split()
                if not toks:
                    continue
                try:
                    walks.append(np.array([g.node_id(t) for t in toks], dtype=np.int32))
                except GraphError as exc:
                    raise GraphError(f"{path}:{lineno}: {exc}") from None
        return cls(walks, {"walks": len(walks)})


def _walk_chunk(g: TypedGraph, guidance, cfg: WalkConfig, starts: Sequence[int]):
    guide = _Guide(guidance, g)
    walks, stats = [], {"walks": 0, "truncated": 0, "dropped": 0, "steps": 0}
    shared_occ = shared_rng = schema = None
    if cfg.occupation_scope == "global":
        shared_occ = OccupationVector(g)
        shared_rng = random.Random(walk_seed(cfg.seed, 0, 0))
    rng = random.Random()
    for s in starts:
        s = int(s)
        for rep in range(cfg.walk_times):
            if shared_occ is None:
                # reseeding one generator is cheaper than constructing a new one
                rng.seed(walk_seed(cfg.seed, s, rep))
                state = WalkerState.start(g, guide, s, alpha=cfg.alpha, mode=cfg.mode, rng=rng, debug=cfg.debug)
            else:
                state = WalkerState.start(g, guide, s, alpha=cfg.alpha, mode=cfg.mode, rng=shared_rng,
                                          occupation=shared_occ, debug=cfg.debug)
            nodes, truncated = run_walk(g, state, cfg.walk_length)
            if state.debug:
                if schema is None:
                    schema = derive_schema(g)
                _check_walk(g, guide, schema, nodes, cfg.mode)
            stats["steps"] += len(nodes) - 1
            if truncated:
                stats["truncated"] += 1
                if cfg.drop_short and len(nodes) < max(cfg.min_walk_nodes, 2):
                    stats["dropped"] += 1
                    continue
            walks.append(np.array(nodes, dtype=np.int32))
            stats["walks"] += 1
    return walks, stats


def _check_walk(g: TypedGraph, guide: _Guide, schema: MetaSchema, nodes: Sequence[int], mode: str) -> None:
    """Assert that a finished walk obeys its guidance (debug mode)."""
    debug_counters["walks"] += 1
    types = [int(g.node_types[u]) for u in nodes]
    ok = respects_schema(nodes, g, schema)
    if ok and guide.kind == "metagraph" and len(types) > 1:
        # a redrawn predecessor may pick any successor offered at the current type
        offered = {}
        for (_, b), succ in guide.succ.items():
            offered.setdefault(b, set()).update(succ)
        ok = types[1] in guide.first and all(c in offered.get(b, ()) for b, c in zip(types[1:], types[2:]))
    elif ok and guide.kind == "metapath":
        ok = (is_path_instance(types, guide.metapath) if mode == "markovian"
              else is_spacey_walk(types, guide.spacey_graph, guide.first))
    if not ok:
        names = [g.name_of(int(u)) for u in nodes[:12]]
        raise AssertionError(f"walk violates its {mode} {guide.kind} guidance: {' '.join(names)} ...")


def generate_corpus(g: TypedGraph, guidance, cfg: WalkConfig) -> Corpus:
    """Run ``cfg.walk_times`` walks from every eligible start node.

    Output order is canonical (start node, then repetition) and identical for
    any ``n_jobs``; the global occupation scope always runs serially.
    """
    cfg.validate(guidance)
    if isinstance(guidance, MetaSchema) and guidance.type_names != g.type_names:
        raise WalkError("schema type names differ from the graph's")
    starts = start_nodes(g, guidance, cfg.start_types)
    if starts.size == 0:
        return Corpus([], {"walks": 0, "truncated": 0, "dropped": 0, "steps": 0, "start_nodes": 0})
    n_jobs = cfg.n_jobs if cfg.occupation_scope == "walk" else 1
    if n_jobs == 1:
        parts = [_walk_chunk(g, guidance, cfg, starts)]
    else:
        from joblib import Parallel, delayed

        chunks = np.array_split(starts, max(1, min(len(starts), 4 * abs(n_jobs))))
        parts = Parallel(n_jobs=n_jobs)(delayed(_walk_chunk)(g, guidance, cfg, c) for c in chunks)
    walks = []
    stats = {"walks": 0, "truncated": 0, "dropped": 0, "steps": 0}
    for w, st in parts:
        walks.extend(w)
        for k in stats:
            stats[k] += st[k]
    stats["start_nodes"] = int(starts.size)
    return Corpus(walks, stats)


def simulate(g: TypedGraph, guidance, steps: int, *, alpha=0.8, mode="spacey", seed=0,
             start: int | None = None, debug=None) -> np.ndarray:
    """One long trajectory of ``steps`` steps (``steps + 1`` nodes); dead ends raise."""
    guide = _Guide(guidance, g)
    if start is None:
        starts = start_nodes(g, guide)
        if starts.size == 0:
            raise WalkError("no eligible start node")
        start = int(starts[0])
    state = WalkerState.start(g, guide, start, alpha=alpha, mode=mode, seed=seed, debug=debug)
    nodes, truncated = run_walk(g, state, steps)
    if truncated:
        raise WalkError(f"trajectory hit a dead end after {len(nodes) - 1} steps at node {g.name_of(nodes[-1])}")
    return np.array(nodes, dtype=np.int64)


def is_path_instance(types: Sequence[int], mp: MetaPath) -> bool:
    """Type sequence follows the infinite repetition of ``mp`` from its first type."""
    cyc = mp.type_sequence[:-1]
    return all(t == cyc[i % len(cyc)] for i, t in enumerate(types))


def is_spacey_walk(types: Sequence[int], sg: SpaceyGraph, first: int | None = None) -> bool:
    """Every step is a transition permitted by the spacey graph.

    The first step (no predecessor) must go to ``first`` when given; later
    steps ``(a, b, c)`` need ``c`` to be a successor of ``b`` under some valid
    predecessor of ``b``.
    """
    if len(types) < 2:
        return True
    if first is not None and types[1] != first:
        return False
    for a, b, c in zip(types, types[1:], types[2:]):
        if (a, b) not in sg.context_successors:
            return False
        if c not in sg.successors_of(b):
            return False
    return True


def respects_schema(nodes: Sequence[int], g: TypedGraph, schema: MetaSchema | None = None) -> bool:
    schema = schema or derive_schema(g)
    for u, v in zip(nodes, nodes[1:]):
        if not g.has_edge(int(u), int(v)):
            return False
        if not schema.has_edge(int(g.node_types[u]), int(g.node_types[v])):
            return False
    return True
