"""Meta-path and meta-graph parsing, Markov-order detection and folding.

Meta-paths are written ``A-P-V-P-A`` (or ``APVPA`` when every type name is a
single character). They must be cyclic: first type equal to last.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .graph import GraphError, MetaSchema


class MetaPathError(GraphError):
    pass


def chain_order(type_sequence: Sequence) -> int:
    """Smallest k whose cyclic length-k windows each determine a unique successor.

    ``type_sequence`` is the full cyclic sequence ``A_1 .. A_{L+1}`` with
    ``A_1 == A_{L+1}``.
    """
    cyc = list(type_sequence[:-1])
    length = len(cyc)
    if length < 1 or type_sequence[0] != type_sequence[-1]:
        raise MetaPathError("chain_order needs a cyclic type sequence (first type == last type)")
    for k in range(1, length + 1):
        if _windows(cyc, k) is not None:
            return k
    raise MetaPathError("meta-path not realizable as a finite-order chain")


def _windows(cyc: list, k: int) -> dict | None:
    length = len(cyc)
    out: dict = {}
    for pos in range(length):
        key = tuple(cyc[(pos + i) % length] for i in range(k))
        nxt = cyc[(pos + k) % length]
        if out.setdefault(key, nxt) != nxt:
            return None
    return out


@dataclass(frozen=True)
class MetaPath:
    """Parsed, schema-validated cyclic meta-path.

    ``windows`` maps each length-``order`` tuple of type ids to its unique
    successor; ``pair_windows`` is the same chain expressed with length-2
    contexts (identical to ``windows`` when ``order == 2``).
    """

    type_sequence: tuple[int, ...]
    type_names: tuple[str, ...]
    order: int
    windows: Mapping[tuple[int, ...], int]
    pair_windows: Mapping[tuple[int, int], int]

    @property
    def length(self) -> int:
        return len(self.type_sequence) - 1

    @property
    def source_type(self) -> int:
        return self.type_sequence[0]

    def __str__(self):
        return "-".join(self.type_names[t] for t in self.type_sequence)

    def replay(self, steps: int | None = None) -> list[int]:
        """Regenerate the type sequence from the windows, starting at ``A_1..A_k``."""
        steps = self.length if steps is None else steps
        seq = list(self.type_sequence[: self.order])
        while len(seq) < steps + 1:
            seq.append(self.windows[tuple(seq[-self.order:])])
        return seq[: steps + 1]


def factorize(mp: MetaPath) -> dict[tuple[int, ...], int]:
    """Cyclic windows of length ``mp.order`` with their unique successors."""
    out = _windows(list(mp.type_sequence[:-1]), mp.order)
    if out is None:
        raise MetaPathError(f"meta-path {mp} has ambiguous windows at order {mp.order}")
    return out


def _tokenize(spec: str, schema: MetaSchema) -> list[str]:
    spec = spec.strip()
    if not spec:
        raise MetaPathError("empty meta-path")
    if "-" in spec:
        names = [s.strip() for s in spec.split("-")]
        if any(not s for s in names):
            raise MetaPathError(f"malformed meta-path {spec!r}: empty type between dashes")
        return names
    if spec in schema.type_names:
        return [spec]
    if all(len(t) == 1 for t in schema.type_names):
        return list(spec)
    raise MetaPathError(f"cannot split meta-path {spec!r}; separate type names with '-'")


def parse_metapath(spec: str, schema: MetaSchema) -> MetaPath:
    names = _tokenize(spec, schema)
    if len(names) < 2:
        raise MetaPathError(f"meta-path {spec!r} needs at least two types")
    seq = []
    for name in names:
        if name not in schema.type_names:
            raise MetaPathError(f"unknown type name {name!r} in meta-path {spec!r}")
        seq.append(schema.type_names.index(name))
    for a, b in zip(seq, seq[1:]):
        if not schema.has_edge(a, b):
            raise MetaPathError(
                f"meta-path {spec!r} steps {schema.type_names[a]}-{schema.type_names[b]}, "
                "which is not an edge of the schema"
            )
    if seq[0] != seq[-1]:
        back = "-".join(names + names[-2::-1][: len(names) - 1])
        raise MetaPathError(
            f"meta-path {spec!r} is not cyclic (starts with {names[0]}, ends with {names[-1]}); "
            f"append the reverse path to symmetrize it, e.g. {back!r}"
        )
    k = chain_order(seq)
    cyc = seq[:-1]
    windows = _windows(cyc, k)
    pair = {}
    for pos in range(len(cyc)):
        pair[(cyc[pos], cyc[(pos + 1) % len(cyc)])] = cyc[(pos + 2) % len(cyc)]
    return MetaPath(tuple(seq), schema.type_names, k, windows, pair if k <= 2 else {})


@dataclass(frozen=True)
class SpaceyGraph:
    """Type-level folding of a meta-path: valid (predecessor, current) -> next."""

    context_successors: Mapping[tuple[int, int], int]
    predecessor_types: Mapping[int, frozenset[int]]

    def successors_of(self, current: int) -> frozenset[int]:
        return frozenset(
            self.context_successors[(p, current)] for p in self.predecessor_types.get(current, ())
        )


def build_spacey_graph(mp: MetaPath) -> SpaceyGraph:
    if mp.order > 2:
        raise MetaPathError(
            f"unsupported order {mp.order} for meta-path {mp}: only first- and second-order chains are walkable"
        )
    succ = dict(mp.pair_windows)
    preds: dict[int, set[int]] = {}
    for p, c in succ:
        preds.setdefault(c, set()).add(p)
    return SpaceyGraph(succ, {c: frozenset(s) for c, s in preds.items()})


@dataclass(frozen=True)
class MetaGraph:
    """Union of cyclic meta-paths sharing one source (= target) type."""

    member_paths: tuple[MetaPath, ...]
    successor_types: Mapping[tuple[int, int], frozenset[int]]
    predecessor_types: Mapping[int, frozenset[int]]

    @property
    def source_type(self) -> int:
        return self.member_paths[0].source_type

    @property
    def first_step_types(self) -> frozenset[int]:
        return frozenset(m.type_sequence[1] for m in self.member_paths)

    def __str__(self):
        return "{" + ", ".join(str(m) for m in self.member_paths) + "}"


def metagraph_from_paths(paths: Sequence[MetaPath]) -> MetaGraph:
    if not paths:
        raise MetaPathError("a meta-graph needs at least one member meta-path")
    src = paths[0].source_type
    for m in paths:
        if m.source_type != src:
            raise MetaPathError(
                f"meta-graph members must share a source type: {paths[0]} starts at "
                f"{paths[0].type_names[src]}, {m} starts at {m.type_names[m.source_type]}"
            )
        build_spacey_graph(m)  # order check
    succ: dict[tuple[int, int], set[int]] = {}
    for m in paths:
        for key, nxt in m.pair_windows.items():
            succ.setdefault(key, set()).add(nxt)
    preds: dict[int, set[int]] = {}
    for p, c in succ:
        preds.setdefault(c, set()).add(p)
    return MetaGraph(
        tuple(paths),
        {k: frozenset(v) for k, v in succ.items()},
        {c: frozenset(s) for c, s in preds.items()},
    )


def parse_metagraph(specs: Sequence[str], schema: MetaSchema) -> MetaGraph:
    if not specs:
        raise MetaPathError("a meta-graph needs at least one member meta-path")
    return metagraph_from_paths([parse_metapath(s, schema) for s in specs])


def read_metagraph_file(path, schema: MetaSchema) -> MetaGraph:
    """One meta-path per line; blank lines and ``#`` comments ignored."""
    specs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                specs.append(line)
    return parse_metagraph(specs, schema)
