import pickle
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetspacey.graph import (
    GraphError,
    GraphFormatError,
    MetaSchema,
    NoNeighborError,
    TypedGraph,
    derive_schema,
    generate_synthetic,
    load_graph,
    sample_typed_neighbor,
    save_graph,
    transition_prob,
)


def test_load_toy(toy_files):
    g = load_graph(*toy_files)
    assert g.node_count == 5
    assert g.edge_count == 5
    p1, a = g.node_id("p1"), g.type_id("A")
    assert g.typed_degree(p1, a) == 2
    assert [g.name_of(u) for u in g.adjacency(g.node_id("v1"), g.type_id("P"))] == ["p1", "p2"]


def test_load_empty_edges(tmp_path):
    (tmp_path / "n").write_text("x\tA\ny\tB\nz\tA\n")
    (tmp_path / "e").write_text("")
    g = load_graph(tmp_path / "n", tmp_path / "e")
    assert g.node_count == 3
    assert not g.typed_degrees.any()


def test_load_unknown_node(tmp_path, toy_files):
    nodes, _ = toy_files
    (tmp_path / "bad").write_text("a1\tp1\na1\tx9\n")
    with pytest.raises(GraphFormatError, match="unknown node") as info:
        load_graph(nodes, tmp_path / "bad")
    assert info.value.lineno == 2


def test_load_errors(tmp_path, toy_files):
    nodes, edges = toy_files
    (tmp_path / "twice").write_text("a\tA\na\tB\n")
    with pytest.raises(GraphFormatError, match="two types"):
        load_graph(tmp_path / "twice", edges)
    (tmp_path / "bad").write_text("a\tA\tjunk\n")
    with pytest.raises(GraphFormatError, match="line 1|:1:"):
        load_graph(tmp_path / "bad", edges)
    with pytest.raises(FileNotFoundError):
        load_graph(tmp_path / "missing", edges)


def test_load_dedup_comments_relations(tmp_path, toy_files):
    nodes, _ = toy_files
    (tmp_path / "e").write_text("# header\na1\tp1\twrites\np1\ta1\na1\tp1 # again\n")
    g = load_graph(nodes, tmp_path / "e")
    assert g.edge_count == 1
    assert g.has_edge(g.node_id("p1"), g.node_id("a1"))


def test_roundtrip(tmp_path, toy):
    save_graph(toy, tmp_path / "n", tmp_path / "e")
    g = load_graph(tmp_path / "n", tmp_path / "e")
    assert g == toy
    save_graph(g, tmp_path / "n2", tmp_path / "e2")
    assert (tmp_path / "e").read_bytes() == (tmp_path / "e2").read_bytes()


def test_pickle(toy):
    g = pickle.loads(pickle.dumps(toy))
    assert g == toy
    assert sample_typed_neighbor(g, 2, 2, random.Random(0)) == 4


def test_derive_schema(toy):
    s = derive_schema(toy)
    assert set(s.edge_names()) == {("A", "P"), ("P", "V")}
    assert derive_schema(TypedGraph([0], ["A"])).type_edges == frozenset()
    dblp = MetaSchema.parse("A-P,P-C,P-T")
    g = generate_synthetic(dblp, None, 200, 6, seed=0)
    assert len(derive_schema(g).type_edges) == 3


def test_transition_prob(toy):
    a2, p1, v1 = 1, 2, 4
    assert transition_prob(toy, a2, 1, p1) == 0.5
    assert transition_prob(toy, p1, 2, v1) == 1.0
    with pytest.raises(NoNeighborError, match="no neighbor of required type"):
        transition_prob(toy, v1, 0, 0)


def test_sample_typed_neighbor_frequency(toy):
    rng = random.Random(7)
    draws = [sample_typed_neighbor(toy, 1, 1, rng) for _ in range(100_000)]
    assert 0.49 <= draws.count(2) / len(draws) <= 0.51
    assert {sample_typed_neighbor(toy, 2, 2, rng) for _ in range(50)} == {4}
    with pytest.raises(NoNeighborError):
        sample_typed_neighbor(toy, 4, 0, rng)


def test_sample_deterministic(toy):
    a = [sample_typed_neighbor(toy, 4, 1, random.Random(3)) for _ in range(5)]
    r1, r2 = random.Random(11), random.Random(11)
    assert [sample_typed_neighbor(toy, 4, 1, r1) for _ in range(200)] == [
        sample_typed_neighbor(toy, 4, 1, r2) for _ in range(200)]
    assert len(set(a)) == 1


def test_constructor_validation():
    with pytest.raises(GraphError, match="self-loop"):
        TypedGraph([0, 0], ["A"], [0], [0])
    with pytest.raises(GraphError, match="unknown node"):
        TypedGraph([0, 0], ["A"], [0], [5])


def test_synthetic_degree_and_determinism():
    dblp = MetaSchema.parse("A-P,P-C,P-T")
    g = generate_synthetic(dblp, None, 1000, 10, seed=4)
    assert 9000 <= 2 * g.edge_count <= 11000
    h = generate_synthetic(dblp, None, 1000, 10, seed=4)
    assert np.array_equal(g.edges(), h.edges())
    for u, v in g.edges()[:200]:
        assert dblp.has_edge(int(g.node_types[u]), int(g.node_types[v]))


def test_synthetic_one_node_per_type():
    dblp = MetaSchema.parse("A-P,P-C,P-T")
    g = generate_synthetic(dblp, None, 4, 10, seed=0)
    assert g.node_count == 4
    for a, b in dblp.type_edges:
        assert g.edges_between(a, b).shape[0] <= 1


def test_synthetic_errors_and_warnings(caplog):
    with pytest.raises(GraphError, match="no type edges"):
        generate_synthetic(MetaSchema(("A",), frozenset()), None, 10, 2, 0)
    with pytest.raises(GraphError, match="sum to 1"):
        generate_synthetic(MetaSchema.parse("A-P"), {"A": 0.3, "P": 0.3}, 10, 2, 0)
    sch = MetaSchema.parse("A-P,P-V")
    with caplog.at_level("WARNING"):
        g = generate_synthetic(sch, {"A": 0.5, "P": 0.5, "V": 0.0}, 100, 4, 0)
    assert "empty type" in caplog.text
    assert g.typed_degrees[:, sch.type_id("V")].sum() == 0


def test_planted_communities():
    sch = MetaSchema.parse("A-P,P-V")
    g = generate_synthetic(sch, None, 600, 8, seed=1, n_communities=3, p_in=0.9)
    e = g.edges()
    same = np.mean(g.communities[e[:, 0]] == g.communities[e[:, 1]])
    assert same > 0.8


@st.composite
def random_graph(draw):
    n = draw(st.integers(1, 25))
    t = draw(st.integers(1, 4))
    types = draw(st.lists(st.integers(0, t - 1), min_size=n, max_size=n))
    m = draw(st.integers(0, 60))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=m, max_size=m))
    pairs = [(u, v) for u, v in pairs if u != v]
    src = [u for u, _ in pairs]
    dst = [v for _, v in pairs]
    return TypedGraph(types, [f"T{i}" for i in range(t)], src, dst), pairs


@settings(max_examples=60, deadline=None)
@given(random_graph())
def test_storage_invariants(data):
    g, pairs = data
    expected = {(min(u, v), max(u, v)) for u, v in pairs}
    assert {tuple(e) for e in g.edges().tolist()} == expected
    for u in range(g.node_count):
        for a in range(g.type_count):
            seg = g.adjacency(u, a)
            assert len(seg) == g.typed_degree(u, a)
            assert np.all(np.diff(seg) > 0)
            assert np.all(g.node_types[seg] == a)
            for v in seg.tolist():
                assert u in g.adjacency(v, int(g.node_types[u])).tolist()
            if len(seg):
                total = sum(Fraction(1, len(seg)) for _ in seg)
                assert total == 1
                assert abs(sum(transition_prob(g, u, a, v) for v in seg.tolist()) - 1.0) <= 1e-12
