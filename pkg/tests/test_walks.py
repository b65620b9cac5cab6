import json
import random
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from hetspacey.graph import MetaSchema, TypedGraph, derive_schema, generate_synthetic
from hetspacey.metalang import MetaPath, build_spacey_graph, parse_metagraph, parse_metapath
from hetspacey.walks import (
    Corpus,
    OccupationVector,
    WalkConfig,
    WalkError,
    WalkerState,
    _Guide,
    generate_corpus,
    history_distribution,
    is_path_instance,
    is_spacey_walk,
    next_type_distribution,
    respects_schema,
    run_walk,
    simulate,
    step_distribution,
    walk_seed,
)

A, P, V = 0, 1, 2
a1, a2, p1, p2, v1 = range(5)


def fresh_state(g, guidance, current, previous, alpha, mode="spacey", visits=()):
    """State with an occupation holding exactly ``visits`` (none: n = 0)."""
    occ = OccupationVector(g)
    for u in visits:
        occ.visit(u)
    return WalkerState(current, previous, occ, random.Random(0), _Guide(guidance, g), alpha, mode)


def type_string(g, nodes):
    return "".join(g.type_names[g.node_types[u]] for u in nodes)


def test_occupation_formula(toy):
    occ = OccupationVector(toy)
    assert occ.weight(a1) == pytest.approx(0.2)
    for u in (a1, p1, a1):
        occ.visit(u)
    assert occ.weight(a1) == pytest.approx(3 / 8)
    assert occ.weight(v1) == pytest.approx(1 / 8)
    assert occ.type_mass(A) == pytest.approx(4 / 8)
    assert sum(occ.type_mass(t) for t in range(3)) == pytest.approx(1.0, abs=1e-15)
    assert occ.dense().sum() == pytest.approx(1.0, abs=1e-15)


def test_sample_restricted_matches_dense(toy):
    occ = OccupationVector(toy)
    for u in (a1, a1, a1, v1, p2):
        occ.visit(u)
    w = occ.dense()
    allowed = np.isin(toy.node_types, [A, V])
    expected = np.where(allowed, w, 0.0) / w[allowed].sum()
    rng = random.Random(5)
    n = 200_000
    counts = np.bincount([occ.sample_restricted((A, V), rng) for _ in range(n)], minlength=5)
    assert counts[~allowed].sum() == 0
    assert chisquare(counts[allowed], expected[allowed] * n).pvalue > 0.001


def test_markovian_step_rows(toy, apvpa):
    s = fresh_state(toy, apvpa, p1, a1, 0.0, "markovian")
    assert step_distribution(s, toy) == {v1: 1.0}
    s = fresh_state(toy, apvpa, v1, p1, 0.0, "markovian")
    assert step_distribution(s, toy) == {p1: 0.5, p2: 0.5}


def test_markovian_type_pattern(toy, apvpa):
    path = simulate(toy, apvpa, 100_000, mode="markovian", seed=3)
    assert re.fullmatch("(APVP)*A?P?V?", type_string(toy, path))
    assert is_path_instance(toy.node_types[path].tolist(), apvpa)


def test_keep_probability(toy, apvpa):
    s = fresh_state(toy, apvpa, p1, a1, 0.8)
    hist = history_distribution(s)
    assert hist[a1] == pytest.approx(0.2 + 0.8 / 3)
    assert hist[a2] == pytest.approx(0.8 / 3)
    assert hist[v1] == pytest.approx(0.8 / 3)
    assert sum(hist.values()) == pytest.approx(1.0, abs=1e-15)


def test_alpha_zero_equals_markovian_distribution(toy, apvpa):
    path = simulate(toy, apvpa, 50, mode="markovian", seed=1).tolist()
    for i in range(1, len(path) - 1):
        visits = path[: i + 1]
        sp = fresh_state(toy, apvpa, path[i], path[i - 1], 0.0, "spacey", visits)
        mk = fresh_state(toy, apvpa, path[i], path[i - 1], 0.0, "markovian", visits)
        assert step_distribution(sp, toy) == pytest.approx(step_distribution(mk, toy), abs=1e-15)


def test_metagraph_type_choice(toy):
    mg = parse_metagraph(["APA", "APVPA"], derive_schema(toy))
    s = fresh_state(toy, mg, p1, a1, 0.8)
    dist = next_type_distribution(s, toy, a1)
    assert dist[A] == pytest.approx(0.2 * 0.5 + 0.8 * 2 / 3)
    assert dist[V] == pytest.approx(0.2 * 0.5 + 0.8 * 1 / 3)
    s0 = fresh_state(toy, mg, p1, a1, 0.0)
    assert next_type_distribution(s0, toy, a1) == {A: 0.5, V: 0.5}


def test_single_member_metagraph_matches_metapath(toy, apvpa):
    mg = parse_metagraph(["APVPA"], derive_schema(toy))
    visits = [a2, p2, v1, p1, a1, p1]
    for cur, prev in [(p1, a1), (v1, p2), (p2, v1), (a2, p1)]:
        x = step_distribution(fresh_state(toy, mg, cur, prev, 0.8, visits=visits), toy)
        y = step_distribution(fresh_state(toy, apvpa, cur, prev, 0.8, visits=visits), toy)
        assert x == pytest.approx(y, abs=1e-15)


def test_metaschema_type_choice(toy):
    sch = derive_schema(toy)
    assert next_type_distribution(fresh_state(toy, sch, p1, None, 0.0), toy, None) == {A: 0.5, V: 0.5}
    # type masses A 5/10, P 4/10, V 1/10
    s = fresh_state(toy, sch, p1, None, 1.0, visits=[a1, a1, a1, p1, p2])
    assert s.occupation.type_mass(A) == pytest.approx(0.5)
    assert s.occupation.type_mass(V) == pytest.approx(0.1)
    assert next_type_distribution(s, toy, None)[A] == pytest.approx(5 / 6)
    for alpha in (0.0, 0.3, 1.0):
        assert next_type_distribution(fresh_state(toy, sch, a1, None, alpha), toy, None) == {P: 1.0}


def test_corpus_toy_single_walk(toy, apvpa):
    cfg = WalkConfig(walk_times=1, walk_length=8, mode="markovian", seed=0)
    c = generate_corpus(toy, apvpa, cfg)
    first = [w for w in c.walks if w[0] == a1][0]
    assert len(first) == 9
    assert type_string(toy, first) == "APVPAPVPA"
    assert c.stats["start_nodes"] == 2


def test_corpus_bounds_and_validity():
    sch = MetaSchema.parse("A-P,P-V")
    g = generate_synthetic(sch, None, 120, 6, seed=2)
    mp = parse_metapath("APVPA", derive_schema(g))
    sg = build_spacey_graph(mp)
    for mode in ("markovian", "spacey"):
        c = generate_corpus(g, mp, WalkConfig(walk_times=20, walk_length=320, mode=mode, seed=1))
        n_start = int((g.node_types == A).sum())
        assert len(c) <= 20 * n_start
        assert all(len(w) <= 321 for w in c)
        for w in c:
            types = g.node_types[w].tolist()
            assert respects_schema(w, g)
            if mode == "markovian":
                assert is_path_instance(types, mp)
            else:
                assert is_spacey_walk(types, sg, first=P)


def test_empty_graph_empty_corpus():
    g = TypedGraph(np.empty(0, dtype=np.int32), ["A", "P"])
    c = generate_corpus(g, MetaSchema(("A", "P"), frozenset({(0, 1)})), WalkConfig())
    assert len(c) == 0 and c.stats["walks"] == 0


def test_determinism_across_workers():
    sch = MetaSchema.parse("A-P,P-V")
    g = generate_synthetic(sch, None, 200, 6, seed=3)
    cfg = WalkConfig(walk_times=3, walk_length=30, seed=9, mode="spacey")
    one = generate_corpus(g, derive_schema(g), cfg)
    cfg.n_jobs = 2
    two = generate_corpus(g, derive_schema(g), cfg)
    assert len(one) == len(two)
    assert all(np.array_equal(x, y) for x, y in zip(one, two))
    assert one.stats == two.stats


def test_walk_seed_distinct():
    seeds = {walk_seed(0, s, r) for s in range(50) for r in range(20)}
    assert len(seeds) == 1000
    assert walk_seed(1, 0, 0) != walk_seed(0, 0, 0)


def test_dead_end_truncation():
    # p1 has no venue: the A-P-V-P-A walk from a1 dies at p1
    g = TypedGraph([A, A, P, P, V], ["A", "P", "V"], [0, 1, 3], [2, 3, 4])
    mp = parse_metapath("APVPA", MetaSchema.parse("A-P,P-V"))
    c = generate_corpus(g, mp, WalkConfig(walk_times=1, walk_length=8, mode="markovian", min_walk_nodes=2))
    assert c.stats["truncated"] == 1
    assert [len(w) for w in c] == [2, 9]
    c = generate_corpus(g, mp, WalkConfig(walk_times=1, walk_length=8, mode="markovian", min_walk_nodes=3))
    assert c.stats["dropped"] == 1 and [len(w) for w in c] == [9]
    with pytest.raises(WalkError, match="dead end"):
        simulate(g, mp, 10, mode="markovian", start=0)


def test_config_validation(apvpa):
    with pytest.raises(WalkError):
        WalkConfig(walk_times=0).validate()
    with pytest.raises(WalkError, match="chain order"):
        WalkConfig(walk_length=2).validate(apvpa)
    with pytest.raises(WalkError):
        WalkConfig(alpha=1.5).validate()
    with pytest.raises(WalkError):
        WalkConfig(occupation_scope="shared").validate()


def test_markovian_needs_metapath(toy):
    with pytest.raises(WalkError, match="meta-path guidance only"):
        WalkerState.start(toy, derive_schema(toy), a1, mode="markovian")


def test_corpus_io(tmp_path, toy, apvpa):
    c = generate_corpus(toy, apvpa, WalkConfig(walk_times=2, walk_length=6, seed=4))
    c.write(tmp_path / "walks.txt", toy)
    c.write_stats(tmp_path / "stats.json")
    back = Corpus.read(tmp_path / "walks.txt", toy)
    assert all(np.array_equal(x, y) for x, y in zip(c, back))
    assert json.loads((tmp_path / "stats.json").read_text())["walks"] == len(c)
    assert (tmp_path / "walks.txt").read_text().splitlines()[0].startswith("a1 p1 v1")


def test_global_occupation_scope(toy, apvpa):
    cfg = WalkConfig(walk_times=3, walk_length=10, seed=2, occupation_scope="global")
    c = generate_corpus(toy, apvpa, cfg)
    assert len(c) == 6


def test_debug_checks_active(toy, apvpa):
    from hetspacey import walks

    before = dict(walks.debug_counters)
    simulate(toy, apvpa, 200, alpha=0.8, seed=0)
    assert walks.debug_counters["occupation"] >= before["occupation"] + 200
    assert walks.debug_counters["totality"] > before["totality"]
    generate_corpus(toy, apvpa, WalkConfig(walk_times=2, walk_length=8))
    assert walks.debug_counters["walks"] == before["walks"] + 4


def test_walk_check_rejects_violations(toy, apvpa):
    from hetspacey.walks import _check_walk

    sch = derive_schema(toy)
    guide = _Guide(apvpa, toy)
    _check_walk(toy, guide, sch, [a1, p1, v1, p2, a2], "markovian")
    # a2 -> p1 -> a1 turns back before reaching a venue
    with pytest.raises(AssertionError, match="violates"):
        _check_walk(toy, guide, sch, [a2, p1, a1], "markovian")
    # the spacey reading allows it (the redrawn predecessor of p1 can be a venue)
    _check_walk(toy, guide, sch, [a2, p1, a1], "spacey")
    with pytest.raises(AssertionError, match="violates"):
        _check_walk(toy, guide, sch, [a1, p2], "spacey")  # not an edge
    mg = _Guide(parse_metagraph(["APA"], sch), toy)
    with pytest.raises(AssertionError, match="violates"):
        _check_walk(toy, mg, sch, [a1, p1, v1], "spacey")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.integers(1, 60))
def test_step_distribution_is_a_distribution(seed, alpha, steps):
    g = generate_synthetic(MetaSchema.parse("A-P,P-V"), None, 20, 4, seed % 50)
    sch = derive_schema(g)
    if sch.type_edges != MetaSchema.parse("A-P,P-V").type_edges:
        return
    for guidance in (parse_metapath("APVPA", sch), parse_metagraph(["APA", "APVPA"], sch), sch):
        starts = np.flatnonzero(g.node_types == A)
        state = WalkerState.start(g, guidance, int(starts[seed % len(starts)]), alpha=alpha, seed=seed)
        nodes, truncated = run_walk(g, state, steps)
        dist = step_distribution(state, g)
        total = sum(dist.values())
        # missing mass is the probability that the step halts at a dead end
        assert -1e-12 <= total <= 1.0 + 1e-12
        assert all(g.has_edge(state.current, k) for k in dist)
        if guidance is sch and g.degree(state.current) > 0:
            assert total == pytest.approx(1.0, abs=1e-12)
        if isinstance(guidance, MetaPath) and state.previous is not None:
            needed = build_spacey_graph(guidance).successors_of(int(g.node_types[state.current]))
            if all(g.typed_degree(state.current, t) > 0 for t in needed):
                assert total == pytest.approx(1.0, abs=1e-12)
