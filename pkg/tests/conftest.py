import os

# every walker built during the test session runs its invariant checks
os.environ.setdefault("HETSPACEY_DEBUG", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from hetspacey.graph import MetaSchema, TypedGraph, derive_schema, generate_synthetic  # noqa: E402
from hetspacey.metalang import parse_metapath  # noqa: E402
from hetspacey.oracle import OracleError, build_hypermatrix, pair_chain_stationary  # noqa: E402

# criterion number -> (description, passed)
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}

TOY_NODES = "a1\tA\na2\tA\np1\tP\np2\tP\nv1\tV\n"
TOY_EDGES = "a1\tp1\na2\tp1\na2\tp2\np1\tv1\np2\tv1\n"


def make_toy():
    names = ["a1", "a2", "p1", "p2", "v1"]
    return TypedGraph([0, 0, 1, 1, 2], ["A", "P", "V"], [0, 1, 1, 2, 3], [2, 2, 3, 4, 4], names)


@pytest.fixture
def toy():
    return make_toy()


@pytest.fixture
def toy_files(tmp_path):
    nodes = tmp_path / "toy.nodes"
    edges = tmp_path / "toy.edges"
    nodes.write_text(TOY_NODES)
    edges.write_text(TOY_EDGES)
    return nodes, edges


@pytest.fixture
def scholar():
    return MetaSchema.parse("A-P,P-V")


@pytest.fixture
def apvpa(toy):
    return parse_metapath("APVPA", derive_schema(toy))


def walkable_graph(n_nodes, avg_degree, first_seed=0, schema="A-P,P-V", path="APVPA", proportions=None):
    """First generated graph on which ``path`` never dead-ends and its pair chain is irreducible."""
    sch = MetaSchema.parse(schema)
    for seed in range(first_seed, first_seed + 500):
        g = generate_synthetic(sch, proportions, n_nodes, avg_degree, seed)
        if derive_schema(g).type_edges != sch.type_edges:
            continue
        mp = parse_metapath(path, derive_schema(g))
        needs_ok = True
        for (p, c), a in mp.pair_windows.items():
            if np.any(g.typed_degrees[g.nodes_of_type(c), a] == 0):
                needs_ok = False
                break
        if not needs_ok:
            continue
        try:
            pair_chain_stationary(build_hypermatrix(g, mp))
        except OracleError:
            continue
        return g, mp, seed
    raise RuntimeError("no walkable graph found")


def record(criterion: int, description: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[criterion] = (description, passed, detail)


def pytest_terminal_summary(terminalreporter):
    from hetspacey.walks import debug_counters

    terminalreporter.section("walker invariant checks")
    terminalreporter.write_line(
        "occupation sums checked: {occupation}  predecessor totality checked: {totality}  "
        "walks validated against guidance: {walks}".format(**debug_counters))
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        desc, ok, detail = ACCEPTANCE_RESULTS[k]
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {desc}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
