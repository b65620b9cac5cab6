import numpy as np
import pytest
from sklearn.base import clone

from hetspacey import SpaceyEmbedding
from hetspacey.graph import GraphError, MetaSchema, generate_synthetic
from hetspacey.metalang import MetaGraph, MetaPath
from hetspacey.estimator import resolve_guidance


@pytest.fixture(scope="module")
def small():
    return generate_synthetic(MetaSchema.parse("A-P,P-V"), None, 120, 5, seed=0, n_communities=2)


def fast(**kw):
    params = dict(walk_times=2, walk_length=20, dimension=8, window=3)
    params.update(kw)
    return SpaceyEmbedding(**params)


def test_params_and_clone():
    est = SpaceyEmbedding(alpha=0.5, dimension=16)
    params = est.get_params()
    assert params["alpha"] == 0.5 and params["dimension"] == 16
    assert params["mode"] == "metaschema" and params["walk_times"] == 20 and params["walk_length"] == 320
    assert params["window"] == 10 and params["negatives"] == 5 and params["learning_rate"] == 0.025
    c = clone(est).set_params(seed=3)
    assert c.seed == 3 and est.seed == 0


def test_resolve_guidance(small):
    assert resolve_guidance(small, "metaschema")[1] == "spacey"
    mp, mode = resolve_guidance(small, "markovian", "APVPA")
    assert isinstance(mp, MetaPath) and mode == "markovian"
    assert resolve_guidance(small, "metapath", "APVPA")[1] == "spacey"
    assert isinstance(resolve_guidance(small, "metagraph", metagraph=["APA", "APVPA"])[0], MetaGraph)
    with pytest.raises(GraphError, match="needs a meta-path"):
        resolve_guidance(small, "metapath")
    with pytest.raises(GraphError, match="unknown mode"):
        resolve_guidance(small, "node2vec")


@pytest.mark.parametrize("kw", [dict(), dict(mode="metapath", metapath="APVPA"),
                                dict(mode="markovian", metapath="APVPA"),
                                dict(mode="metagraph", metagraph=["APA", "APVPA"])])
def test_fit_transform(small, kw):
    est = fast(**kw).fit(small)
    assert est.embedding_.shape == (small.node_count, 8)
    assert np.isfinite(est.embedding_).all()
    assert est.corpus_stats_["walks"] > 0
    assert "walk_secs" in est.corpus_stats_
    rows = est.transform([0, 5])
    assert np.array_equal(rows, est.embedding_[[0, 5]])


def test_deterministic_fit(small):
    a = fast(seed=4).fit_transform(small)
    b = fast(seed=4).fit_transform(small)
    assert np.array_equal(a, b)


def test_transform_errors(small):
    with pytest.raises(Exception):
        fast().transform([0])
    est = fast().fit(small)
    with pytest.raises(ValueError, match="node ids"):
        est.transform([small.node_count])
    with pytest.raises(TypeError):
        fast().fit(np.zeros((3, 3)))
