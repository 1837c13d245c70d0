"""Seed activation, transition building, PPR propagation, ranking."""

from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from mggraph.config import DEFAULT_CONFIG, LevelTopK
from mggraph.embeddings import FixtureProvider, build_matrices
from mggraph.errors import AllZeroActivation, EmptyQuery
from mggraph.graph import Edge, build_graph
from mggraph.model import ChunkRecord
from mggraph.relations import extract_relations
from mggraph.retrieval import (
    Query,
    TransitionMatrix,
    activate_seeds,
    assemble_context,
    build_transition,
    dense_chunk_ranking,
    mean_pool,
    propagate,
    rank_chunks,
    run_query,
    truncate_top_k,
)

from conftest import sentence_founded, sentence_operates
from oracles import (
    brute_force_mean_pool,
    dense_ppr_solve,
    dense_transition,
    random_graph_edges,
    random_seed_vector,
)


def graph_stub(n_nodes, edges):
    return SimpleNamespace(n_nodes=n_nodes, edges=edges)


class TestTruncateTopK:
    def test_keeps_largest(self):
        scores = np.array([0.1, 0.9, 0.5, 0.7])
        out = truncate_top_k(scores, 2)
        assert out.tolist() == [0.0, 0.9, 0.0, 0.7]

    def test_ties_prefer_lower_index(self):
        scores = np.array([0.5, 0.5, 0.5])
        out = truncate_top_k(scores, 2)
        assert out.tolist() == [0.5, 0.5, 0.0]

    def test_k_larger_than_length(self):
        scores = np.array([0.3, 0.2])
        assert truncate_top_k(scores, 10).tolist() == [0.3, 0.2]

    def test_k_zero(self):
        assert truncate_top_k(np.array([1.0, 2.0]), 0).tolist() == [0.0, 0.0]


class TestMeanPool:
    def test_singleton_mean(self):
        incidence = sp.csr_matrix(np.array([[1.0, 0.0]]))
        pooled = mean_pool(incidence, np.array([0.7]))
        assert pooled.tolist() == [0.7, 0.0]

    def test_two_sentence_mean(self):
        incidence = sp.csr_matrix(np.array([[1.0], [1.0]]))
        pooled = mean_pool(incidence, np.array([0.4, 0.8]))
        assert pooled[0] == pytest.approx(0.6)

    def test_unmapped_node_zero(self):
        incidence = sp.csr_matrix((3, 2))
        assert mean_pool(incidence, np.ones(3)).tolist() == [0.0, 0.0]

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            rows = int(rng.integers(1, 12))
            nodes = int(rng.integers(1, 8))
            incidence = (rng.random((rows, nodes)) < 0.4).astype(float)
            scores = rng.random(rows)
            expected = brute_force_mean_pool(incidence, scores)
            got = mean_pool(sp.csr_matrix(incidence), scores)
            assert np.max(np.abs(got - expected)) <= 1e-12


class TestBuildTransition:
    def test_two_unit_edges_split_evenly(self):
        edges = [Edge(0, 1, "contextual", 1.0), Edge(0, 2, "contextual", 1.0)]
        t = build_transition(graph_stub(3, edges))
        col = t.matrix.toarray()[:, 0]
        assert col.tolist() == [0.0, 0.5, 0.5]

    def test_mixed_weights_hand_normalized(self):
        edges = [Edge(0, 1, "grounding", 0.9), Edge(0, 2, "contextual", 1.0)]
        t = build_transition(graph_stub(3, edges))
        col = t.matrix.toarray()[:, 0]
        assert col[1] == pytest.approx(9 / 19)
        assert col[2] == pytest.approx(10 / 19)

    def test_isolated_node_dangling(self):
        edges = [Edge(0, 1, "contextual", 1.0)]
        t = build_transition(graph_stub(3, edges))
        assert t.dangling.tolist() == [False, False, True]
        assert t.matrix.toarray()[:, 2].sum() == 0.0

    def test_columns_stochastic(self):
        rng = np.random.default_rng(2)
        edges = [Edge(a, b, k, w) for a, b, k, w in random_graph_edges(rng, 20)]
        t = build_transition(graph_stub(20, edges))
        sums = np.asarray(t.matrix.sum(axis=0)).ravel()
        for j in range(20):
            if t.dangling[j]:
                assert sums[j] == 0.0
            else:
                assert abs(sums[j] - 1.0) <= 1e-9


class TestPropagate:
    def test_alpha_near_zero_returns_seed(self):
        edges = [Edge(0, 1, "contextual", 1.0), Edge(1, 2, "contextual", 1.0)]
        t = build_transition(graph_stub(3, edges))
        r0 = np.array([0.2, 0.3, 0.5])
        config = replace(DEFAULT_CONFIG, alpha=1e-12)
        result = propagate(r0, t, config)
        assert np.max(np.abs(result.scores - r0)) <= 1e-9

    def test_single_node_self_loop(self):
        edges = [Edge(0, 0, "contextual", 1.0)]
        t = build_transition(graph_stub(1, edges))
        result = propagate(np.array([1.0]), t, replace(DEFAULT_CONFIG, alpha=0.7))
        assert result.scores == pytest.approx([1.0])

    def test_three_node_path_matches_dense_solve(self):
        edges = [Edge(0, 1, "contextual", 1.0), Edge(1, 2, "contextual", 1.0)]
        t = build_transition(graph_stub(3, edges))
        r0 = np.array([1.0, 0.0, 0.0])
        config = replace(DEFAULT_CONFIG, alpha=0.5)
        result = propagate(r0, t, config)
        W, dangling = dense_transition(
            [(0, 1, "contextual", 1.0), (1, 2, "contextual", 1.0)], 3
        )
        expected = dense_ppr_solve(W, r0, 0.5, dangling)
        assert np.max(np.abs(result.scores - expected)) <= 1e-6
        assert result.converged

    def test_oracle_equivalence_random_graphs(self):
        rng = np.random.default_rng(42)
        for trial in range(25):
            n = int(rng.integers(5, 51))
            raw_edges = random_graph_edges(rng, n)
            edges = [Edge(a, b, k, w) for a, b, k, w in raw_edges]
            t = build_transition(graph_stub(n, edges))
            r0 = random_seed_vector(rng, n)
            for alpha in (0.15, 0.5, 0.85):
                config = replace(DEFAULT_CONFIG, alpha=alpha, max_iters=2000)
                result = propagate(r0, t, config)
                W, dangling = dense_transition(raw_edges, n)
                expected = dense_ppr_solve(W, r0, alpha, dangling)
                assert np.max(np.abs(result.scores - expected)) <= 1e-6
                for mass in result.mass_history:
                    assert abs(mass - 1.0) <= 1e-9

    def test_no_convergence_flagged(self):
        edges = [Edge(0, 1, "contextual", 1.0), Edge(1, 2, "contextual", 1.0)]
        t = build_transition(graph_stub(3, edges))
        config = replace(DEFAULT_CONFIG, alpha=0.99, max_iters=2, epsilon=1e-15)
        result = propagate(np.array([1.0, 0.0, 0.0]), t, config)
        assert not result.converged
        assert result.iterations == 2

    @given(alpha=st.floats(min_value=1e-6, max_value=0.3), seed=st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_monotone_restart(self, alpha, seed):
        # l1 distance to r0 shrinks as alpha -> 0
        rng = np.random.default_rng(seed)
        n = 12
        edges = [Edge(a, b, k, w) for a, b, k, w in random_graph_edges(rng, n)]
        t = build_transition(graph_stub(n, edges))
        r0 = random_seed_vector(rng, n)
        near = propagate(r0, t, replace(DEFAULT_CONFIG, alpha=alpha, max_iters=2000))
        nearer = propagate(r0, t, replace(DEFAULT_CONFIG, alpha=alpha / 10, max_iters=2000))
        d_near = np.abs(near.scores - r0).sum()
        d_nearer = np.abs(nearer.scores - r0).sum()
        assert d_nearer <= d_near + 1e-9


class TestRankChunks:
    def make_graph(self, n_chunks):
        return SimpleNamespace(n_chunks=n_chunks,
                               chunk_ids=[f"c{i}" for i in range(n_chunks)])

    def test_top_k_larger_than_chunks(self):
        graph = self.make_graph(3)
        scores = np.array([0.1, 0.3, 0.2, 9.9])
        ranked = rank_chunks(scores, graph, 10)
        assert [c for c, _ in ranked] == ["c1", "c2", "c0"]

    def test_stable_tie_break(self):
        graph = self.make_graph(3)
        ranked = rank_chunks(np.array([0.5, 0.5, 0.5]), graph, 2)
        assert [c for c, _ in ranked] == ["c0", "c1"]


class TestAssembleContext:
    def test_two_chunks_in_rank_order(self):
        block = assemble_context([("c2", 0.8), ("c1", 0.2)],
                                 {"c1": "one", "c2": "two"})
        assert block.index("c2") < block.index("c1")
        assert "[1] c2" in block and "[2] c1" in block

    def test_empty_ranking(self):
        assert assemble_context([], {}) == ""

    def test_byte_identical(self):
        ranked = [("c1", 1 / 3), ("c2", 0.25)]
        texts = {"c1": "alpha", "c2": "beta"}
        assert assemble_context(ranked, texts) == assemble_context(ranked, texts)


def build_fixture_engine(overrides=None, config=DEFAULT_CONFIG):
    chunks = [
        ChunkRecord("c1", "jobs founded apple", ("s1",), ("img1",)),
        ChunkRecord("c2", "apple operates in california", ("s3",), ()),
    ]
    sentences = [sentence_founded("s1", "c1"), sentence_operates("s3", "c2")]
    triplets = []
    for s in sentences:
        triplets.extend(extract_relations(s))
    graph = build_graph(chunks, sentences, triplets, ["img1"], [], tau=config.tau)
    provider = FixtureProvider(dim=16, overrides=overrides)
    sentence_texts = {"s1": "Steve Jobs founded Apple",
                      "s3": "Apple operates in California"}
    index = build_matrices(
        [(sid, sentence_texts[sid]) for sid in graph.sentence_ids],
        [(c.chunk_id, c.text) for c in chunks],
        graph.image_ids, graph.object_ids, provider,
    )
    return graph, index, {c.chunk_id: c.text for c in chunks}


class TestActivateSeeds:
    def test_empty_query_rejected(self):
        graph, index, _ = build_fixture_engine()
        with pytest.raises(EmptyQuery):
            activate_seeds(Query(), index, graph, DEFAULT_CONFIG)

    def test_seed_sums_to_one(self):
        graph, index, _ = build_fixture_engine()
        r0 = activate_seeds(Query(text="apple"), index, graph, DEFAULT_CONFIG)
        assert r0.sum() == pytest.approx(1.0)
        assert (r0 >= 0).all()

    def test_lambda_t_zero_ignores_text(self):
        graph, index, _ = build_fixture_engine()
        config = replace(DEFAULT_CONFIG, lambda_t=0.0)
        r_both = activate_seeds(Query(text="anything", image_ref="img1"),
                                index, graph, config)
        r_visual = activate_seeds(Query(image_ref="img1"), index, graph, config)
        assert np.allclose(r_both, r_visual)

    def test_scaling_lambdas_leaves_r0_unchanged(self):
        graph, index, _ = build_fixture_engine()
        base = activate_seeds(Query(text="apple", image_ref="img1"),
                              index, graph, DEFAULT_CONFIG)
        for c in (0.1, 10.0):
            scaled_config = replace(DEFAULT_CONFIG,
                                    lambda_t=DEFAULT_CONFIG.lambda_t * c,
                                    lambda_v=DEFAULT_CONFIG.lambda_v * c)
            scaled = activate_seeds(Query(text="apple", image_ref="img1"),
                                    index, graph, scaled_config)
            assert np.allclose(scaled, base, atol=1e-12)

    def test_truncation_soundness(self):
        graph, index, _ = build_fixture_engine()
        config = replace(
            DEFAULT_CONFIG,
            text_top_k=LevelTopK(chunk=1, sentence=1, image=1, object=1),
        )
        r0 = activate_seeds(Query(text="apple"), index, graph, config)
        # at most 1 chunk + 1 image + nodes reachable from 1 sentence
        assert (r0[: graph.n_chunks] > 0).sum() <= 1
        assert (r0[graph.n_chunks:graph.n_chunks + graph.n_images] > 0).sum() <= 1

    def test_all_zero_activation_raised(self):
        # plant every stored row at +e0 and query at -e0: all cosines clamp to 0
        graph, index, _ = build_fixture_engine()
        e0 = np.zeros(16, dtype=np.float32)
        e0[0] = 1.0
        for matrix in index.matrices.values():
            matrix.data = np.tile(e0, (matrix.rows, 1))

        class OpposedProvider(FixtureProvider):
            def embed_text(self, text):
                return -e0

        index.provider = OpposedProvider(dim=16)
        with pytest.raises(AllZeroActivation):
            activate_seeds(Query(text="hostile query"), index, graph,
                           DEFAULT_CONFIG)

    def test_aggregated_sentence_scores_mean_pooled(self):
        # plant sentence similarities 0.4 / 0.8 for the shared entity "apple"
        graph, index, _ = build_fixture_engine()
        query = np.zeros(16, dtype=np.float32)
        query[0] = 1.0
        s_rows = index.matrices["sentence"]
        data = np.zeros_like(s_rows.data)
        data[:, 1] = 1.0
        data[0, 0], data[0, 1] = 0.4, np.sqrt(1 - 0.16)
        data[1, 0], data[1, 1] = 0.8, 0.6
        s_rows.data = data
        # zero out other levels so only sentence mass remains
        for level in ("chunk", "image", "object"):
            index.matrices[level].data = np.zeros_like(index.matrices[level].data)

        class PlantedProvider(FixtureProvider):
            def embed_text(self, text):
                return query

        index.provider = PlantedProvider(dim=16)
        r0 = activate_seeds(Query(text="q"), index, graph, DEFAULT_CONFIG)
        mm = r0[graph.n_chunks + graph.n_images:]
        apple_col = graph.node_index["apple"]
        jobs_col = graph.node_index["steve jobs"]
        # apple mapped by both sentences: mean(0.4, 0.8) = 0.6
        # steve jobs mapped by s1 only: 0.4; california by s3 only: 0.8
        total = 0.6 + 0.4 + 0.8
        assert mm[apple_col] == pytest.approx(0.6 / total)
        assert mm[jobs_col] == pytest.approx(0.4 / total)


class TestRunQuery:
    def test_text_only_query(self):
        graph, index, texts = build_fixture_engine()
        result = run_query(Query(text="apple computers"), index, graph,
                           DEFAULT_CONFIG, texts)
        assert result["converged"]
        assert len(result["chunks"]) == 2
        assert result["context"]

    def test_fallback_on_all_zero(self):
        graph, index, texts = build_fixture_engine()
        e0 = np.zeros(16, dtype=np.float32)
        e0[0] = 1.0
        for matrix in index.matrices.values():
            matrix.data = np.tile(e0, (matrix.rows, 1))

        class OpposedProvider(FixtureProvider):
            def embed_text(self, text):
                return -e0

        index.provider = OpposedProvider(dim=16)
        result = run_query(Query(text="x"), index, graph, DEFAULT_CONFIG, texts)
        assert result["fallback"]
        assert result["warnings"]

    def test_result_deterministic(self):
        import json
        graph, index, texts = build_fixture_engine()
        r1 = run_query(Query(text="apple"), index, graph, DEFAULT_CONFIG, texts)
        r2 = run_query(Query(text="apple"), index, graph, DEFAULT_CONFIG, texts)
        assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)


def test_dense_chunk_ranking_orders_by_similarity():
    graph, index, _ = build_fixture_engine()
    query_vec = index.matrices["chunk"].data[1]

    class RowProvider(FixtureProvider):
        def embed_text(self, text):
            return query_vec

    index.provider = RowProvider(dim=16)
    ranked = dense_chunk_ranking(Query(text="q"), index, graph, DEFAULT_CONFIG)
    assert ranked[0][0] == "c2"
