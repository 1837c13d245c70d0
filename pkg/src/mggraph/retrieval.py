"""Seed activation, Personalized PageRank diffusion, and chunk ranking.

The seed distribution is built per query modality: dense similarities at
the sentence/chunk/image/object levels, per-level top-k truncation,
mean-pooling of sentence and object scores onto multimodal nodes through
the incidence matrices, level scaling, and modality fusion.  The fused
distribution is then diffused with r <- alpha * W r + (1 - alpha) * r0
over the column-stochastic transition matrix until the l1 change drops
below epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .config import RetrievalConfig
from .embeddings import EmbeddingIndex, similarities
from .errors import AllZeroActivation, EmptyQuery
from .graph import HeteroGraph


@dataclass(frozen=True)
class Query:
    text: str | None = None
    image_ref: str | None = None


@dataclass
class TransitionMatrix:
    matrix: sp.csr_matrix        # W[i, j] = P(j -> i)
    dangling: np.ndarray         # boolean mask over columns with no edges


@dataclass
class PropagationResult:
    scores: np.ndarray
    iterations: int
    converged: bool
    mass_history: list[float]


def truncate_top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest entries (ties to the lower index), zero the rest."""
    if k >= len(scores):
        return scores.copy()
    out = np.zeros_like(scores)
    if k <= 0:
        return out
    order = np.argsort(-scores, kind="stable")[:k]
    out[order] = scores[order]
    return out


def mean_pool(incidence: sp.csr_matrix, scores: np.ndarray) -> np.ndarray:
    """Average mapped row scores per multimodal node; zero when unmapped."""
    counts = np.asarray(incidence.sum(axis=0)).ravel()
    totals = incidence.T @ scores
    pooled = np.zeros_like(totals)
    mapped = counts > 0
    pooled[mapped] = totals[mapped] / counts[mapped]
    return pooled


def _modality_activation(
    query_vec: np.ndarray,
    index: EmbeddingIndex,
    graph: HeteroGraph,
    top_k,
) -> np.ndarray:
    levels = {
        level: truncate_top_k(
            similarities(query_vec, index.matrices[level]), top_k.for_level(level)
        )
        for level in ("sentence", "chunk", "image", "object")
    }
    pooled = mean_pool(graph.smi, levels["sentence"]) + mean_pool(
        graph.omi, levels["object"]
    )
    return np.concatenate([levels["chunk"], levels["image"], pooled])


def activate_seeds(
    query: Query,
    index: EmbeddingIndex,
    graph: HeteroGraph,
    config: RetrievalConfig,
) -> np.ndarray:
    """Build the normalized seed distribution r0 over the global node index."""
    if query.text is None and query.image_ref is None:
        raise EmptyQuery("query has neither text nor image")

    n = graph.n_nodes
    fused = np.zeros(n)
    if query.text is not None and config.lambda_t > 0.0:
        vec = _unit(index.provider.embed_text(query.text))
        activation = _modality_activation(vec, index, graph, config.top_k("text"))
        fused += config.lambda_t * _scale_levels(activation, graph, config)
    if query.image_ref is not None and config.lambda_v > 0.0:
        vec = _unit(index.provider.embed_image(query.image_ref))
        activation = _modality_activation(vec, index, graph, config.top_k("visual"))
        fused += config.lambda_v * _scale_levels(activation, graph, config)

    if config.global_seed_top_k is not None:
        fused = truncate_top_k(fused, config.global_seed_top_k)

    total = fused.sum()
    if total <= 0.0:
        raise AllZeroActivation("no node activated for this query")
    return fused / total


def _scale_levels(activation, graph: HeteroGraph, config: RetrievalConfig):
    scaled = activation.copy()
    scaled[: graph.n_chunks] *= config.omega_c
    scaled[graph.n_chunks : graph.n_chunks + graph.n_images] *= config.omega_i
    return scaled


def _unit(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def build_transition(graph: HeteroGraph) -> TransitionMatrix:
    """Column-stochastic W from the undirected edge set read in both ways."""
    n = graph.n_nodes
    rows, cols, vals = [], [], []
    for edge in graph.edges:
        rows.extend((edge.dst, edge.src))
        cols.extend((edge.src, edge.dst))
        vals.extend((edge.weight, edge.weight))
    weights = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    out_degree = np.asarray(weights.sum(axis=0)).ravel()
    dangling = out_degree == 0.0
    scale = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, out_degree))
    matrix = (weights @ sp.diags(scale)).tocsr()
    return TransitionMatrix(matrix=matrix, dangling=dangling)


def propagate(
    r0: np.ndarray, transition: TransitionMatrix, config: RetrievalConfig
) -> PropagationResult:
    """Iterate the damped diffusion with personalized dangling redistribution.

    Mass sitting on dangling columns re-enters in proportion to r0, so the
    total stays at 1 every iteration.
    """
    r = r0.copy()
    mass_history = []
    for iteration in range(1, config.max_iters + 1):
        dangling_mass = float(r[transition.dangling].sum())
        r_next = config.alpha * (transition.matrix @ r + dangling_mass * r0)
        r_next += (1.0 - config.alpha) * r0
        delta = float(np.abs(r_next - r).sum())
        r = r_next
        mass_history.append(float(r.sum()))
        if delta <= config.epsilon:
            return PropagationResult(r, iteration, True, mass_history)
    return PropagationResult(r, config.max_iters, False, mass_history)


def rank_chunks(
    scores: np.ndarray, graph: HeteroGraph, answer_top_k: int
) -> list[tuple[str, float]]:
    """Descending chunk scores, ties broken by lower node index."""
    chunk_scores = scores[: graph.n_chunks]
    order = np.argsort(-chunk_scores, kind="stable")[:answer_top_k]
    return [(graph.chunk_ids[i], float(chunk_scores[i])) for i in order]


def dense_chunk_ranking(
    query: Query,
    index: EmbeddingIndex,
    graph: HeteroGraph,
    config: RetrievalConfig,
) -> list[tuple[str, float]]:
    """Fallback: rank chunks by fused dense similarity alone."""
    matrix = index.matrices["chunk"]
    scores = np.zeros(matrix.rows)
    if query.text is not None and config.lambda_t > 0.0:
        scores += config.lambda_t * similarities(
            _unit(index.provider.embed_text(query.text)).astype(np.float32), matrix
        )
    if query.image_ref is not None and config.lambda_v > 0.0:
        scores += config.lambda_v * similarities(
            _unit(index.provider.embed_image(query.image_ref)).astype(np.float32),
            matrix,
        )
    order = np.argsort(-scores, kind="stable")[: config.answer_top_k]
    return [(graph.chunk_ids[i], float(scores[i])) for i in order]


def assemble_context(
    ranked: list[tuple[str, float]], chunk_texts: dict[str, str]
) -> str:
    """Plain-text context block: rank-ordered chunks labeled with id and score."""
    sections = []
    for rank, (chunk_id, score) in enumerate(ranked, start=1):
        text = chunk_texts.get(chunk_id, "")
        sections.append(f"[{rank}] {chunk_id} (score={score:.6f})\n{text}")
    return "\n\n".join(sections)


def run_query(
    query: Query,
    index: EmbeddingIndex,
    graph: HeteroGraph,
    config: RetrievalConfig,
    chunk_texts: dict[str, str],
    transition: TransitionMatrix | None = None,
) -> dict:
    """Full retrieval pass; falls back to dense ranking when no seed fires."""
    if transition is None:
        transition = build_transition(graph)
    result: dict = {"fallback": False, "warnings": []}
    try:
        r0 = activate_seeds(query, index, graph, config)
    except AllZeroActivation:
        ranked = dense_chunk_ranking(query, index, graph, config)
        result.update(
            fallback=True, iterations=0, converged=True,
            warnings=["all-zero activation; dense chunk ranking used"],
        )
    else:
        outcome = propagate(r0, transition, config)
        ranked = rank_chunks(outcome.scores, graph, config.answer_top_k)
        result.update(iterations=outcome.iterations, converged=outcome.converged)
        if not outcome.converged:
            result["warnings"].append("propagation hit max_iters before epsilon")
    if not ranked:
        result["warnings"].append("empty ranking")
    result["chunks"] = [{"chunkId": cid, "score": score} for cid, score in ranked]
    result["context"] = assemble_context(ranked, chunk_texts)
    return result
