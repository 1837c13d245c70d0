"""Recall@K scoring of retrieval runs against gold evidence chunks."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownChunkId


@dataclass
class QueryDiagnostic:
    query_id: str
    best_rank: int | None       # 1-based rank of the best-placed gold chunk
    hits: dict[int, bool]       # K -> whether the top-K intersects gold


@dataclass
class EvalReport:
    recall_at_k: dict[int, float]
    per_query: list[QueryDiagnostic]
    n_queries: int
    runtime_seconds: float = 0.0
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "recallAtK": {str(k): v for k, v in sorted(self.recall_at_k.items())},
            "nQueries": self.n_queries,
            "runtimeSeconds": self.runtime_seconds,
            "perQuery": [
                {
                    "queryId": d.query_id,
                    "bestRankOfGold": d.best_rank,
                    "hits": {str(k): v for k, v in sorted(d.hits.items())},
                }
                for d in self.per_query
            ],
            **self.extras,
        }


def recall_at_k(
    rankings: dict[str, list[str]],
    gold: dict[str, set[str]],
    ks: list[int],
    known_chunk_ids: set[str] | None = None,
) -> EvalReport:
    """Fraction of queries whose top-K ranking intersects its gold set.

    Queries with empty rankings count as misses at every K.
    """
    if known_chunk_ids is not None:
        for query_id, gold_ids in gold.items():
            unknown = gold_ids - known_chunk_ids
            if unknown:
                raise UnknownChunkId(
                    f"query {query_id}: gold chunks not in index: {sorted(unknown)}"
                )

    ks = sorted(set(ks))
    per_query = []
    hit_counts = {k: 0 for k in ks}
    for query_id in sorted(gold):
        gold_ids = gold[query_id]
        ranking = rankings.get(query_id, [])
        best_rank = None
        for rank, chunk_id in enumerate(ranking, start=1):
            if chunk_id in gold_ids:
                best_rank = rank
                break
        hits = {k: best_rank is not None and best_rank <= k for k in ks}
        for k in ks:
            hit_counts[k] += int(hits[k])
        per_query.append(QueryDiagnostic(query_id, best_rank, hits))

    n = len(gold)
    recall = {k: (hit_counts[k] / n if n else 0.0) for k in ks}
    return EvalReport(recall_at_k=recall, per_query=per_query, n_queries=n)


def report_csv(report: EvalReport) -> str:
    """One-row CSV mirroring an R@K results table."""
    ks = sorted(report.recall_at_k)
    header = ",".join(f"R@{k}" for k in ks)
    values = ",".join(f"{report.recall_at_k[k]:.4f}" for k in ks)
    return f"{header}\n{values}\n"
