"""Recall@K scoring."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mggraph.errors import UnknownChunkId
from mggraph.evaluation import recall_at_k, report_csv


def test_gold_ranked_first_everywhere():
    rankings = {f"q{i}": [f"g{i}", "x"] for i in range(4)}
    gold = {f"q{i}": {f"g{i}"} for i in range(4)}
    report = recall_at_k(rankings, gold, [1, 5])
    assert report.recall_at_k == {1: 1.0, 5: 1.0}


def test_rank_seven_hits_at_ten_not_five():
    ranking = [f"x{i}" for i in range(6)] + ["gold"]
    report = recall_at_k({"q": ranking}, {"q": {"gold"}}, [5, 10])
    assert report.recall_at_k[5] == 0.0
    assert report.recall_at_k[10] == 1.0
    assert report.per_query[0].best_rank == 7


def test_hand_placed_ranks_match_brute_force():
    # gold placed at ranks 1..10 across ten queries
    rankings = {}
    gold = {}
    for i in range(10):
        rank = i + 1
        rankings[f"q{i}"] = [f"f{j}" for j in range(rank - 1)] + [f"g{i}"]
        gold[f"q{i}"] = {f"g{i}"}
    ks = [1, 3, 5, 10]
    report = recall_at_k(rankings, gold, ks)
    for k in ks:
        expected = sum(1 for i in range(10) if i + 1 <= k) / 10
        assert report.recall_at_k[k] == pytest.approx(expected)


def test_empty_ranking_counts_as_miss():
    report = recall_at_k({"q": []}, {"q": {"gold"}}, [1, 10])
    assert report.recall_at_k == {1: 0.0, 10: 0.0}
    assert report.per_query[0].best_rank is None


def test_unknown_gold_chunk_rejected():
    with pytest.raises(UnknownChunkId):
        recall_at_k({"q": ["a"]}, {"q": {"ghost"}}, [1], known_chunk_ids={"a"})


def test_query_order_invariance():
    rankings = {"a": ["g1"], "b": ["x", "g2"], "c": []}
    gold = {"a": {"g1"}, "b": {"g2"}, "c": {"g3"}}
    r1 = recall_at_k(rankings, gold, [1, 2])
    r2 = recall_at_k(dict(reversed(list(rankings.items()))),
                     dict(reversed(list(gold.items()))), [1, 2])
    assert r1.recall_at_k == r2.recall_at_k


@given(st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=15),
       st.lists(st.integers(min_value=1, max_value=30), min_size=2, max_size=6))
def test_recall_monotone_in_k(gold_ranks, ks):
    rankings = {}
    gold = {}
    for i, rank in enumerate(gold_ranks):
        rankings[f"q{i}"] = [f"f{j}" for j in range(rank - 1)] + [f"g{i}"]
        gold[f"q{i}"] = {f"g{i}"}
    report = recall_at_k(rankings, gold, ks)
    ordered = sorted(report.recall_at_k)
    for k1, k2 in zip(ordered, ordered[1:]):
        assert report.recall_at_k[k1] <= report.recall_at_k[k2]


def test_csv_mirrors_table():
    report = recall_at_k({"q": ["g"]}, {"q": {"g"}}, [1, 50])
    csv = report_csv(report)
    assert csv.splitlines()[0] == "R@1,R@50"
    assert csv.splitlines()[1] == "1.0000,1.0000"
