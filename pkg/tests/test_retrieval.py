"""Inverted index and BM25 against a brute-force formula oracle."""

import math
import random

import pytest

from qvbench.core import Passage, parse_trec_run
from qvbench.retrieval import (
    Bm25Params,
    bm25_score,
    build_index,
    export_run,
    index_tokens,
    run_queries,
    search,
)
from qvbench.textkit import porter_stem, tokenize

CORPUS = [
    Passage("p1", "Travel budgets for Bangkok trips and hotels"),
    Passage("p2", "Bangkok street food is cheap; budget meals everywhere"),
    Passage("p3", "Dog breeds that are good with children"),
]


def oracle_bm25(passages, query_text, passage_id, k1, b):
    docs = {
        p.passage_id: [porter_stem(t) for t in tokenize(p.text)] for p in passages
    }
    n = len(docs)
    avg = sum(len(d) for d in docs.values()) / n
    score = 0.0
    for term in [porter_stem(t) for t in tokenize(query_text)]:
        tf = docs[passage_id].count(term)
        if tf == 0:
            continue
        df = sum(1 for d in docs.values() if term in d)
        idf = math.log((n - df + 0.5) / (df + 0.5) + 1.0)
        score += idf * tf * (k1 + 1) / (
            tf + k1 * (1 - b + b * len(docs[passage_id]) / avg)
        )
    return score


def test_index_statistics():
    index = build_index(CORPUS)
    assert index.doc_count == 3
    assert index.df(porter_stem("bangkok")) == 2
    assert index.df(porter_stem("dog")) == 1
    assert index.avg_doc_length == pytest.approx(
        sum(len(index_tokens(p.text)) for p in CORPUS) / 3
    )
    for term, plist in index.postings.items():
        for pid, tf in plist:
            assert pid in index.doc_lengths
            assert tf >= 1


def test_empty_corpus_rejected():
    with pytest.raises(ValueError, match="empty corpus"):
        build_index([])


def test_duplicate_passage_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        build_index([CORPUS[0], CORPUS[0]])


def test_index_order_independent():
    shuffled = CORPUS.copy()
    random.Random(3).shuffle(shuffled)
    a = build_index(CORPUS)
    b = build_index(shuffled)
    assert a.postings == b.postings
    assert a.doc_lengths == b.doc_lengths
    assert a.avg_doc_length == b.avg_doc_length


def test_score_zero_without_matches():
    index = build_index(CORPUS)
    params = Bm25Params()
    assert bm25_score(index, params, index_tokens("quantum физика"), "p1") == 0.0


def test_score_positive_on_single_doc():
    index = build_index([CORPUS[0]])
    params = Bm25Params()
    tokens = index_tokens(CORPUS[0].text)
    assert bm25_score(index, params, tokens, "p1") > 0.0


def test_unknown_passage_rejected():
    index = build_index(CORPUS)
    with pytest.raises(ValueError, match="unknown passage"):
        bm25_score(index, Bm25Params(), ["bangkok"], "p99")


def test_scores_match_oracle_on_toy_corpus():
    index = build_index(CORPUS)
    params = Bm25Params()
    queries = [
        "cheap budget Bangkok",
        "dog breeds for children",
        "bangkok bangkok",
        "good travel food",
    ]
    for q in queries:
        for p in CORPUS:
            want = oracle_bm25(CORPUS, q, p.passage_id, params.k1, params.b)
            got = bm25_score(index, params, index_tokens(q), p.passage_id)
            assert got == pytest.approx(want, abs=1e-12), (q, p.passage_id)


def test_scores_match_oracle_randomized():
    rng = random.Random(37)
    vocab = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta"]
    for trial in range(20):
        passages = [
            Passage(f"d{i}", " ".join(rng.choices(vocab, k=rng.randint(3, 12))))
            for i in range(rng.randint(2, 6))
        ]
        params = Bm25Params(k1=rng.uniform(0.3, 2.0), b=rng.uniform(0.0, 1.0))
        index = build_index(passages)
        query = " ".join(rng.choices(vocab, k=rng.randint(1, 5)))
        for p in passages:
            want = oracle_bm25(passages, query, p.passage_id, params.k1, params.b)
            got = bm25_score(index, params, index_tokens(query), p.passage_id)
            assert got == pytest.approx(want, abs=1e-12)


def test_score_monotone_in_tf():
    # Same length, same df universe; only tf of "alpha" varies.
    passages = [
        Passage("d1", "alpha beta gamma delta"),
        Passage("d2", "alpha alpha gamma delta"),
        Passage("d3", "epsilon zeta eta theta"),
    ]
    index = build_index(passages)
    params = Bm25Params()
    s1 = bm25_score(index, params, ["alpha"], "d1")
    s2 = bm25_score(index, params, ["alpha"], "d2")
    assert s2 > s1 > 0


def test_idf_nonnegative_even_for_ubiquitous_terms():
    passages = [Passage(f"d{i}", "common word") for i in range(5)]
    index = build_index(passages)
    score = bm25_score(index, Bm25Params(), ["common"], "d0")
    assert score > 0.0


def test_search_ranks_exact_duplicate_first():
    index = build_index(CORPUS)
    hits = search(index, Bm25Params(), CORPUS[1].text, k=3)
    assert hits[0][0] == "p2"


def test_search_k_larger_than_corpus():
    index = build_index(CORPUS)
    hits = search(index, Bm25Params(), "bangkok budget dog", k=50)
    assert len(hits) == 3


def test_search_no_hits():
    index = build_index(CORPUS)
    assert search(index, Bm25Params(), "nothing matches here") == []


def test_search_tie_broken_by_passage_id():
    passages = [Passage("pB", "same text here"), Passage("pA", "same text here")]
    index = build_index(passages)
    hits = search(index, Bm25Params(), "same text", k=2)
    assert [pid for pid, _ in hits] == ["pA", "pB"]
    assert hits[0][1] == hits[1][1]


def test_search_descending_scores():
    index = build_index(CORPUS)
    hits = search(index, Bm25Params(), "cheap bangkok budget food", k=3)
    scores = [s for _, s in hits]
    assert scores == sorted(scores, reverse=True)


def test_bm25_params_validation():
    with pytest.raises(ValueError):
        Bm25Params(k1=0.0)
    with pytest.raises(ValueError):
        Bm25Params(b=1.5)
    defaults = Bm25Params()
    assert defaults.k1 == 0.9
    assert defaults.b == 0.4


def test_export_run_roundtrip(tmp_path):
    index = build_index(CORPUS)
    params = Bm25Params()
    results = {
        "q1": search(index, params, "bangkok budget", k=10),
        "q2": search(index, params, "dog breeds", k=10),
    }
    path = tmp_path / "run.txt"
    export_run(results, "bm25-default", path)
    parsed = parse_trec_run(path)
    assert {r.system_id for r in parsed} == {"bm25-default"}
    q1 = [r for r in parsed if r.query_id == "q1"]
    assert [r.rank for r in q1] == list(range(1, len(results["q1"]) + 1))
    assert [r.passage_id for r in q1] == [pid for pid, _ in results["q1"]]


def test_run_queries_records(tmp_path):
    index = build_index(CORPUS)
    records = run_queries(index, Bm25Params(), {"q1": "bangkok"}, "sysX", k=2)
    assert all(r.system_id == "sysX" for r in records)
    assert [r.rank for r in records] == [1, 2]
