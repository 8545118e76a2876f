"""Desk-scale lexical retrieval: inverted index, BM25, run export.

Indexing and querying share the textkit pipeline (lowercase, strip
punctuation, Porter stem). Scores follow the Robertson BM25 form with
the +1-smoothed IDF, which keeps every term weight positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import Passage, RunRecord, write_trec_run
from .textkit import porter_stem, tokenize


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1={self.k1} must be > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b={self.b} outside [0, 1]")


class InvertedIndex:
    """Immutable term postings over a stemmed passage collection."""

    def __init__(
        self,
        postings: dict[str, tuple[tuple[str, int], ...]],
        doc_lengths: dict[str, int],
    ):
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.doc_count = len(doc_lengths)
        self.avg_doc_length = sum(doc_lengths.values()) / self.doc_count
        self._tf = {
            term: {pid: tf for pid, tf in plist} for term, plist in postings.items()
        }

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, passage_id: str) -> int:
        return self._tf.get(term, {}).get(passage_id, 0)


def index_tokens(text: str) -> list[str]:
    return [porter_stem(token) for token in tokenize(text)]


def build_index(passages: Iterable[Passage]) -> InvertedIndex:
    """Index a corpus; deterministic regardless of input order."""
    doc_lengths: dict[str, int] = {}
    counts: dict[str, dict[str, int]] = {}
    for passage in passages:
        if passage.passage_id in doc_lengths:
            raise ValueError(f"duplicate passage_id {passage.passage_id}")
        tokens = index_tokens(passage.text)
        doc_lengths[passage.passage_id] = len(tokens)
        for term in tokens:
            per_doc = counts.setdefault(term, {})
            per_doc[passage.passage_id] = per_doc.get(passage.passage_id, 0) + 1
    if not doc_lengths:
        raise ValueError("empty corpus")
    postings = {
        term: tuple(sorted(counts[term].items())) for term in sorted(counts)
    }
    return InvertedIndex(postings, dict(sorted(doc_lengths.items())))


def bm25_score(
    index: InvertedIndex,
    params: Bm25Params,
    query_tokens: Sequence[str],
    passage_id: str,
) -> float:
    """Sum of per-token BM25 weights; repeated query tokens count again."""
    if passage_id not in index.doc_lengths:
        raise ValueError(f"unknown passage {passage_id!r}")
    length_ratio = index.doc_lengths[passage_id] / index.avg_doc_length
    n = index.doc_count
    score = 0.0
    for term in query_tokens:
        tf = index.tf(term, passage_id)
        if tf == 0:
            continue
        df = index.df(term)
        idf = math.log((n - df + 0.5) / (df + 0.5) + 1.0)
        score += idf * tf * (params.k1 + 1.0) / (
            tf + params.k1 * (1.0 - params.b + params.b * length_ratio)
        )
    return score


def search(
    index: InvertedIndex,
    params: Bm25Params,
    query: str,
    k: int = 10,
) -> list[tuple[str, float]]:
    """Top-k passages by BM25, score descending, ties by passage_id."""
    if k < 1:
        raise ValueError(f"k={k} must be >= 1")
    tokens = index_tokens(query)
    candidates: set[str] = set()
    for term in set(tokens):
        candidates.update(pid for pid, _ in index.postings.get(term, ()))
    scored = [(pid, bm25_score(index, params, tokens, pid)) for pid in candidates]
    scored.sort(key=lambda hit: (-hit[1], hit[0]))
    return scored[:k]


def run_queries(
    index: InvertedIndex,
    params: Bm25Params,
    queries: Mapping[str, str],
    system_id: str,
    k: int = 10,
) -> list[RunRecord]:
    records = []
    for query_id in sorted(queries):
        for rank, (pid, score) in enumerate(search(index, params, queries[query_id], k), 1):
            records.append(RunRecord(system_id, query_id, pid, rank, score))
    return records


def export_run(
    results: Mapping[str, Sequence[tuple[str, float]]],
    system_id: str,
    path,
) -> None:
    """Write per-query (passage_id, score) lists as a TREC run file."""
    records = []
    for query_id in sorted(results):
        for rank, (pid, score) in enumerate(results[query_id], start=1):
            records.append(RunRecord(system_id, query_id, pid, rank, float(score)))
    write_trec_run(records, path)
