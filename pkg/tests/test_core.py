"""Domain types, parsers, and round-trips."""

import pytest

from qvbench.core import (
    AnnotationRecord,
    ParseError,
    Passage,
    Profile,
    Qrel,
    QueryVariant,
    RunRecord,
    Topic,
    ValidationError,
    expected_variant_count,
    group_variants,
    parse_passages,
    parse_qrels,
    parse_topics,
    parse_trec_run,
    parse_variant_query_id,
    profile_of_query_id,
    read_annotations,
    read_variants,
    topic_of_query_id,
    variant_query_id,
    verify_complete,
    write_annotations,
    write_qrels,
    write_topics,
    write_trec_run,
    write_variants,
)


def test_parse_topics_tsv(tmp_path):
    p = tmp_path / "topics.tsv"
    p.write_text("2001\thow much money do I need in Bangkok\n", encoding="utf-8")
    topics = parse_topics(p)
    assert topics == [Topic("2001", "how much money do I need in Bangkok")]


def test_parse_topics_empty_file(tmp_path):
    p = tmp_path / "topics.tsv"
    p.write_text("", encoding="utf-8")
    assert parse_topics(p) == []


def test_parse_topics_bad_column_count(tmp_path):
    p = tmp_path / "topics.tsv"
    p.write_text("2001\tok query\n2002\ta\tb\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":2:"):
        parse_topics(p)


def test_parse_topics_duplicate_id(tmp_path):
    p = tmp_path / "topics.tsv"
    p.write_text("2001\tone\n2001\ttwo\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="duplicate"):
        parse_topics(p)


def test_topics_jsonl_roundtrip(tmp_path):
    topics = [
        Topic("2001", "money in Bangkok", backstory="I am planning a trip."),
        Topic("2002", "best dog breeds"),
    ]
    p = tmp_path / "topics.jsonl"
    write_topics(topics, p)
    assert parse_topics(p, format="jsonl") == topics


def test_topic_normalized_to_nfc():
    decomposed = "café"
    t = Topic("1", decomposed)
    assert t.seed_query == "café"


def test_topic_empty_seed_rejected():
    with pytest.raises(ValidationError):
        Topic("1", "   ")


def test_parse_trec_run_single_line(tmp_path):
    p = tmp_path / "run.txt"
    p.write_text("q1 Q0 p7 1 12.5 bm25\n", encoding="utf-8")
    assert parse_trec_run(p) == [RunRecord("bm25", "q1", "p7", 1, 12.5)]


def test_parse_trec_run_rank_gap(tmp_path):
    p = tmp_path / "run.txt"
    p.write_text("q1 Q0 p7 1 12.5 bm25\nq1 Q0 p8 3 11.0 bm25\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="gap-free"):
        parse_trec_run(p)


def test_parse_trec_run_groups_interleaved_systems(tmp_path):
    p = tmp_path / "run.txt"
    p.write_text(
        "q1 Q0 p1 1 9.0 sysA\n"
        "q1 Q0 p1 1 8.0 sysB\n"
        "q1 Q0 p2 2 7.5 sysA\n"
        "q1 Q0 p3 2 6.0 sysB\n",
        encoding="utf-8",
    )
    records = parse_trec_run(p)
    assert [(r.system_id, r.rank) for r in records] == [
        ("sysA", 1),
        ("sysA", 2),
        ("sysB", 1),
        ("sysB", 2),
    ]


def test_parse_trec_run_bad_rank(tmp_path):
    p = tmp_path / "run.txt"
    p.write_text("q1 Q0 p7 first 12.5 bm25\n", encoding="utf-8")
    with pytest.raises(ParseError, match="rank"):
        parse_trec_run(p)


def test_parse_trec_run_bad_score(tmp_path):
    p = tmp_path / "run.txt"
    p.write_text("q1 Q0 p7 1 high bm25\n", encoding="utf-8")
    with pytest.raises(ParseError, match="score"):
        parse_trec_run(p)


def test_parse_trec_run_increasing_score(tmp_path):
    p = tmp_path / "run.txt"
    p.write_text("q1 Q0 p7 1 1.0 bm25\nq1 Q0 p8 2 2.0 bm25\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="score increases"):
        parse_trec_run(p)


def test_parse_trec_run_tie_order(tmp_path):
    p = tmp_path / "run.txt"
    p.write_text("q1 Q0 p9 1 1.0 bm25\nq1 Q0 p1 2 1.0 bm25\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="tied scores"):
        parse_trec_run(p)


def test_trec_run_roundtrip(tmp_path):
    records = [
        RunRecord("bm25", "q1", "p7", 1, 12.5),
        RunRecord("bm25", "q1", "p3", 2, 11.25),
        RunRecord("bm25", "q2", "p1", 1, 3.0),
    ]
    p = tmp_path / "run.txt"
    write_trec_run(records, p)
    assert parse_trec_run(p) == records


def test_parse_qrels(tmp_path):
    p = tmp_path / "qrels.txt"
    p.write_text("q1 0 p7 3\n", encoding="utf-8")
    assert parse_qrels(p) == [Qrel("q1", "p7", 3, "human")]


def test_parse_qrels_duplicate(tmp_path):
    p = tmp_path / "qrels.txt"
    p.write_text("q1 0 p7 3\nq1 0 p7 2\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="duplicate"):
        parse_qrels(p)


@pytest.mark.parametrize("grade", ["-1", "4"])
def test_parse_qrels_grade_range(tmp_path, grade):
    p = tmp_path / "qrels.txt"
    p.write_text(f"q1 0 p7 {grade}\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        parse_qrels(p)


def test_qrels_source_column_roundtrip(tmp_path):
    qrels = [Qrel("q1", "p7", 3, "human"), Qrel("q1", "p8", 1, "llm")]
    p = tmp_path / "qrels.txt"
    write_qrels(qrels, p, with_source=True)
    assert parse_qrels(p) == qrels


def test_qrels_same_pair_two_sources_allowed(tmp_path):
    p = tmp_path / "qrels.txt"
    p.write_text("q1 0 p7 3 human\nq1 0 p7 2 llm\n", encoding="utf-8")
    assert len(parse_qrels(p)) == 2


def test_variants_roundtrip_at_full_scale(tmp_path):
    variants = [
        QueryVariant(f"t{t}", f"prof{p}", i, f"variant text {t} {p} {i}")
        for t in range(53)
        for p in range(6)
        for i in (1, 2, 3)
    ]
    assert len(variants) == 954
    p = tmp_path / "variants.jsonl"
    write_variants(variants, p)
    back = read_variants(p)
    assert back == variants


def test_variants_empty_roundtrip(tmp_path):
    p = tmp_path / "variants.jsonl"
    write_variants([], p)
    assert read_variants(p) == []


def test_read_variants_missing_key(tmp_path):
    p = tmp_path / "variants.jsonl"
    p.write_text('{"topic_id": "1", "profile_id": "a", "index": 1}\n', encoding="utf-8")
    with pytest.raises(ParseError, match=":1:.*text"):
        read_variants(p)


def test_read_variants_non_utf8(tmp_path):
    p = tmp_path / "variants.jsonl"
    p.write_bytes(b'{"topic_id": "1"\xff}\n')
    with pytest.raises(UnicodeDecodeError):
        read_variants(p)


def test_variant_index_bounds():
    with pytest.raises(ValidationError):
        QueryVariant("t", "p", 0, "text")
    with pytest.raises(ValidationError):
        QueryVariant("t", "p", 4, "text")


def test_expected_variant_count_published_sizes():
    assert expected_variant_count(53, 6, 3) == 954
    assert expected_variant_count(76, 8, 3) == 1824
    assert expected_variant_count(0, 8, 3) == 0


def test_expected_variant_count_rejects_negative():
    with pytest.raises(ValueError):
        expected_variant_count(-1, 6, 3)


def test_query_id_roundtrip():
    qid = variant_query_id("2001", "child", 2)
    assert qid == "2001__child__2"
    assert parse_variant_query_id(qid) == ("2001", "child", 2)
    assert parse_variant_query_id("2001") is None
    assert topic_of_query_id(qid) == "2001"
    assert topic_of_query_id("2001") == "2001"
    assert profile_of_query_id(qid) == "child"
    assert profile_of_query_id("2001") == "seed"


def test_query_id_rejects_separator_in_components():
    with pytest.raises(ValidationError):
        variant_query_id("a__b", "child", 1)


def test_verify_complete_accepts_full_grid():
    variants = [
        QueryVariant(t, p, i, "x")
        for t in ("t1", "t2")
        for p in ("a", "b")
        for i in (1, 2, 3)
    ]
    verify_complete(variants, ["t1", "t2"], ["a", "b"])


def test_verify_complete_flags_missing_pair():
    variants = [QueryVariant("t1", "a", i, "x") for i in (1, 2, 3)]
    with pytest.raises(ValidationError, match="missing pair"):
        verify_complete(variants, ["t1"], ["a", "b"])


def test_verify_complete_flags_bad_indices():
    variants = [QueryVariant("t1", "a", i, "x") for i in (1, 1, 2)]
    with pytest.raises(ValidationError, match="indices"):
        verify_complete(variants, ["t1"], ["a"])


def test_group_variants_sorts_by_index():
    variants = [
        QueryVariant("t1", "a", 3, "z"),
        QueryVariant("t1", "a", 1, "x"),
        QueryVariant("t1", "a", 2, "y"),
    ]
    groups = group_variants(variants)
    assert [v.index for v in groups[("t1", "a")]] == [1, 2, 3]


def test_profile_neutral_description_must_be_empty():
    Profile("neutral", "neutral", "Neutral", "")
    with pytest.raises(ValidationError):
        Profile("neutral", "neutral", "Neutral", "some text")


def test_run_record_rank_positive():
    with pytest.raises(ValidationError):
        RunRecord("s", "q", "p", 0, 1.0)


def test_annotations_roundtrip(tmp_path):
    records = [
        AnnotationRecord("pair1", "ann1", "similarity", "seed q", "variant q", "yes"),
        AnnotationRecord(
            "gold1",
            "ann1",
            "alignment",
            "seed q",
            "variant q",
            "child",
            is_gold=True,
            gold_answer="child",
        ),
    ]
    p = tmp_path / "annotations.jsonl"
    write_annotations(records, p)
    assert read_annotations(p) == records


def test_annotation_gold_requires_gold_answer():
    with pytest.raises(ValidationError):
        AnnotationRecord("g", "a", "similarity", "s", "v", "yes", is_gold=True)


def test_parse_passages_tsv(tmp_path):
    p = tmp_path / "passages.tsv"
    p.write_text("p1\tSome passage text.\np2\tAnother one.\n", encoding="utf-8")
    passages = parse_passages(p)
    assert passages == [Passage("p1", "Some passage text."), Passage("p2", "Another one.")]


def test_parse_passages_duplicate(tmp_path):
    p = tmp_path / "passages.tsv"
    p.write_text("p1\ta\np1\tb\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="duplicate"):
        parse_passages(p)
