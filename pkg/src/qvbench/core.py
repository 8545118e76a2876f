"""Domain types and file I/O for the variant-benchmarking pipeline.

Flat value objects plus parsers/writers for the on-disk formats: topics
as TSV or JSONL, runs and qrels as TREC plain text, variants and
annotations as JSONL. All ingested text is normalized to Unicode NFC so
downstream equality checks are stable.
"""

from __future__ import annotations

import json
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, fields
from typing import Iterable, Optional

PROFILE_METHODS = ("persona", "group", "textual", "neutral")
QREL_SOURCES = ("human", "llm")
ANNOTATION_TASKS = ("similarity", "alignment")

QUERY_ID_SEP = "__"


class ParseError(ValueError):
    """A file does not match its on-disk format contract."""


class ValidationError(ValueError):
    """Parsed data violates a domain invariant."""


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _norm_field(obj, name: str) -> None:
    value = getattr(obj, name)
    if isinstance(value, str):
        object.__setattr__(obj, name, nfc(value))


@dataclass(frozen=True)
class Topic:
    topic_id: str
    seed_query: str
    backstory: Optional[str] = None

    def __post_init__(self):
        for f in fields(self):
            _norm_field(self, f.name)
        if not self.topic_id:
            raise ValidationError("topic_id must be non-empty")
        if not self.seed_query.strip():
            raise ValidationError(f"topic {self.topic_id}: empty seed query")


@dataclass(frozen=True)
class Profile:
    profile_id: str
    method: str
    name: str
    description: str = ""

    def __post_init__(self):
        for f in fields(self):
            _norm_field(self, f.name)
        if self.method not in PROFILE_METHODS:
            raise ValidationError(f"unknown profile method {self.method!r}")
        if self.method == "neutral" and self.description:
            raise ValidationError("neutral profile must have empty description")


@dataclass(frozen=True)
class QueryVariant:
    topic_id: str
    profile_id: str
    index: int
    text: str

    def __post_init__(self):
        for f in fields(self):
            _norm_field(self, f.name)
        if not isinstance(self.index, int) or isinstance(self.index, bool):
            raise ValidationError("variant index must be an integer")
        if not 1 <= self.index <= 3:
            raise ValidationError(f"variant index {self.index} outside 1..3")
        if not self.text.strip():
            raise ValidationError(
                f"variant ({self.topic_id}, {self.profile_id}, {self.index}): empty text"
            )

    @property
    def query_id(self) -> str:
        return variant_query_id(self.topic_id, self.profile_id, self.index)


@dataclass(frozen=True)
class RunRecord:
    system_id: str
    query_id: str
    passage_id: str
    rank: int
    score: float

    def __post_init__(self):
        for f in fields(self):
            _norm_field(self, f.name)
        if self.rank < 1:
            raise ValidationError(f"rank {self.rank} must be >= 1")


@dataclass(frozen=True)
class Qrel:
    query_id: str
    passage_id: str
    grade: int
    source: str = "human"

    def __post_init__(self):
        for f in fields(self):
            _norm_field(self, f.name)
        if self.grade not in (0, 1, 2, 3):
            raise ValidationError(f"grade {self.grade} outside 0..3")
        if self.source not in QREL_SOURCES:
            raise ValidationError(f"unknown qrel source {self.source!r}")


@dataclass(frozen=True)
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    task: str
    seed_query: str
    variant: str
    answer: str
    is_gold: bool = False
    gold_answer: Optional[str] = None

    def __post_init__(self):
        for f in fields(self):
            _norm_field(self, f.name)
        if self.task not in ANNOTATION_TASKS:
            raise ValidationError(f"unknown annotation task {self.task!r}")
        if self.is_gold and self.gold_answer is None:
            raise ValidationError(f"gold pair {self.pair_id} lacks gold_answer")


@dataclass(frozen=True)
class Passage:
    passage_id: str
    text: str

    def __post_init__(self):
        for f in fields(self):
            _norm_field(self, f.name)
        if not self.passage_id:
            raise ValidationError("passage_id must be non-empty")
        if not self.text.strip():
            raise ValidationError(f"passage {self.passage_id}: empty text")


def variant_query_id(topic_id: str, profile_id: str, index: int) -> str:
    """Stable query id for a variant: topic__profile__index.

    Seed queries run under the bare topic_id, so the separator must not
    occur inside either component.
    """
    if QUERY_ID_SEP in topic_id or QUERY_ID_SEP in profile_id:
        raise ValidationError(f"{QUERY_ID_SEP!r} not allowed inside id components")
    return f"{topic_id}{QUERY_ID_SEP}{profile_id}{QUERY_ID_SEP}{index}"


def parse_variant_query_id(query_id: str):
    """(topic_id, profile_id, index) for variant ids, None for seed ids."""
    parts = query_id.split(QUERY_ID_SEP)
    if len(parts) != 3:
        return None
    topic_id, profile_id, index_text = parts
    if not (topic_id and profile_id and index_text.isdigit()):
        return None
    return topic_id, profile_id, int(index_text)


def topic_of_query_id(query_id: str) -> str:
    parsed = parse_variant_query_id(query_id)
    return parsed[0] if parsed else query_id


def profile_of_query_id(query_id: str, seed_profile_id: str = "seed") -> str:
    parsed = parse_variant_query_id(query_id)
    return parsed[1] if parsed else seed_profile_id


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.strip():
                yield lineno, line


def parse_topics(path, format: str = "tsv") -> list[Topic]:
    if format not in ("tsv", "jsonl"):
        raise ValueError(f"unknown topics format {format!r}")
    topics: list[Topic] = []
    seen: set[str] = set()
    for lineno, line in _lines(path):
        if format == "tsv":
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(
                    f"{path}:{lineno}: expected 2 tab-separated fields, got {len(cols)}"
                )
            topic = Topic(topic_id=cols[0].strip(), seed_query=cols[1])
        else:
            obj = _load_json_line(path, lineno, line)
            topic = _topic_from_obj(path, lineno, obj)
        if topic.topic_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate topic_id {topic.topic_id}")
        seen.add(topic.topic_id)
        topics.append(topic)
    return topics


def _load_json_line(path, lineno: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}:{lineno}: expected a JSON object")
    return obj


def _topic_from_obj(path, lineno: int, obj: dict) -> Topic:
    try:
        return Topic(
            topic_id=str(obj["topic_id"]),
            seed_query=obj["seed_query"],
            backstory=obj.get("backstory"),
        )
    except KeyError as exc:
        raise ParseError(f"{path}:{lineno}: missing key {exc.args[0]!r}") from exc


def write_topics(topics: Iterable[Topic], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in topics:
            obj = {"topic_id": t.topic_id, "seed_query": t.seed_query}
            if t.backstory is not None:
                obj["backstory"] = t.backstory
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def parse_trec_run(path) -> list[RunRecord]:
    """6-column TREC run lines: qid Q0 docid rank score tag.

    Validates per (tag, qid): ranks are exactly 1..n, scores do not
    increase with rank, and tied scores are ordered by ascending
    passage_id.
    """
    records: list[RunRecord] = []
    for lineno, line in _lines(path):
        cols = line.split()
        if len(cols) != 6:
            raise ParseError(f"{path}:{lineno}: expected 6 columns, got {len(cols)}")
        qid, _, docid, rank_text, score_text, tag = cols
        try:
            rank = int(rank_text)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer rank {rank_text!r}") from exc
        try:
            score = float(score_text)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric score {score_text!r}") from exc
        records.append(RunRecord(tag, qid, docid, rank, score))
    validate_run_records(records)
    records.sort(key=lambda r: (r.system_id, r.query_id, r.rank))
    return records


def validate_run_records(records: Iterable[RunRecord]) -> None:
    groups: dict[tuple[str, str], list[RunRecord]] = defaultdict(list)
    for rec in records:
        groups[(rec.system_id, rec.query_id)].append(rec)
    for (system_id, query_id), group in groups.items():
        where = f"run {system_id}, query {query_id}"
        ranks = sorted(r.rank for r in group)
        if ranks != list(range(1, len(group) + 1)):
            raise ValidationError(f"{where}: ranks are not a gap-free 1..n sequence")
        ordered = sorted(group, key=lambda r: r.rank)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.score > prev.score:
                raise ValidationError(f"{where}: score increases at rank {cur.rank}")
            if cur.score == prev.score and cur.passage_id < prev.passage_id:
                raise ValidationError(
                    f"{where}: tied scores out of passage_id order at rank {cur.rank}"
                )


def write_trec_run(records: Iterable[RunRecord], path) -> None:
    ordered = sorted(records, key=lambda r: (r.system_id, r.query_id, r.rank))
    with open(path, "w", encoding="utf-8") as fh:
        for r in ordered:
            fh.write(f"{r.query_id} Q0 {r.passage_id} {r.rank} {r.score!r} {r.system_id}\n")


def parse_qrels(path) -> list[Qrel]:
    """TREC qrels: qid 0 docid grade, with an optional 5th source column."""
    qrels: list[Qrel] = []
    seen: set[tuple[str, str, str]] = set()
    for lineno, line in _lines(path):
        cols = line.split()
        if len(cols) not in (4, 5):
            raise ParseError(f"{path}:{lineno}: expected 4 or 5 columns, got {len(cols)}")
        qid, _, docid, grade_text = cols[:4]
        source = cols[4] if len(cols) == 5 else "human"
        try:
            grade = int(grade_text)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer grade {grade_text!r}") from exc
        try:
            qrel = Qrel(qid, docid, grade, source)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        key = (qrel.query_id, qrel.passage_id, qrel.source)
        if key in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate qrel for {key}")
        seen.add(key)
        qrels.append(qrel)
    return qrels


def write_qrels(qrels: Iterable[Qrel], path, with_source: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in sorted(qrels, key=lambda q: (q.query_id, q.passage_id, q.source)):
            line = f"{q.query_id} 0 {q.passage_id} {q.grade}"
            if with_source:
                line += f" {q.source}"
            fh.write(line + "\n")


def parse_passages(path, format: str = "tsv") -> list[Passage]:
    if format not in ("tsv", "jsonl"):
        raise ValueError(f"unknown passages format {format!r}")
    passages: list[Passage] = []
    seen: set[str] = set()
    for lineno, line in _lines(path):
        if format == "tsv":
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(
                    f"{path}:{lineno}: expected 2 tab-separated fields, got {len(cols)}"
                )
            passage = Passage(passage_id=cols[0].strip(), text=cols[1])
        else:
            obj = _load_json_line(path, lineno, line)
            try:
                passage = Passage(passage_id=str(obj["passage_id"]), text=obj["text"])
            except KeyError as exc:
                raise ParseError(f"{path}:{lineno}: missing key {exc.args[0]!r}") from exc
        if passage.passage_id in seen:
            raise ValidationError(
                f"{path}:{lineno}: duplicate passage_id {passage.passage_id}"
            )
        seen.add(passage.passage_id)
        passages.append(passage)
    return passages


def write_passages(passages: Iterable[Passage], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in passages:
            fh.write(f"{p.passage_id}\t{p.text}\n")


_VARIANT_KEYS = ("topic_id", "profile_id", "index", "text")


def read_variants(path) -> list[QueryVariant]:
    variants: list[QueryVariant] = []
    for lineno, line in _lines(path):
        obj = _load_json_line(path, lineno, line)
        missing = [k for k in _VARIANT_KEYS if k not in obj]
        if missing:
            raise ParseError(f"{path}:{lineno}: missing key {missing[0]!r}")
        index = obj["index"]
        if not isinstance(index, int) or isinstance(index, bool):
            raise ParseError(f"{path}:{lineno}: index must be an integer")
        try:
            variants.append(
                QueryVariant(
                    topic_id=str(obj["topic_id"]),
                    profile_id=str(obj["profile_id"]),
                    index=index,
                    text=obj["text"],
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return variants


def write_variants(variants: Iterable[QueryVariant], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in variants:
            obj = {
                "topic_id": v.topic_id,
                "profile_id": v.profile_id,
                "index": v.index,
                "text": v.text,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


_ANNOTATION_KEYS = ("pair_id", "annotator_id", "task", "seed_query", "variant", "answer")


def read_annotations(path) -> list[AnnotationRecord]:
    records: list[AnnotationRecord] = []
    for lineno, line in _lines(path):
        obj = _load_json_line(path, lineno, line)
        missing = [k for k in _ANNOTATION_KEYS if k not in obj]
        if missing:
            raise ParseError(f"{path}:{lineno}: missing key {missing[0]!r}")
        try:
            records.append(
                AnnotationRecord(
                    pair_id=str(obj["pair_id"]),
                    annotator_id=str(obj["annotator_id"]),
                    task=obj["task"],
                    seed_query=obj["seed_query"],
                    variant=obj["variant"],
                    answer=str(obj["answer"]),
                    is_gold=bool(obj.get("is_gold", False)),
                    gold_answer=obj.get("gold_answer"),
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return records


def write_annotations(records: Iterable[AnnotationRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "pair_id": r.pair_id,
                "annotator_id": r.annotator_id,
                "task": r.task,
                "seed_query": r.seed_query,
                "variant": r.variant,
                "answer": r.answer,
                "is_gold": r.is_gold,
            }
            if r.gold_answer is not None:
                obj["gold_answer"] = r.gold_answer
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_jsonl(path) -> list[dict]:
    return [_load_json_line(path, lineno, line) for lineno, line in _lines(path)]


def write_jsonl(objects: Iterable[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def expected_variant_count(num_seeds: int, num_profiles: int, per_pair: int = 3) -> int:
    for name, value in (
        ("num_seeds", num_seeds),
        ("num_profiles", num_profiles),
        ("per_pair", per_pair),
    ):
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    return num_seeds * num_profiles * per_pair


def group_variants(
    variants: Iterable[QueryVariant],
) -> dict[tuple[str, str], list[QueryVariant]]:
    groups: dict[tuple[str, str], list[QueryVariant]] = defaultdict(list)
    for v in variants:
        groups[(v.topic_id, v.profile_id)].append(v)
    return {key: sorted(vs, key=lambda v: v.index) for key, vs in groups.items()}


def verify_complete(
    variants: Iterable[QueryVariant],
    topic_ids: Iterable[str],
    profile_ids: Iterable[str],
    per_pair: int = 3,
) -> None:
    """Check that every (topic, profile) pair has exactly indices 1..per_pair."""
    topic_ids = list(topic_ids)
    profile_ids = list(profile_ids)
    groups = group_variants(variants)
    known = {(t, p) for t in topic_ids for p in profile_ids}
    want = list(range(1, per_pair + 1))
    problems: list[str] = []
    for key, vs in sorted(groups.items()):
        if key not in known:
            problems.append(f"unexpected pair {key}")
        elif [v.index for v in vs] != want:
            problems.append(f"pair {key} has indices {[v.index for v in vs]}")
    for key in sorted(known - set(groups)):
        problems.append(f"missing pair {key}")
    if problems:
        shown = "; ".join(problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise ValidationError(f"incomplete variant set: {shown}{more}")
