"""Judgment coverage, LLM relevance labeling, and agreement with human qrels.

Labels live on the 4-point scale used by the human judgments. A label
store caches grades by (topic, passage) so a passage retrieved by many
systems and variants costs one provider call, and persists them as
TREC-style qrels with a source column plus a JSONL sidecar of raw
responses. Agreement metrics compare the two label sources: mean
absolute error and Cohen's kappa after binarizing, Krippendorff's
ordinal alpha on the full scale.
"""

from __future__ import annotations

import csv
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core import (
    ParseError,
    Passage,
    Qrel,
    RunRecord,
    Topic,
    ValidationError,
    parse_qrels,
    profile_of_query_id,
    read_jsonl,
    topic_of_query_id,
    write_jsonl,
    write_qrels,
)
from .genkit import GenerationError, Provider, RateLimiter

__all__ = [
    "CoverageReport",
    "AgreementReport",
    "LabelStore",
    "SCALE_DESCRIPTION",
    "coverage",
    "build_label_prompt",
    "load_label_template",
    "label",
    "label_topk",
    "binarize",
    "mae",
    "cohen_kappa",
    "krippendorff_alpha",
    "agreement_report",
    "paired_grades",
    "merge_qrels",
    "write_coverage_csv",
    "write_agreement_csv",
]

_LABEL_RESOURCE = "data/templates/label_prompt.txt"

GRADES = (0, 1, 2, 3)

SCALE_DESCRIPTION = (
    "Grade the passage on this scale. 3: the passage is dedicated to the "
    "need and contains the exact answer. 2: the passage answers a "
    "substantial part of the need. 1: the passage is on topic but does "
    "not answer the need. 0: the passage has nothing to do with the need."
)

MERGE_POLICIES = ("human-only", "llm-only", "human-preferred")


@dataclass(frozen=True)
class CoverageReport:
    system_id: str
    profile_id: str
    k: int
    judged: int
    total: int
    missing_fraction: float

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if not 0 <= self.judged <= self.total:
            raise ValidationError("judged count outside 0..total")
        if self.total < 1:
            raise ValidationError("coverage over zero pairs")
        if self.missing_fraction != 1 - self.judged / self.total:
            raise ValidationError(
                f"missing_fraction {self.missing_fraction} != 1 - {self.judged}/{self.total}"
            )


@dataclass(frozen=True)
class AgreementReport:
    n: int
    mae_binary: float
    kappa_binary: float
    mae_graded: float
    alpha_graded: float

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("agreement over zero pairs")
        if self.kappa_binary > 1 or self.alpha_graded > 1:
            raise ValidationError("kappa and alpha cannot exceed 1")
        if self.mae_binary < 0 or self.mae_graded < 0:
            raise ValidationError("MAE cannot be negative")


def coverage(
    runs: Sequence[RunRecord], qrels: Sequence[Qrel], k: int = 10
) -> list[CoverageReport]:
    """Fraction of top-k results without a human judgment.

    One row per (system, profile) plus an overall row labeled
    ("all", "all"). Run query ids are resolved to their topic, which is
    how qrels are keyed; seed-query runs count under the "seed" profile.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    human = {(q.query_id, q.passage_id) for q in qrels if q.source == "human"}
    counts: dict[tuple[str, str], list[int]] = {}
    for record in runs:
        if record.rank > k:
            continue
        profile = profile_of_query_id(record.query_id)
        topic = topic_of_query_id(record.query_id)
        judged = (topic, record.passage_id) in human
        for key in ((record.system_id, profile), ("all", "all")):
            bucket = counts.setdefault(key, [0, 0])
            bucket[0] += judged
            bucket[1] += 1
    reports = []
    for (system_id, profile_id), (judged, total) in sorted(counts.items()):
        reports.append(
            CoverageReport(system_id, profile_id, k, judged, total, 1 - judged / total)
        )
    return reports


def load_label_template(path=None) -> str:
    if path is None:
        text = resources.files("qvbench").joinpath(_LABEL_RESOURCE).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    lines = text.splitlines()
    start = 0
    while start < len(lines) and (
        not lines[start].strip() or lines[start].lstrip().startswith("#")
    ):
        start += 1
    body = "\n".join(lines[start:]).strip()
    if not body:
        raise ParseError("label template is empty")
    return body


def build_label_prompt(
    backstory: str,
    passage_text: str,
    scale_description: str = SCALE_DESCRIPTION,
    template: Optional[str] = None,
) -> str:
    """Labeling prompt around the backstory, not the seed query."""
    if not backstory or not backstory.strip():
        raise ValidationError(
            "topic has no backstory; generate one with genkit.generate_backstory first"
        )
    text = template if template is not None else load_label_template()
    for key, value in (
        ("backstory", backstory),
        ("passage", passage_text),
        ("scale_description", scale_description),
    ):
        text = text.replace("{" + key + "}", value)
    return text


class LabelStore:
    """Single-writer cache of LLM labels keyed by (topic_id, passage_id)."""

    def __init__(self):
        self._labels: dict[tuple[str, str], Qrel] = {}
        self._raw: dict[tuple[str, str], str] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._labels)

    def get(self, topic_id: str, passage_id: str) -> Optional[Qrel]:
        with self._lock:
            return self._labels.get((topic_id, passage_id))

    def put(self, topic_id: str, passage_id: str, grade: int, raw_response: str) -> Qrel:
        qrel = Qrel(topic_id, passage_id, grade, source="llm")
        with self._lock:
            existing = self._labels.get((topic_id, passage_id))
            if existing is not None:
                return existing
            self._labels[(topic_id, passage_id)] = qrel
            self._raw[(topic_id, passage_id)] = raw_response
        return qrel

    def qrels(self) -> list[Qrel]:
        with self._lock:
            return [self._labels[key] for key in sorted(self._labels)]

    def save(self, qrels_path, raw_path=None) -> None:
        write_qrels(self.qrels(), qrels_path, with_source=True)
        if raw_path is not None:
            with self._lock:
                rows = [
                    {
                        "topic_id": key[0],
                        "passage_id": key[1],
                        "grade": self._labels[key].grade,
                        "raw_response": self._raw.get(key, ""),
                    }
                    for key in sorted(self._labels)
                ]
            write_jsonl(rows, raw_path)

    @classmethod
    def load(cls, qrels_path, raw_path=None) -> "LabelStore":
        store = cls()
        for qrel in parse_qrels(qrels_path):
            if qrel.source != "llm":
                raise ValidationError(
                    f"label store holds llm labels only, found source {qrel.source!r}"
                )
            store._labels[(qrel.query_id, qrel.passage_id)] = qrel
        if raw_path is not None and Path(raw_path).exists():
            for row in read_jsonl(raw_path):
                key = (row["topic_id"], row["passage_id"])
                if key in store._labels:
                    store._raw[key] = row.get("raw_response", "")
        return store


def _parse_grade(text: str) -> int:
    stripped = text.strip()
    if not re.fullmatch(r"\d+", stripped):
        raise ParseError(f"expected a bare integer, got {text!r}")
    grade = int(stripped)
    if grade not in GRADES:
        raise ParseError(f"grade {grade} outside 0..3")
    return grade


def label(
    provider: Provider,
    topic: Topic,
    passage: Passage,
    store: LabelStore,
    template: Optional[str] = None,
    scale_description: str = SCALE_DESCRIPTION,
    max_retries: int = 3,
) -> Qrel:
    """One LLM grade for (topic, passage), served from the store when known."""
    cached = store.get(topic.topic_id, passage.passage_id)
    if cached is not None:
        return cached
    prompt = build_label_prompt(
        topic.backstory or "", passage.text, scale_description, template
    )
    raw_responses: list[str] = []
    for _ in range(max_retries + 1):
        raw = provider.complete(prompt)
        raw_responses.append(raw)
        try:
            grade = _parse_grade(raw)
        except ParseError:
            continue
        return store.put(topic.topic_id, passage.passage_id, grade, raw)
    raise GenerationError(
        f"no parseable grade for topic {topic.topic_id}, passage "
        f"{passage.passage_id} after {len(raw_responses)} attempts",
        raw_responses,
    )


def label_topk(
    provider: Provider,
    runs: Sequence[RunRecord],
    topics: Sequence[Topic],
    passages: Sequence[Passage],
    store: LabelStore,
    k: int = 10,
    template: Optional[str] = None,
    scale_description: str = SCALE_DESCRIPTION,
    max_retries: int = 3,
    max_in_flight: int = 1,
    rate_limit: Optional[float] = None,
) -> list[Qrel]:
    """Label every distinct (topic, passage) pair in the runs' top k."""
    if max_in_flight < 1:
        raise ValidationError("max_in_flight must be >= 1")
    topic_by = {t.topic_id: t for t in topics}
    passage_by = {p.passage_id: p for p in passages}
    needed: set[tuple[str, str]] = set()
    for record in runs:
        if record.rank > k:
            continue
        topic_id = topic_of_query_id(record.query_id)
        if topic_id not in topic_by:
            raise ValidationError(f"run references unknown topic {topic_id!r}")
        if record.passage_id not in passage_by:
            raise ValidationError(f"run references unknown passage {record.passage_id!r}")
        needed.add((topic_id, record.passage_id))
    limiter = RateLimiter(rate_limit) if rate_limit is not None else None

    def run_one(pair: tuple[str, str]) -> None:
        topic_id, passage_id = pair
        if store.get(topic_id, passage_id) is None and limiter is not None:
            limiter.acquire()
        label(
            provider,
            topic_by[topic_id],
            passage_by[passage_id],
            store,
            template,
            scale_description,
            max_retries,
        )

    ordered = sorted(needed)
    if max_in_flight == 1:
        for pair in ordered:
            run_one(pair)
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            for future in [pool.submit(run_one, pair) for pair in ordered]:
                future.result()
    labeled = [store.get(t, p) for t, p in ordered]
    assert all(q is not None for q in labeled)
    return labeled


def binarize(grade: int) -> int:
    """Grades 0 and 1 collapse to 0; grades 2 and 3 collapse to 1."""
    if grade not in GRADES:
        raise ValidationError(f"grade {grade} outside 0..3")
    return 0 if grade <= 1 else 1


def _checked_pairs(pairs, binary: bool) -> list[tuple[int, int]]:
    checked = []
    for human, llm in pairs:
        if human not in GRADES or llm not in GRADES:
            raise ValidationError(f"grade pair ({human}, {llm}) outside 0..3")
        if binary:
            checked.append((binarize(human), binarize(llm)))
        else:
            checked.append((human, llm))
    if not checked:
        raise ValidationError("no grade pairs")
    return checked


def mae(pairs: Iterable[tuple[int, int]], binary: bool = False) -> float:
    """Mean absolute difference, optionally after binarizing both sides."""
    checked = _checked_pairs(pairs, binary)
    return sum(abs(h - l) for h, l in checked) / len(checked)


def cohen_kappa(pairs: Iterable[tuple[int, int]], binary: bool = True) -> float:
    """Chance-corrected agreement with marginal-product expected agreement.

    Two constant, identical raters give p_o = p_e = 1; that degenerate
    case returns 0 rather than 0/0.
    """
    checked = _checked_pairs(pairs, binary)
    n = len(checked)
    p_observed = sum(1 for h, l in checked if h == l) / n
    categories = {v for pair in checked for v in pair}
    p_expected = 0.0
    for c in categories:
        p_expected += (
            sum(1 for h, _ in checked if h == c) * sum(1 for _, l in checked if l == c)
        ) / (n * n)
    if p_expected == 1:
        return 0.0
    return (p_observed - p_expected) / (1 - p_expected)


def krippendorff_alpha(
    pairs: Iterable[tuple[int, int]],
    metric: str = "ordinal",
    levels: Sequence[int] = GRADES,
) -> float:
    """Two-rater Krippendorff's alpha via the coincidence matrix.

    The ordinal squared difference between categories c and k is the
    squared sum of coincidence margins from c through k, minus half the
    two endpoint margins. Complete pairs only; there is no missing-data
    handling.
    """
    if metric != "ordinal":
        raise ValidationError(f"unsupported metric {metric!r}")
    checked = list(pairs)
    if len(checked) < 2:
        raise ValidationError("alpha needs at least 2 pairs")
    level_order = {level: i for i, level in enumerate(levels)}
    coincidence: dict[tuple[int, int], int] = {}
    margins: dict[int, int] = {}
    for a, b in checked:
        if a not in level_order or b not in level_order:
            raise ValidationError(f"grade pair ({a}, {b}) outside levels {tuple(levels)}")
        coincidence[(a, b)] = coincidence.get((a, b), 0) + 1
        coincidence[(b, a)] = coincidence.get((b, a), 0) + 1
        margins[a] = margins.get(a, 0) + 1
        margins[b] = margins.get(b, 0) + 1
    n = 2 * len(checked)

    def delta_sq(c: int, k: int) -> float:
        lo, hi = sorted((level_order[c], level_order[k]))
        between = sum(
            margins.get(level, 0) for level in levels if lo <= level_order[level] <= hi
        )
        return (between - (margins.get(c, 0) + margins.get(k, 0)) / 2) ** 2

    observed = 0.0
    expected = 0.0
    present = sorted(margins, key=level_order.get)
    for i, c in enumerate(present):
        for k in present[i + 1 :]:
            d2 = delta_sq(c, k)
            observed += coincidence.get((c, k), 0) * d2
            expected += margins[c] * margins[k] * d2
    if expected == 0:
        raise ValidationError(
            "zero expected disagreement: every grade is identical, alpha is undefined"
        )
    return 1 - (n - 1) * observed / expected


def agreement_report(pairs: Iterable[tuple[int, int]]) -> AgreementReport:
    checked = list(pairs)
    return AgreementReport(
        n=len(checked),
        mae_binary=mae(checked, binary=True),
        kappa_binary=cohen_kappa(checked, binary=True),
        mae_graded=mae(checked, binary=False),
        alpha_graded=krippendorff_alpha(checked),
    )


def paired_grades(
    human_qrels: Iterable[Qrel], llm_qrels: Iterable[Qrel]
) -> list[tuple[int, int]]:
    """(human, llm) grade pairs over the common (query, passage) keys."""
    human_by = {(q.query_id, q.passage_id): q.grade for q in human_qrels}
    llm_by = {(q.query_id, q.passage_id): q.grade for q in llm_qrels}
    return [(human_by[key], llm_by[key]) for key in sorted(human_by.keys() & llm_by.keys())]


def merge_qrels(
    human_qrels: Sequence[Qrel], llm_qrels: Sequence[Qrel], policy: str = "human-preferred"
) -> list[Qrel]:
    """Combine the two label sources under an explicit policy.

    human-only and llm-only pass one source through; human-preferred
    keeps every human judgment and fills unjudged (query, passage) keys
    from the LLM labels.
    """
    if policy not in MERGE_POLICIES:
        raise ValidationError(f"unknown merge policy {policy!r}")
    for q in human_qrels:
        if q.source != "human":
            raise ValidationError(f"human qrel list contains source {q.source!r}")
    for q in llm_qrels:
        if q.source != "llm":
            raise ValidationError(f"llm qrel list contains source {q.source!r}")
    if policy == "human-only":
        merged = list(human_qrels)
    elif policy == "llm-only":
        merged = list(llm_qrels)
    else:
        merged = list(human_qrels)
        covered = {(q.query_id, q.passage_id) for q in human_qrels}
        merged.extend(
            q for q in llm_qrels if (q.query_id, q.passage_id) not in covered
        )
    return sorted(merged, key=lambda q: (q.query_id, q.passage_id))


def write_coverage_csv(reports: Iterable[CoverageReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["system_id", "profile_id", "k", "judged", "total", "missing_fraction"]
        )
        for r in reports:
            writer.writerow(
                [r.system_id, r.profile_id, r.k, r.judged, r.total, repr(r.missing_fraction)]
            )


def write_agreement_csv(report: AgreementReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mae_binary", "kappa_binary", "mae_graded", "alpha_graded"])
        writer.writerow(
            [
                report.n,
                repr(report.mae_binary),
                repr(report.kappa_binary),
                repr(report.mae_graded),
                repr(report.alpha_graded),
            ]
        )
