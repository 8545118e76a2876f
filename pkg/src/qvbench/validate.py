"""Automatic checks for query transformations and human-annotation scoring.

Two validators cover the lexical transformation profiles: word-order
change (same token multiset, different sequence) and misspelling (an
out-of-dictionary token whose correction is a seed token). Spell
correction is hermetic: a bundled word list plus Damerau-Levenshtein
distance in the optimal-string-alignment variant, capped at 2.

Annotation scoring drops any annotator who missed a gold question,
excludes pairs left without two annotators, and computes consensus
accuracy per profile for the similarity and alignment tasks.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Collection, Iterable, Optional, Sequence

from .core import (
    AnnotationRecord,
    QueryVariant,
    Profile,
    Topic,
    ValidationError,
    parse_variant_query_id,
)
from .textkit import tokenize

__all__ = [
    "ValidationVerdict",
    "ConsensusReport",
    "load_dictionary",
    "osa_distance",
    "spell_correct",
    "validate_order",
    "validate_misspelling",
    "validate_variants",
    "filter_by_gold",
    "incomplete_pairs",
    "similarity_accuracy",
    "alignment_accuracy",
    "sample_for_annotation",
    "write_verdicts_csv",
    "write_consensus_csv",
    "SIMILARITY_ANSWERS",
    "EQUALLY_LIKELY",
]

_DICT_RESOURCE = "data/words.txt"

SIMILARITY_ANSWERS = ("similar", "dissimilar")
EQUALLY_LIKELY = "equally likely"

# Profiles whose variants are checked mechanically rather than by the
# similarity task; matched on the profile name, case-insensitive.
_CHECKED_PROFILES = {"order": "order", "misspelling": "misspelling"}


@dataclass(frozen=True)
class ValidationVerdict:
    topic_id: str
    profile_id: str
    index: int
    check: str
    valid: bool
    detail: str = ""

    def __post_init__(self):
        if self.check not in ("order", "misspelling"):
            raise ValidationError(f"unknown check {self.check!r}")
        if not self.valid and not self.detail:
            raise ValidationError("failed verdicts must carry a detail message")


@dataclass(frozen=True)
class ConsensusReport:
    task: str
    profile_id: str
    n_pairs: int
    n_agree_correct: int
    accuracy: float
    n_disagreements: int

    def __post_init__(self):
        if self.task not in ("similarity", "alignment"):
            raise ValidationError(f"unknown task {self.task!r}")
        if not 0 <= self.n_agree_correct <= self.n_pairs:
            raise ValidationError("agreement count outside 0..n_pairs")
        if not 0 <= self.n_disagreements <= self.n_pairs:
            raise ValidationError("disagreement count outside 0..n_pairs")
        expected = self.n_agree_correct / self.n_pairs if self.n_pairs else 0.0
        if self.accuracy != expected:
            raise ValidationError(
                f"accuracy {self.accuracy} != {self.n_agree_correct}/{self.n_pairs}"
            )


def load_dictionary(path=None) -> frozenset[str]:
    """Newline-delimited word list, lowercased; bundled list by default."""
    if path is None:
        text = resources.files("qvbench").joinpath(_DICT_RESOURCE).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = frozenset(
        stripped.lower()
        for line in text.splitlines()
        if (stripped := line.strip()) and not stripped.startswith("#")
    )
    if not words:
        raise ValidationError("dictionary is empty")
    return words


def osa_distance(a: str, b: str) -> int:
    """Damerau-Levenshtein distance, optimal-string-alignment variant.

    Adjacent transpositions count as one edit but no substring is edited
    twice, so osa_distance("ca", "abc") is 3, not 2.
    """
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2: list[int] = []
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                d = min(d, prev2[j - 2] + 1)
            cur[j] = d
        prev2, prev = prev, cur
    return prev[lb]


def spell_correct(word: str, dictionary: Collection[str]) -> Optional[str]:
    """Nearest dictionary word within distance 2, or None.

    A word already in the dictionary corrects to itself. Ties at the
    minimum distance break to the lexicographically smallest candidate.
    """
    if word in dictionary:
        return word
    best: Optional[str] = None
    best_dist = 3
    for candidate in sorted(dictionary):
        if abs(len(candidate) - len(word)) >= best_dist:
            continue
        dist = osa_distance(word, candidate)
        if dist < best_dist:
            best, best_dist = candidate, dist
            if best_dist == 1:
                # nothing below 1 exists for an out-of-dictionary word,
                # and later candidates sort after this one
                break
    return best


def validate_order(seed: str, variant: str) -> bool:
    """True iff the variant reorders the seed's tokens without changing them."""
    s = tokenize(seed)
    v = tokenize(variant)
    return s != v and sorted(s) == sorted(v)


def validate_misspelling(seed: str, variant: str, dictionary: Collection[str]) -> bool:
    """True iff some out-of-dictionary variant token corrects to a seed token."""
    seed_tokens = set(tokenize(seed))
    for token in tokenize(variant):
        if token in dictionary:
            continue
        corrected = spell_correct(token, dictionary)
        if corrected is not None and corrected in seed_tokens:
            return True
    return False


def validate_variants(
    topics: Iterable[Topic],
    variants: Iterable[QueryVariant],
    profiles: Iterable[Profile],
    dictionary: Collection[str],
) -> list[ValidationVerdict]:
    """Run the mechanical check matching each variant's profile.

    Only the order and misspelling profiles have a mechanical check;
    variants of other profiles produce no verdict.
    """
    topic_by = {t.topic_id: t for t in topics}
    profile_by = {p.profile_id: p for p in profiles}
    verdicts: list[ValidationVerdict] = []
    for v in variants:
        profile = profile_by.get(v.profile_id)
        if profile is None:
            raise ValidationError(f"variant references unknown profile {v.profile_id!r}")
        check = _CHECKED_PROFILES.get(profile.name.lower())
        if check is None:
            continue
        topic = topic_by.get(v.topic_id)
        if topic is None:
            raise ValidationError(f"variant references unknown topic {v.topic_id!r}")
        if check == "order":
            ok = validate_order(topic.seed_query, v.text)
            if ok:
                detail = ""
            elif tokenize(topic.seed_query) == tokenize(v.text):
                detail = "variant repeats the seed token sequence"
            else:
                detail = "token multisets differ"
        else:
            ok = validate_misspelling(topic.seed_query, v.text, dictionary)
            detail = "" if ok else "no out-of-dictionary token corrects to a seed token"
        verdicts.append(
            ValidationVerdict(v.topic_id, v.profile_id, v.index, check, ok, detail)
        )
    return verdicts


def filter_by_gold(
    annotations: Iterable[AnnotationRecord],
) -> tuple[frozenset[str], frozenset[str]]:
    """Split annotators into (kept, rejected) by their gold answers.

    One wrong gold answer rejects the annotator entirely; annotators who
    saw no gold question are kept. Applying the filter to an already
    filtered batch changes nothing.
    """
    kept: set[str] = set()
    rejected: set[str] = set()
    for record in annotations:
        kept.add(record.annotator_id)
        if record.is_gold and record.answer != record.gold_answer:
            rejected.add(record.annotator_id)
    return frozenset(kept - rejected), frozenset(rejected)


def _scored_pairs(
    annotations: Sequence[AnnotationRecord], task: str
) -> dict[str, list[AnnotationRecord]]:
    """Non-gold records of kept annotators, grouped by pair, two per pair."""
    kept, _ = filter_by_gold(annotations)
    grouped: dict[str, list[AnnotationRecord]] = {}
    for record in annotations:
        if record.task != task or record.is_gold:
            continue
        if record.annotator_id not in kept:
            continue
        grouped.setdefault(record.pair_id, []).append(record)
    for pair_id, records in grouped.items():
        if len(records) > 2:
            raise ValidationError(f"pair {pair_id} has more than two annotators")
    return {p: r for p, r in grouped.items() if len(r) == 2}


def incomplete_pairs(
    annotations: Sequence[AnnotationRecord], task: str
) -> list[str]:
    """Pairs left with fewer than two kept annotators, sorted by pair id."""
    kept, _ = filter_by_gold(annotations)
    counts: dict[str, int] = {}
    for record in annotations:
        if record.task != task or record.is_gold:
            continue
        counts.setdefault(record.pair_id, 0)
        if record.annotator_id in kept:
            counts[record.pair_id] += 1
    return sorted(p for p, n in counts.items() if n < 2)


def _profile_of_pair(pair_id: str) -> Optional[str]:
    parsed = parse_variant_query_id(pair_id)
    return parsed[1] if parsed else None


def similarity_accuracy(
    annotations: Sequence[AnnotationRecord], profile_id: str
) -> ConsensusReport:
    """Fraction of a profile's pairs both annotators marked similar.

    Pair ids are variant query ids, which is how records are matched to
    the profile. A split verdict counts as dissimilar and as one
    disagreement. Gold questions and incomplete pairs stay out of the
    denominator.
    """
    pairs = _scored_pairs(annotations, "similarity")
    n_pairs = 0
    n_agree = 0
    n_disagree = 0
    for pair_id, records in sorted(pairs.items()):
        if _profile_of_pair(pair_id) != profile_id:
            continue
        answers = []
        for record in records:
            if record.answer not in SIMILARITY_ANSWERS:
                raise ValidationError(
                    f"pair {pair_id}: unknown similarity answer {record.answer!r}"
                )
            answers.append(record.answer)
        n_pairs += 1
        if answers[0] != answers[1]:
            n_disagree += 1
        elif answers[0] == "similar":
            n_agree += 1
    accuracy = n_agree / n_pairs if n_pairs else 0.0
    return ConsensusReport("similarity", profile_id, n_pairs, n_agree, accuracy, n_disagree)


def alignment_accuracy(
    annotations: Sequence[AnnotationRecord],
    profile_id: str,
    method: str,
    known_answers: Optional[Collection[str]] = None,
) -> ConsensusReport:
    """Fraction of pairs where both annotators identified the profile.

    An "equally likely" answer maps to the correct profile before
    comparison, so two such answers, or one plus the correct pick, both
    count as correct. Any other combination is incorrect. When
    known_answers is given, answers outside it (plus "equally likely")
    raise; otherwise labels are taken at face value.
    """
    if method not in ("persona", "group"):
        raise ValidationError(f"alignment method must be persona or group, got {method!r}")
    pairs = _scored_pairs(annotations, "alignment")
    n_pairs = 0
    n_correct = 0
    n_disagree = 0
    for pair_id, records in sorted(pairs.items()):
        if _profile_of_pair(pair_id) != profile_id:
            continue
        mapped = []
        for record in records:
            answer = record.answer
            if (
                known_answers is not None
                and answer != EQUALLY_LIKELY
                and answer not in known_answers
            ):
                raise ValidationError(
                    f"pair {pair_id}: unknown alignment answer {answer!r}"
                )
            mapped.append(profile_id if answer == EQUALLY_LIKELY else answer)
        n_pairs += 1
        if mapped[0] != mapped[1]:
            n_disagree += 1
        elif mapped[0] == profile_id:
            n_correct += 1
    accuracy = n_correct / n_pairs if n_pairs else 0.0
    return ConsensusReport("alignment", profile_id, n_pairs, n_correct, accuracy, n_disagree)


def sample_for_annotation(
    variants: Sequence[QueryVariant], fraction: float = 0.10, seed: int = 0
) -> list[QueryVariant]:
    """Per-profile uniform sample without replacement, round-half-up sizes."""
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction {fraction} outside (0, 1]")
    by_profile: dict[str, list[QueryVariant]] = {}
    for v in variants:
        by_profile.setdefault(v.profile_id, []).append(v)
    rng = random.Random(seed)
    sampled: list[QueryVariant] = []
    for profile_id in sorted(by_profile):
        group = sorted(by_profile[profile_id], key=lambda v: (v.topic_id, v.index))
        size = int(math.floor(len(group) * fraction + 0.5))
        sampled.extend(rng.sample(group, size))
    return sampled


def write_verdicts_csv(verdicts: Iterable[ValidationVerdict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "profile_id", "index", "check", "valid", "detail"])
        for v in verdicts:
            writer.writerow(
                [v.topic_id, v.profile_id, v.index, v.check, str(v.valid).lower(), v.detail]
            )


def write_consensus_csv(reports: Iterable[ConsensusReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["task", "profile_id", "n_pairs", "n_agree_correct", "accuracy", "n_disagreements"]
        )
        for r in reports:
            writer.writerow(
                [r.task, r.profile_id, r.n_pairs, r.n_agree_correct, repr(r.accuracy), r.n_disagreements]
            )
