"""Cross-profile agreement taxonomy over pairwise system comparisons.

For each profile a two-way (topic, system) ANOVA plus Tukey HSD decides
which system pairs differ significantly and in which direction. A pair
of profiles then classifies every system pair into one of six classes:

  AA  both significant, same winner      AD  both significant, opposite
  MA  one significant, same direction    MD  one significant, opposite
  PA  neither significant, same dir.     PD  neither, opposite

Fractions are exact rationals over n*(n-1)/2 system pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .anova import EffectivenessMatrix, anova
from .tukey import TukeyResult, tukey_hsd

logger = logging.getLogger(__name__)

AGREEMENT_CLASSES = ("AA", "AD", "MA", "MD", "PA", "PD")


class PairVerdict(NamedTuple):
    system_a: str
    system_b: str
    diff: float
    significant: bool


def system_verdicts(
    matrix: EffectivenessMatrix, profile: str, alpha: float = 0.05
) -> tuple[dict[tuple[str, str], PairVerdict], TukeyResult]:
    """Significance verdicts for every system pair under one profile."""
    sub = matrix.subset(profiles=[profile])
    if len(sub) == 0:
        raise ValueError(f"no cells for profile {profile!r}")
    table = anova(sub, ("topic", "system"), with_interactions=True)
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for (t, s, p, i), v in sub.items():
        sums[s] = sums.get(s, 0.0) + v
        counts[s] = counts.get(s, 0) + 1
    means = {s: sums[s] / counts[s] for s in sums}
    n_per_group = len(sub) // len(means)
    tukey = tukey_hsd(means, n_per_group, table.ms_error, table.df_error, alpha)
    verdicts = {
        (p.group_a, p.group_b): PairVerdict(p.group_a, p.group_b, p.diff, p.significant)
        for p in tukey.pairs
    }
    return verdicts, tukey


@dataclass(frozen=True)
class ProfilePairAgreement:
    profile_a: str
    profile_b: str
    counts: dict
    fractions: dict
    total_pairs: int

    def fraction(self, cls: str) -> Fraction:
        return self.fractions[cls]


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _classify(va: PairVerdict, vb: PairVerdict) -> str:
    sign_a, sign_b = _sign(va.diff), _sign(vb.diff)
    if sign_a == 0 or sign_b == 0:
        logger.info(
            "equal means for pair (%s, %s): direction tie-broken as agreement",
            va.system_a,
            va.system_b,
        )
    same_direction = sign_a == sign_b or sign_a == 0 or sign_b == 0
    if va.significant and vb.significant:
        return "AA" if same_direction else "AD"
    if va.significant or vb.significant:
        return "MA" if same_direction else "MD"
    return "PA" if same_direction else "PD"


def agreement_from_verdicts(
    profile_a: str,
    profile_b: str,
    verdicts_a: dict,
    verdicts_b: dict,
) -> ProfilePairAgreement:
    """Classify system pairs from precomputed per-profile verdicts.

    Lets a sweep over many profile pairs run each profile's ANOVA and
    Tukey test once instead of once per pairing.
    """
    if set(verdicts_a) != set(verdicts_b):
        raise ValueError("profiles cover different system sets")
    if not verdicts_a:
        raise ValueError("need at least two systems")
    counts = {cls: 0 for cls in AGREEMENT_CLASSES}
    for pair in verdicts_a:
        counts[_classify(verdicts_a[pair], verdicts_b[pair])] += 1
    total = len(verdicts_a)
    fractions = {cls: Fraction(counts[cls], total) for cls in AGREEMENT_CLASSES}
    return ProfilePairAgreement(
        profile_a=profile_a,
        profile_b=profile_b,
        counts=counts,
        fractions=fractions,
        total_pairs=total,
    )


def pairwise_profile_agreement(
    matrix: EffectivenessMatrix,
    profile_a: str,
    profile_b: str,
    alpha: float = 0.05,
) -> ProfilePairAgreement:
    """Classify every system pair across two profiles' Tukey verdicts."""
    verdicts_a, _ = system_verdicts(matrix, profile_a, alpha)
    verdicts_b, _ = system_verdicts(matrix, profile_b, alpha)
    return agreement_from_verdicts(profile_a, profile_b, verdicts_a, verdicts_b)
