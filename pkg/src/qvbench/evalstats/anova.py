"""Balanced fixed-effects N-way ANOVA over NDCG matrices.

The effectiveness matrix is indexed by (topic, system, profile, variant
index). Any subset of {topic, system, profile} can serve as factors;
whatever remains acts as replication. Designs must be complete and
balanced; with a single replicate the highest-order interaction is
pooled into the error term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .special import f_sf, t_quantile
from .tukey import TukeyResult, tukey_hsd

AXES = ("topic", "system", "profile")


class EffectivenessMatrix:
    """NDCG@k cells keyed by (topic, system, profile, variant index)."""

    def __init__(self, k: int = 10):
        self.k = k
        self._cells: dict[tuple[str, str, str, int], float] = {}

    def set(self, topic: str, system: str, profile: str, index: int, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"cell value {value} outside [0, 1]")
        key = (topic, system, profile, index)
        if key in self._cells:
            raise ValueError(f"duplicate cell {key}")
        self._cells[key] = value

    def get(self, topic: str, system: str, profile: str, index: int) -> float:
        return self._cells[(topic, system, profile, index)]

    def __len__(self) -> int:
        return len(self._cells)

    def items(self):
        return self._cells.items()

    @classmethod
    def from_scores(
        cls, scores: Iterable[tuple[str, str, str, int, float]], k: int = 10
    ) -> "EffectivenessMatrix":
        matrix = cls(k=k)
        for topic, system, profile, index, value in scores:
            matrix.set(topic, system, profile, index, value)
        return matrix

    def _axis_values(self, axis: int) -> list:
        return sorted({key[axis] for key in self._cells})

    @property
    def topics(self) -> list[str]:
        return self._axis_values(0)

    @property
    def systems(self) -> list[str]:
        return self._axis_values(1)

    @property
    def profiles(self) -> list[str]:
        return self._axis_values(2)

    @property
    def indices(self) -> list[int]:
        return self._axis_values(3)

    def subset(
        self,
        topics: Optional[Iterable[str]] = None,
        systems: Optional[Iterable[str]] = None,
        profiles: Optional[Iterable[str]] = None,
    ) -> "EffectivenessMatrix":
        keep_t = set(topics) if topics is not None else None
        keep_s = set(systems) if systems is not None else None
        keep_p = set(profiles) if profiles is not None else None
        out = EffectivenessMatrix(k=self.k)
        for (t, s, p, i), v in self._cells.items():
            if keep_t is not None and t not in keep_t:
                continue
            if keep_s is not None and s not in keep_s:
                continue
            if keep_p is not None and p not in keep_p:
                continue
            out._cells[(t, s, p, i)] = v
        return out

    def to_array(self, factors: Sequence[str]):
        """Dense (levels..., replicates) array for a balanced design.

        Raises when a factor-level combination is missing or replicate
        counts differ between cells.
        """
        factor_axes = [AXES.index(f) for f in factors]
        levels = [self._axis_values(a) for a in factor_axes]
        positions = [{lv: i for i, lv in enumerate(level)} for level in levels]
        buckets: dict[tuple, list] = {}
        for key, value in self._cells.items():
            combo = tuple(key[a] for a in factor_axes)
            rep_key = tuple(v for a, v in enumerate(key) if a not in factor_axes)
            buckets.setdefault(combo, []).append((rep_key, value))
        expected = 1
        for level in levels:
            expected *= len(level)
        if len(buckets) != expected:
            have = set(buckets)
            for combo in np.ndindex(*[len(level) for level in levels]):
                cell = tuple(levels[i][combo[i]] for i in range(len(levels)))
                if cell not in have:
                    raise ValueError(f"missing cell {dict(zip(factors, cell))}")
        counts = {len(vs) for vs in buckets.values()}
        if len(counts) != 1:
            bad = min(buckets, key=lambda c: len(buckets[c]))
            raise ValueError(
                f"unbalanced design: cell {dict(zip(factors, bad))} has "
                f"{len(buckets[bad])} observations, others differ"
            )
        r = counts.pop()
        shape = [len(level) for level in levels] + [r]
        array = np.empty(shape, dtype=float)
        for combo, values in buckets.items():
            idx = tuple(positions[i][combo[i]] for i in range(len(combo)))
            values.sort(key=lambda pair: pair[0])
            array[idx] = [v for _, v in values]
        return array, dict(zip(factors, levels))


@dataclass(frozen=True)
class AnovaRow:
    source: str
    ss: float
    df: int
    ms: float
    f: Optional[float]
    p: Optional[float]
    omega_sq_partial: Optional[float]


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple
    error: AnovaRow
    total: AnovaRow
    grand_mean: float
    n_observations: int

    @property
    def ms_error(self) -> float:
        return self.error.ms

    @property
    def df_error(self) -> int:
        return self.error.df

    def row(self, source: str) -> AnovaRow:
        for row in self.rows:
            if row.source == source:
                return row
        raise KeyError(source)

    def all_rows(self) -> list[AnovaRow]:
        return list(self.rows) + [self.error, self.total]


def _normalize_factors(factors: Sequence[str]) -> list[str]:
    for f in factors:
        if f not in AXES:
            raise ValueError(f"unknown factor {f!r}")
    ordered = [f for f in AXES if f in factors]
    if not ordered:
        raise ValueError("need at least one factor")
    return ordered


def anova(
    matrix: EffectivenessMatrix,
    factors: Sequence[str],
    with_interactions: bool = True,
) -> AnovaTable:
    """Balanced fixed-effects decomposition with F and partial omega squared.

    With replication the error term is the within-cell variation; with a
    single replicate the highest-order interaction is pooled into error.
    """
    names = _normalize_factors(factors)
    y, levels = matrix.to_array(names)
    n_total = y.size
    r = y.shape[-1]
    m = len(names)
    sizes = [len(levels[f]) for f in names]
    for f, size in zip(names, sizes):
        if size < 2:
            raise ValueError(f"factor {f!r} has a single level")
    grand = float(y.mean())
    rep_axis = m

    def marginal(subset: tuple[int, ...]) -> np.ndarray:
        drop = tuple(a for a in range(m) if a not in subset) + (rep_axis,)
        return y.mean(axis=drop, keepdims=True)

    means = {(): np.full([1] * (m + 1), grand)}
    all_subsets: list[tuple[int, ...]] = []
    for size in range(1, m + 1):
        for subset in combinations(range(m), size):
            all_subsets.append(subset)
            means[subset] = marginal(subset)

    if with_interactions:
        model_subsets = all_subsets
    else:
        model_subsets = [s for s in all_subsets if len(s) == 1]

    pooled_top = with_interactions and r == 1 and m > 1
    if pooled_top:
        top = tuple(range(m))
        model_subsets = [s for s in model_subsets if s != top]

    ss: dict[tuple[int, ...], float] = {}
    df: dict[tuple[int, ...], int] = {}
    for subset in model_subsets:
        effect = np.zeros([1] * (m + 1))
        for size in range(len(subset) + 1):
            for sub in combinations(subset, size):
                sign = (-1) ** (len(subset) - len(sub))
                effect = effect + sign * means[sub]
        ss[subset] = float((effect**2).sum()) * (n_total / effect.size)
        d = 1
        for a in subset:
            d *= sizes[a] - 1
        df[subset] = d

    ss_total = float(((y - grand) ** 2).sum())
    df_total = n_total - 1
    ss_model = sum(ss.values())
    df_model = sum(df.values())
    ss_error = max(ss_total - ss_model, 0.0)
    df_error = df_total - df_model
    if df_error < 1:
        raise ValueError(
            "zero error degrees of freedom: add replication or drop interactions"
        )
    ms_error = ss_error / df_error

    rows = []
    for subset in model_subsets:
        source = "*".join(names[a] for a in subset)
        ss_s, df_s = ss[subset], df[subset]
        ms_s = ss_s / df_s
        if ms_error > 0:
            f_stat = ms_s / ms_error
            p = f_sf(f_stat, df_s, df_error)
        elif ss_s > 0:
            f_stat, p = math.inf, 0.0
        else:
            f_stat, p = 0.0, 1.0
        if ss_s == 0.0 and ms_error == 0.0:
            omega = 0.0
        else:
            omega = omega_squared_partial(ss_s, df_s, ms_error, n_total)
        rows.append(AnovaRow(source, ss_s, df_s, ms_s, f_stat, p, omega))

    error_row = AnovaRow("error", ss_error, df_error, ms_error, None, None, None)
    total_row = AnovaRow("total", ss_total, df_total, ss_total / df_total, None, None, None)
    return AnovaTable(
        rows=tuple(rows),
        error=error_row,
        total=total_row,
        grand_mean=grand,
        n_observations=n_total,
    )


def omega_squared_partial(ss_effect: float, df_effect: int, ms_error: float, n: int) -> float:
    """Partial omega squared: (SS - df*MSe) / (SS + (N - df)*MSe)."""
    if n <= df_effect:
        raise ValueError("n must exceed df_effect")
    if ms_error < 0:
        raise ValueError("ms_error must be >= 0")
    if ms_error == 0.0:
        if ss_effect > 0.0:
            return 1.0
        raise ValueError("degenerate: no effect and no error variance")
    denom = ss_effect + (n - df_effect) * ms_error
    if denom <= 0.0:
        raise ValueError("degenerate denominator in partial omega squared")
    return (ss_effect - df_effect * ms_error) / denom


def classify_omega(omega: float) -> str:
    """Effect-size bands: large >= 0.14, small <= 0.06, medium between."""
    if omega >= 0.14:
        return "large"
    if omega <= 0.06:
        return "small"
    return "medium"


@dataclass(frozen=True)
class MarginalMean:
    level: str
    mean: float
    ci_low: float
    ci_high: float


def marginal_means(
    matrix: EffectivenessMatrix,
    axis: str = "profile",
    alpha: float = 0.05,
    ci: str = "t",
) -> tuple[list[MarginalMean], Optional[TukeyResult]]:
    """Per-level means on one axis with intervals from the companion ANOVA.

    Factors are every axis with at least two observed levels; the rest
    (variant index always) provide replication. Intervals are t-based by
    default; ci="tukey" switches to simultaneous half-widths.
    """
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}")
    axis_pos = AXES.index(axis)
    levels = matrix._axis_values(axis_pos)
    if not levels:
        raise ValueError(f"matrix has no {axis} levels")
    factor_names = [f for f in AXES if len(matrix._axis_values(AXES.index(f))) >= 2]
    if not factor_names:
        raise ValueError("matrix is a single cell group: nothing to analyse")
    table = anova(matrix, factor_names, with_interactions=True)
    sums: dict[str, float] = {lv: 0.0 for lv in levels}
    counts: dict[str, int] = {lv: 0 for lv in levels}
    for key, value in matrix.items():
        sums[key[axis_pos]] += value
        counts[key[axis_pos]] += 1
    n_per_group = counts[levels[0]]
    if any(c != n_per_group for c in counts.values()):
        raise ValueError(f"unbalanced {axis} groups: {counts}")
    group_means = {lv: sums[lv] / counts[lv] for lv in levels}
    if len(levels) >= 2:
        tukey = tukey_hsd(
            group_means, n_per_group, table.ms_error, table.df_error, alpha, ci
        )
        cis = tukey.cis
    else:
        tukey = None
        half = t_quantile(1 - alpha / 2, table.df_error) * math.sqrt(
            table.ms_error / n_per_group
        )
        cis = {levels[0]: (group_means[levels[0]] - half, group_means[levels[0]] + half)}
    result = [
        MarginalMean(lv, group_means[lv], cis[lv][0], cis[lv][1]) for lv in levels
    ]
    return result, tukey
