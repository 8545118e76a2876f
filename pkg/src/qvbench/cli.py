"""Pipeline orchestration: one subcommand per stage, artifacts as files.

Every stage reads its inputs from disk and writes its outputs under the
configured output directory, so stages can be re-run independently and
a finished output directory is byte-reproducible given the same seed
and the mock provider.
"""

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .core import (
    PROFILE_METHODS,
    ParseError,
    Qrel,
    RunRecord,
    Topic,
    ValidationError,
    parse_passages,
    parse_qrels,
    parse_topics,
    parse_trec_run,
    parse_variant_query_id,
    read_annotations,
    read_variants,
    topic_of_query_id,
    variant_query_id,
    write_qrels,
    write_topics,
    write_trec_run,
    write_variants,
)
from .evalstats import (
    AGREEMENT_CLASSES,
    EffectivenessMatrix,
    agreement_from_verdicts,
    anova,
    kendall_tau,
    marginal_means,
    ndcg_at_k,
    system_verdicts,
)
from .genkit import (
    GenerationError,
    HttpProvider,
    MockProvider,
    ProviderConfig,
    TransportError,
    generate_backstories,
    generate_sweep,
    load_profiles,
)
from .judge import LabelStore, coverage, label_topk, merge_qrels, write_coverage_csv
from .retrieval import Bm25Params, build_index, run_queries
from .textkit import variant_features, write_feature_csv
from .validate import (
    alignment_accuracy,
    load_dictionary,
    similarity_accuracy,
    validate_variants,
    write_consensus_csv,
    write_verdicts_csv,
)

N_VARIANTS = 3
SEED_PROFILE = "seed"
GAIN_MODES = ("linear", "exp")
PROVIDERS = ("mock", "http")

BM25_SYSTEMS = (
    ("bm25_k09_b04", Bm25Params(0.9, 0.4)),
    ("bm25_k12_b075", Bm25Params(1.2, 0.75)),
    ("bm25_k20_b075", Bm25Params(2.0, 0.75)),
)

_MERGE_ALIASES = {
    "human": "human-only",
    "llm": "llm-only",
    "human-only": "human-only",
    "llm-only": "llm-only",
    "human-preferred": "human-preferred",
}

COMMANDS = (
    "generate",
    "validate",
    "index",
    "search",
    "import-runs",
    "judge",
    "evaluate",
    "analyze",
    "report",
)


class ImbalanceError(Exception):
    """Effectiveness matrix cannot enter the balanced analysis."""


@dataclass(frozen=True)
class PipelineConfig:
    topics: Path
    corpus: Path
    profiles: Path
    out: Path
    runs_dir: Optional[Path] = None
    qrels: Optional[Path] = None
    annotations: Optional[Path] = None
    methods: tuple = PROFILE_METHODS
    k: int = 10
    alpha: float = 0.05
    gain: str = "linear"
    merge: str = "human-preferred"
    seed: int = 0
    provider: str = "mock"
    endpoint: str = ""
    model: str = ""

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k={self.k} must be >= 1")
        if not 0.0 < self.alpha < 0.5:
            raise ValidationError(f"alpha={self.alpha} outside (0, 0.5)")
        if self.gain not in GAIN_MODES:
            raise ValidationError(f"unknown gain {self.gain!r}")
        if self.provider not in PROVIDERS:
            raise ValidationError(f"unknown provider {self.provider!r}")
        if self.merge not in _MERGE_ALIASES.values():
            raise ValidationError(f"unknown merge policy {self.merge!r}")
        bad = [m for m in self.methods if m not in PROFILE_METHODS]
        if bad:
            raise ValidationError(f"unknown methods {bad}")
        if not self.methods:
            raise ValidationError("methods must not be empty")


def parse_config_file(path) -> dict:
    """Plain `key = value` lines; '#' starts a comment; later keys win."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def build_config(args) -> PipelineConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    raw = {}
    base = Path.cwd()
    if args.config:
        config_path = Path(args.config)
        raw.update(parse_config_file(config_path))
        base = config_path.resolve().parent
    for key in (
        "topics",
        "corpus",
        "profiles",
        "runs",
        "qrels",
        "out",
        "annotations",
        "methods",
        "k",
        "alpha",
        "gain",
        "seed",
        "provider",
        "merge",
        "endpoint",
        "model",
    ):
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            raw[key] = str(flag)

    missing = [key for key in ("topics", "corpus", "profiles", "out") if key not in raw]
    if missing:
        raise ValidationError(f"missing required settings: {', '.join(missing)}")

    def path_of(key):
        return _resolve(base, raw[key]) if key in raw else None

    methods = tuple(
        m.strip() for m in raw.get("methods", ",".join(PROFILE_METHODS)).split(",") if m.strip()
    )
    merge = _MERGE_ALIASES.get(raw.get("merge", "human-preferred"))
    if merge is None:
        raise ValidationError(f"unknown merge policy {raw['merge']!r}")
    try:
        k = int(raw.get("k", "10"))
        alpha = float(raw.get("alpha", "0.05"))
        seed = int(raw.get("seed", "0"))
    except ValueError as exc:
        raise ValidationError(f"bad numeric setting: {exc}") from exc
    return PipelineConfig(
        topics=path_of("topics"),
        corpus=path_of("corpus"),
        profiles=path_of("profiles"),
        out=path_of("out"),
        runs_dir=path_of("runs"),
        qrels=path_of("qrels"),
        annotations=path_of("annotations"),
        methods=methods,
        k=k,
        alpha=alpha,
        gain=raw.get("gain", "linear"),
        merge=merge,
        seed=seed,
        provider=raw.get("provider", "mock"),
        endpoint=raw.get("endpoint", ""),
        model=raw.get("model", ""),
    )


def make_provider(config: PipelineConfig):
    if config.provider == "mock":
        return MockProvider(seed_material=str(config.seed))
    if not config.endpoint or not config.model:
        raise ValidationError("http provider needs endpoint and model settings")
    return HttpProvider(ProviderConfig(endpoint=config.endpoint, model_name=config.model))


def _load_topics(config: PipelineConfig) -> list:
    fmt = "jsonl" if str(config.topics).endswith(".jsonl") else "tsv"
    return parse_topics(config.topics, format=fmt)


def _load_corpus(config: PipelineConfig) -> list:
    fmt = "jsonl" if str(config.corpus).endswith(".jsonl") else "tsv"
    return parse_passages(config.corpus, format=fmt)


def _variants_path(config: PipelineConfig) -> Path:
    return config.out / "variants.jsonl"


def _runs_out(config: PipelineConfig) -> Path:
    return config.out / "runs"


def _read_all_runs(config: PipelineConfig) -> list:
    runs_dir = _runs_out(config)
    files = sorted(p for p in runs_dir.glob("*.run") if p.is_file()) if runs_dir.is_dir() else []
    if not files:
        raise ValidationError(f"no run files under {runs_dir}; run search/import-runs first")
    records = []
    for path in files:
        records.extend(parse_trec_run(path))
    return records


# ---------------------------------------------------------------- stages


def cmd_generate(config: PipelineConfig) -> None:
    topics = _load_topics(config)
    profiles = load_profiles(config.profiles)
    selected = [p for p in profiles if p.method in config.methods]
    if not selected:
        raise ValidationError(f"no profiles match methods {config.methods}")
    config.out.mkdir(parents=True, exist_ok=True)

    variants_path = _variants_path(config)
    existing = read_variants(variants_path) if variants_path.exists() else []
    provider = make_provider(config)
    logs = []
    produced = generate_sweep(
        provider, topics, selected, existing=existing, logs=logs
    )

    # Keep previously generated variants for profiles outside this
    # invocation's method selection; order everything canonically.
    selected_ids = {p.profile_id for p in selected}
    merged = {(v.topic_id, v.profile_id, v.index): v for v in existing
              if v.profile_id not in selected_ids}
    for v in produced:
        merged[(v.topic_id, v.profile_id, v.index)] = v
    topic_pos = {t.topic_id: i for i, t in enumerate(topics)}
    profile_pos = {p.profile_id: i for i, p in enumerate(profiles)}
    unknown = [key for key in merged if key[0] not in topic_pos or key[1] not in profile_pos]
    if unknown:
        raise ValidationError(f"variants reference unknown topics/profiles: {sorted(unknown)[:5]}")
    ordered = sorted(
        merged.values(), key=lambda v: (topic_pos[v.topic_id], profile_pos[v.profile_id], v.index)
    )
    write_variants(ordered, variants_path)

    log_path = config.out / "genlog.jsonl"
    with open(log_path, "a", encoding="utf-8") as fh:
        for log in logs:
            fh.write(json.dumps(dataclasses.asdict(log), ensure_ascii=False) + "\n")

    by_method = {}
    method_of = {p.profile_id: p.method for p in profiles}
    for v in ordered:
        m = method_of[v.profile_id]
        by_method[m] = by_method.get(m, 0) + 1
    parts = ", ".join(f"{m} {by_method[m]}" for m in PROFILE_METHODS if m in by_method)
    print(f"{len(ordered)} variants on file ({parts}); {len(logs)} provider calls logged")


def cmd_validate(config: PipelineConfig) -> None:
    topics = _load_topics(config)
    profiles = load_profiles(config.profiles)
    variants = read_variants(_variants_path(config))
    dictionary = load_dictionary()
    config.out.mkdir(parents=True, exist_ok=True)

    verdicts = validate_variants(topics, variants, profiles, dictionary)
    write_verdicts_csv(verdicts, config.out / "verdicts.csv")
    n_valid = sum(1 for v in verdicts if v.valid)
    print(f"verdicts: {n_valid}/{len(verdicts)} valid")

    seed_text = {t.topic_id: t.seed_query for t in topics}
    features = [
        variant_features(v.topic_id, v.profile_id, v.index, seed_text[v.topic_id], v.text)
        for v in variants
    ]
    write_feature_csv(features, config.out / "features.csv")
    print(f"features: {len(features)} rows")

    if config.annotations is None or not Path(config.annotations).exists():
        print("consensus: skipped (no annotations file)")
        return
    annotations = read_annotations(config.annotations)
    unchecked = {"order", "misspelling"}
    profile_ids = {p.profile_id for p in profiles}
    similarity_rows = []
    alignment_rows = []
    for profile in profiles:
        if profile.name.lower() not in unchecked:
            report = similarity_accuracy(annotations, profile.profile_id)
            if report.n_pairs:
                similarity_rows.append(report)
        if profile.method in ("persona", "group"):
            report = alignment_accuracy(
                annotations, profile.profile_id, profile.method, known_answers=profile_ids
            )
            if report.n_pairs:
                alignment_rows.append(report)
    write_consensus_csv(similarity_rows, config.out / "consensus_similarity.csv")
    write_consensus_csv(alignment_rows, config.out / "consensus_alignment.csv")
    print(f"consensus: {len(similarity_rows)} similarity rows, {len(alignment_rows)} alignment rows")


def cmd_index(config: PipelineConfig) -> None:
    passages = _load_corpus(config)
    index = build_index(passages)
    config.out.mkdir(parents=True, exist_ok=True)
    stats = {
        "passages": index.doc_count,
        "avg_doc_length": index.avg_doc_length,
        "vocabulary": len(index.postings),
        "postings": sum(len(plist) for plist in index.postings.values()),
    }
    with open(config.out / "index_stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"indexed {stats['passages']} passages, {stats['vocabulary']} terms")


def _query_texts(config: PipelineConfig) -> dict:
    topics = _load_topics(config)
    variants = read_variants(_variants_path(config))
    queries = {t.topic_id: t.seed_query for t in topics}
    for v in variants:
        queries[variant_query_id(v.topic_id, v.profile_id, v.index)] = v.text
    return queries


def cmd_search(config: PipelineConfig) -> None:
    passages = _load_corpus(config)
    index = build_index(passages)
    queries = _query_texts(config)
    runs_dir = _runs_out(config)
    runs_dir.mkdir(parents=True, exist_ok=True)
    for system_id, params in BM25_SYSTEMS:
        records = run_queries(index, params, queries, system_id, k=config.k)
        write_trec_run(records, runs_dir / f"{system_id}.run")
        print(f"{system_id}: {len(records)} results over {len(queries)} queries")


def cmd_import_runs(config: PipelineConfig) -> None:
    if config.runs_dir is None or not Path(config.runs_dir).is_dir():
        raise ValidationError("runs directory not configured or missing")
    files = sorted(p for p in Path(config.runs_dir).iterdir() if p.is_file())
    if not files:
        raise ValidationError(f"no run files in {config.runs_dir}")
    runs_dir = _runs_out(config)
    runs_dir.mkdir(parents=True, exist_ok=True)
    imported = []
    for path in files:
        records = parse_trec_run(path)
        by_system = {}
        for r in records:
            by_system.setdefault(r.system_id, []).append(r)
        for system_id in sorted(by_system):
            target = runs_dir / f"{system_id}.run"
            rendered = "".join(
                f"{r.query_id} Q0 {r.passage_id} {r.rank} {r.score!r} {r.system_id}\n"
                for r in sorted(by_system[system_id], key=lambda r: (r.query_id, r.rank))
            )
            if target.exists() and target.read_text(encoding="utf-8") != rendered:
                raise ValidationError(
                    f"system {system_id!r} already present with different content"
                )
            target.write_text(rendered, encoding="utf-8")
            imported.append(system_id)
    print(f"imported {len(imported)} systems: {', '.join(imported)}")


def cmd_judge(config: PipelineConfig) -> None:
    passages = _load_corpus(config)
    runs = _read_all_runs(config)
    config.out.mkdir(parents=True, exist_ok=True)
    provider = make_provider(config)

    backstories_path = config.out / "backstories.jsonl"
    if backstories_path.exists():
        topics = parse_topics(backstories_path, format="jsonl")
    else:
        topics = _load_topics(config)
    topics = generate_backstories(provider, topics)
    write_topics(topics, backstories_path)

    qrels_path = config.out / "llm_qrels.txt"
    raw_path = config.out / "llm_raw.jsonl"
    store = LabelStore.load(qrels_path, raw_path) if qrels_path.exists() else LabelStore()
    before = len(store)
    label_topk(provider, runs, topics, passages, store, k=config.k)
    store.save(qrels_path, raw_path)
    print(f"labels: {len(store)} cached ({len(store) - before} new)")


def _merged_qrels(config: PipelineConfig) -> list:
    human = []
    if config.qrels is not None and Path(config.qrels).exists():
        human = parse_qrels(config.qrels)
    llm_path = config.out / "llm_qrels.txt"
    llm = LabelStore.load(llm_path).qrels() if llm_path.exists() else []
    return merge_qrels(human, llm, config.merge)


def _cell_of_query(query_id: str):
    parsed = parse_variant_query_id(query_id)
    if parsed is None:
        return query_id, SEED_PROFILE, 0
    return parsed


def cmd_evaluate(config: PipelineConfig) -> None:
    config.out.mkdir(parents=True, exist_ok=True)
    merged = _merged_qrels(config)
    write_qrels(merged, config.out / "merged_qrels.txt", with_source=True)
    runs = _read_all_runs(config)

    reports = coverage(runs, merged, k=config.k)
    write_coverage_csv(reports, config.out / "coverage.csv")

    grades = {}
    for q in merged:
        grades.setdefault(q.query_id, {})[q.passage_id] = q.grade
    pools = {topic: sorted(g.values(), reverse=True) for topic, g in grades.items()}

    expected = sorted(_query_texts(config))
    systems = sorted({r.system_id for r in runs})
    ranked = {}
    for r in runs:
        ranked.setdefault((r.system_id, r.query_id), []).append(r)
    for key in ranked:
        ranked[key].sort(key=lambda r: r.rank)

    skipped = sum(1 for key in ranked if key[1] not in set(expected))
    if skipped:
        print(f"warning: {skipped} run query ids outside the variant sweep were ignored")

    rows = []
    unscored = []
    for system_id in systems:
        for query_id in expected:
            topic_id, profile_id, index = _cell_of_query(query_id)
            records = ranked.get((system_id, query_id))
            if not records:
                unscored.append((system_id, query_id))
                value = 0.0
            else:
                grade_of = grades.get(topic_id, {})
                observed = [grade_of.get(r.passage_id, 0) for r in records]
                value = ndcg_at_k(observed, pools.get(topic_id, []), k=config.k, gain=config.gain)
            rows.append((topic_id, system_id, profile_id, index, value))
    if unscored:
        shown = ", ".join(f"{s}:{q}" for s, q in unscored[:5])
        print(f"warning: {len(unscored)} (system, query) pairs missing from runs scored 0.0 ({shown} ...)")

    rows.sort()
    with open(config.out / "ndcg.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "system_id", "profile_id", "variant_index", "ndcg"])
        for topic_id, system_id, profile_id, index, value in rows:
            writer.writerow([topic_id, system_id, profile_id, index, repr(value)])
    print(f"ndcg: {len(rows)} rows over {len(systems)} systems")


def _read_matrix(config: PipelineConfig) -> EffectivenessMatrix:
    path = config.out / "ndcg.csv"
    if not path.exists():
        raise ValidationError(f"{path} missing; run evaluate first")
    cells = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            if row["profile_id"] == SEED_PROFILE:
                continue
            cells.append(
                (
                    row["topic_id"],
                    row["system_id"],
                    row["profile_id"],
                    int(row["variant_index"]),
                    float(row["ndcg"]),
                )
            )
    if not cells:
        raise ValidationError("ndcg.csv holds no variant cells")
    try:
        matrix = EffectivenessMatrix.from_scores(cells, k=config.k)
        matrix.to_array(("topic", "system", "profile"))
    except ValueError as exc:
        raise ImbalanceError(str(exc)) from exc
    return matrix


def _profile_rankings(matrix: EffectivenessMatrix) -> dict:
    sums = {}
    counts = {}
    for (t, s, p, i), v in matrix.items():
        sums[(p, s)] = sums.get((p, s), 0.0) + v
        counts[(p, s)] = counts.get((p, s), 0) + 1
    rankings = {}
    for profile in matrix.profiles:
        rankings[profile] = {
            s: sums[(profile, s)] / counts[(profile, s)] for s in matrix.systems
        }
    return rankings


def cmd_analyze(config: PipelineConfig) -> None:
    matrix = _read_matrix(config)

    table = anova(matrix, ("topic", "system", "profile"), with_interactions=True)
    with open(config.out / "anova.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "ss", "df", "ms", "f", "p", "omega_sq_p"])
        for row in table.all_rows():
            writer.writerow(
                [
                    row.source,
                    repr(row.ss),
                    row.df,
                    repr(row.ms),
                    "" if row.f is None else repr(row.f),
                    "" if row.p is None else repr(row.p),
                    "" if row.omega_sq_partial is None else repr(row.omega_sq_partial),
                ]
            )

    rankings = _profile_rankings(matrix)
    profiles = matrix.profiles
    with open(config.out / "tau_matrix.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["profile"] + profiles)
        for a in profiles:
            row = [a]
            for b in profiles:
                tau = 1.0 if a == b else kendall_tau(rankings[a], rankings[b])
                row.append(repr(tau))
            writer.writerow(row)

    verdicts = {}
    tukeys = {}
    for profile in profiles:
        verdicts[profile], tukeys[profile] = system_verdicts(
            matrix, profile, alpha=config.alpha
        )

    with open(config.out / "agreement.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["profile_a", "profile_b", "total_pairs"]
            + list(AGREEMENT_CLASSES)
            + [f"frac_{cls}" for cls in AGREEMENT_CLASSES]
        )
        for i, a in enumerate(profiles):
            for b in profiles[i:]:
                rep = agreement_from_verdicts(a, b, verdicts[a], verdicts[b])
                writer.writerow(
                    [a, b, rep.total_pairs]
                    + [rep.counts[cls] for cls in AGREEMENT_CLASSES]
                    + [repr(float(rep.fractions[cls])) for cls in AGREEMENT_CLASSES]
                )

    means, _ = marginal_means(matrix, axis="profile", alpha=config.alpha)
    with open(config.out / "marginal_means.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["profile", "mean", "ci_low", "ci_high"])
        for m in means:
            writer.writerow([m.level, repr(m.mean), repr(m.ci_low), repr(m.ci_high)])

    with open(config.out / "tukey_pairs.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["profile", "system_a", "system_b", "diff", "hsd", "significant"])
        for profile in profiles:
            tukey = tukeys[profile]
            for pair in tukey.pairs:
                writer.writerow(
                    [
                        profile,
                        pair.group_a,
                        pair.group_b,
                        repr(pair.diff),
                        repr(tukey.hsd),
                        str(pair.significant).lower(),
                    ]
                )

    print(
        f"analysis over {len(profiles)} profiles, {len(matrix.systems)} systems, "
        f"{len(matrix.topics)} topics written to {config.out}"
    )


# ---------------------------------------------------------------- report


def _svg_bar_chart(title, labels, values, errors=None, width=940, height=430):
    """Static bar chart; coordinates rounded so output is byte-stable."""
    left, right, top, bottom = 64, 16, 42, 110
    plot_w = width - left - right
    plot_h = height - top - bottom
    peak = max(values)
    if errors:
        peak = max(peak, max(hi for _, hi in errors))
    y_max = max(0.1, math.ceil(peak * 10) / 10)

    def x_of(i):
        return left + plot_w * (i + 0.5) / len(labels)

    def y_of(v):
        return top + plot_h * (1 - v / y_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="24" font-size="16" text-anchor="middle">{title}</text>',
    ]
    for step in range(5):
        value = y_max * step / 4
        y = y_of(value)
        parts.append(
            f'<line x1="{left}" y1="{y:.2f}" x2="{width - right}" y2="{y:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" '
            f'text-anchor="end">{value:.2f}</text>'
        )
    bar_w = plot_w / len(labels) * 0.62
    for i, (label, value) in enumerate(zip(labels, values)):
        x = x_of(i)
        y = y_of(value)
        parts.append(
            f'<rect x="{x - bar_w / 2:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
            f'height="{y_of(0) - y:.2f}" fill="#4477aa"/>'
        )
        if errors:
            lo, hi = errors[i]
            y_lo, y_hi = y_of(lo), y_of(hi)
            cap = bar_w * 0.3
            parts.append(
                f'<line x1="{x:.2f}" y1="{y_lo:.2f}" x2="{x:.2f}" y2="{y_hi:.2f}" '
                f'stroke="#cc6677" stroke-width="1.5"/>'
            )
            for y_c in (y_lo, y_hi):
                parts.append(
                    f'<line x1="{x - cap:.2f}" y1="{y_c:.2f}" x2="{x + cap:.2f}" '
                    f'y2="{y_c:.2f}" stroke="#cc6677" stroke-width="1.5"/>'
                )
        parts.append(
            f'<text x="{x:.2f}" y="{height - bottom + 14}" font-size="11" '
            f'text-anchor="end" transform="rotate(-40 {x:.2f} {height - bottom + 14})">{label}</text>'
        )
    parts.append(
        f'<line x1="{left}" y1="{y_of(0):.2f}" x2="{width - right}" y2="{y_of(0):.2f}" '
        f'stroke="#333333" stroke-width="1.5"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_report(config: PipelineConfig) -> None:
    means_path = config.out / "marginal_means.csv"
    ndcg_path = config.out / "ndcg.csv"
    for path in (means_path, ndcg_path):
        if not path.exists():
            raise ValidationError(f"{path} missing; run evaluate and analyze first")

    labels, values, errors = [], [], []
    with open(means_path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            labels.append(row["profile"])
            values.append(float(row["mean"]))
            errors.append((float(row["ci_low"]), float(row["ci_high"])))
    svg = _svg_bar_chart("Marginal mean NDCG by profile", labels, values, errors)
    (config.out / "marginal_means.svg").write_text(svg, encoding="utf-8")

    sums, counts = {}, {}
    with open(ndcg_path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["profile_id"] == SEED_PROFILE:
                continue
            s = row["system_id"]
            sums[s] = sums.get(s, 0.0) + float(row["ndcg"])
            counts[s] = counts.get(s, 0) + 1
    systems = sorted(sums, key=lambda s: (-sums[s] / counts[s], s))
    svg = _svg_bar_chart(
        "System ranking by mean NDCG over variants",
        systems,
        [sums[s] / counts[s] for s in systems],
    )
    (config.out / "system_rankings.svg").write_text(svg, encoding="utf-8")
    print(f"report: 2 charts written to {config.out}")


# ---------------------------------------------------------------- entry


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--topics", help="seed topics (tsv or jsonl)")
    common.add_argument("--corpus", help="passage collection (tsv or jsonl)")
    common.add_argument("--profiles", help="transformation profiles json")
    common.add_argument("--runs", help="directory of external TREC run files")
    common.add_argument("--qrels", help="human relevance judgments")
    common.add_argument("--annotations", help="annotation export for consensus reports")
    common.add_argument("--out", help="output directory")
    common.add_argument("--methods", help="comma list from persona,group,textual,neutral")
    common.add_argument("--k", type=int, help="ranking depth (default 10)")
    common.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    common.add_argument("--gain", choices=GAIN_MODES, help="NDCG gain mode")
    common.add_argument("--seed", type=int, help="random seed for the run")
    common.add_argument("--provider", choices=PROVIDERS, help="variant/label provider")
    common.add_argument("--merge", choices=("human", "llm", "human-preferred"),
                        help="qrels merge policy")
    common.add_argument("--endpoint", help="http provider endpoint URL")
    common.add_argument("--model", help="http provider model name")

    parser = argparse.ArgumentParser(
        prog="qvbench",
        description="Query-variant generation, validation, and evaluation pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


_DISPATCH = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "index": cmd_index,
    "search": cmd_search,
    "import-runs": cmd_import_runs,
    "judge": cmd_judge,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        _DISPATCH[args.command](config)
    except ImbalanceError as exc:
        print(f"error: unbalanced design: {exc}", file=sys.stderr)
        return 4
    except (GenerationError, TransportError) as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
