"""End-to-end orchestration: ingest -> graphs -> features -> trials -> CV ->
per-feature scores -> fusion -> evaluation.

Every stage is a pure function of its inputs and the RunConfig; every output
file starts with header comments carrying the tool version, the config hash,
and the full config JSON, so identical (inputs, config) runs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .content import AuthorIdentifier, score_content, tokenize_posts
from .evaluation import (
    EvalReport,
    Trial,
    build_trials,
    evaluate_system,
    kfold_split,
    sweep_det,
)
from .exceptions import ConfigError, DataError
from .fusion import (
    FEATURE_COLUMNS,
    ScoreFusion,
    ScoreRow,
    assemble_score_table,
    score_table_lines,
)
from .graph import (
    AlignedGraph,
    PairProductSVM,
    align_graphs,
    build_graph,
    community_feature,
    detect_communities,
    dp_similarity,
    neighborhood_feature,
    select_seeds,
    user_key,
)
from .records import Post, post_from_dict
from .strsim import CorpusStats, PipelineSpec, profile_similarity

logger = logging.getLogger(__name__)

GRAPH_SYSTEMS = ("dp", "svm")


@dataclass(frozen=True)
class RunConfig:
    """Full configuration of a pipeline run; echoed into every output header."""

    twitter_path: str
    instagram_path: str
    out_dir: str
    links_path: str | None = None  # when absent, links are extracted from posts
    seed_mode: str = "hashtags_and_usernames"
    negatives_per_true: int = 10
    k_folds: int = 5
    seed: int = 0
    username_system: str = "jw, nonorm, lower, nobw"
    fullname_system: str = "jw, norm, lower, nobw"
    comm1_system: str = "dp"
    nbr1_system: str = "dp"
    comm2_system: str = "dp"
    nbr2_system: str = "dp"
    fusion_kind: str = "random_forest"
    fusion_systems: tuple[str, ...] = ("P", "P+C+N1+N2")
    min_words: int = 200
    min_mask_rows: int = 20
    svm_c: float = 1.0
    l2: float = 1e-3
    trees: int = 100
    max_depth: int = 8

    def validate(self) -> None:
        from .fusion import FUSION_KINDS
        from .graph import SEED_MODES

        if self.seed_mode not in SEED_MODES:
            raise ConfigError(f"unknown seed mode {self.seed_mode!r}")
        if self.fusion_kind not in FUSION_KINDS:
            raise ConfigError(f"unknown fusion kind {self.fusion_kind!r}")
        for name in ("comm1_system", "nbr1_system", "comm2_system", "nbr2_system"):
            if getattr(self, name) not in GRAPH_SYSTEMS:
                raise ConfigError(f"unknown graph system {getattr(self, name)!r} for {name}")
        try:
            PipelineSpec.parse(self.username_system)
            PipelineSpec.parse(self.fullname_system)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for bundle_expr in self.fusion_systems:
            parse_bundles(bundle_expr)
        if self.negatives_per_true < 1:
            raise ConfigError("negatives_per_true must be >= 1")
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]

    def header_comments(self) -> list[str]:
        return [
            f"crossid version={__version__} config_hash={self.config_hash()}",
            f"config={self.to_json()}",
        ]


def parse_bundles(expr: str) -> tuple[str, ...]:
    """Parse a fusion system expression like "P+C+N1+N2" into bundle names."""
    from .fusion import FEATURE_BUNDLES

    bundles = tuple(part.strip() for part in expr.split("+") if part.strip())
    if not bundles:
        raise ConfigError(f"empty fusion system expression {expr!r}")
    for bundle in bundles:
        if bundle not in FEATURE_BUNDLES:
            raise ConfigError(f"unknown feature bundle {bundle!r} in {expr!r}")
    return bundles


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

@dataclass
class IngestResult:
    posts: list[Post]
    malformed: int
    duplicates: int


def ingest(path: str | Path) -> IngestResult:
    """Read a JSONL post file; malformed lines are skipped and counted,
    duplicated post ids keep the first occurrence. More than 50% malformed
    lines (or an unreadable file) is fatal."""
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    posts: list[Post] = []
    seen_ids: set[str] = set()
    malformed = 0
    duplicates = 0
    total = 0
    for line in lines:
        if not line.strip():
            continue
        total += 1
        try:
            post = post_from_dict(json.loads(line))
        except (json.JSONDecodeError, ValueError) as exc:
            malformed += 1
            logger.debug("skipping malformed line: %s", exc)
            continue
        if post.post_id in seen_ids:
            duplicates += 1
            logger.warning("dropping duplicate post_id %r", post.post_id)
            continue
        seen_ids.add(post.post_id)
        posts.append(post)
    if total and malformed * 2 > total:
        raise DataError(f"{malformed}/{total} malformed lines in {path}")
    return IngestResult(posts, malformed, duplicates)


@dataclass(frozen=True)
class Profile:
    user_id: str
    username: str
    full_name: str | None


def build_profiles(posts: Sequence[Post]) -> dict[str, Profile]:
    """One profile per user id; fields come from the posts in post_id order."""
    by_user: dict[str, list[Post]] = {}
    for post in posts:
        by_user.setdefault(post.user_id, []).append(post)
    profiles = {}
    for uid, user_posts in by_user.items():
        user_posts.sort(key=lambda p: p.post_id)
        username = user_posts[0].username
        full_name = next((p.full_name for p in user_posts if p.full_name), None)
        profiles[uid] = Profile(uid, username, full_name)
    return profiles


def extract_truth_links(
    twitter_posts: Sequence[Post], instagram_posts: Sequence[Post]
) -> list[tuple[str, str]]:
    """Cross-domain links declared via link_target, in either direction.
    Users appearing in more than one pair on either side are discarded."""
    t_by_name: dict[str, str] = {}
    for post in sorted(twitter_posts, key=lambda p: p.post_id):
        t_by_name.setdefault(post.username.lower(), post.user_id)
    i_by_name: dict[str, str] = {}
    for post in sorted(instagram_posts, key=lambda p: p.post_id):
        i_by_name.setdefault(post.username.lower(), post.user_id)
    pairs: set[tuple[str, str]] = set()
    for post in twitter_posts:
        if post.link_target:
            target = i_by_name.get(post.link_target.lower())
            if target:
                pairs.add((post.user_id, target))
    for post in instagram_posts:
        if post.link_target:
            source = t_by_name.get(post.link_target.lower())
            if source:
                pairs.add((source, post.user_id))
    t_counts: dict[str, int] = {}
    i_counts: dict[str, int] = {}
    for t, i in pairs:
        t_counts[t] = t_counts.get(t, 0) + 1
        i_counts[i] = i_counts.get(i, 0) + 1
    return sorted((t, i) for t, i in pairs if t_counts[t] == 1 and i_counts[i] == 1)


def read_links_tsv(path: str | Path) -> list[tuple[str, str]]:
    links = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#") or line.startswith("twitter_user_id\t"):
                    continue
                cells = line.split("\t")
                if len(cells) != 2:
                    raise DataError(f"bad link line {line!r} in {path}")
                links.append((cells[0], cells[1]))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return links


# ---------------------------------------------------------------------------
# per-feature scoring
# ---------------------------------------------------------------------------

def _profile_scores(
    trials: Sequence[Trial],
    t_profiles: Mapping[str, Profile],
    i_profiles: Mapping[str, Profile],
    spec: PipelineSpec,
    full_name: bool,
    corpus_stats: CorpusStats | None,
) -> dict[str, float | None]:
    cache: dict[tuple[str, str], float | None] = {}
    out: dict[str, float | None] = {}
    for trial in trials:
        tp = t_profiles.get(trial.u_t)
        ip = i_profiles.get(trial.u_i)
        if full_name:
            a = tp.full_name if tp else None
            b = ip.full_name if ip else None
        else:
            a = tp.username if tp else None
            b = ip.username if ip else None
        if not a or not b:
            out[trial.trial_id] = None
            continue
        key = (a, b)
        if key not in cache:
            score = profile_similarity(a, b, spec, corpus_stats, full_name=full_name)
            cache[key] = None if score.degenerate else score.value
        out[trial.trial_id] = cache[key]
    return out


@dataclass
class GraphFeatureSet:
    """Per-trial graph feature pairs for one (kind, hop) column."""

    column: str
    pairs: dict[str, tuple]  # trial_id -> (t-side feature, i-side feature)


def _graph_feature_pairs(
    trials: Sequence[Trial],
    aligned: AlignedGraph,
    t_profiles: Mapping[str, Profile],
    i_profiles: Mapping[str, Profile],
) -> dict[str, GraphFeatureSet]:
    columns = {"Comm1": ("community", 1), "Comm2": ("community", 2),
               "NBR1": ("neighborhood", 1), "NBR2": ("neighborhood", 2)}
    vertex_cache: dict[tuple[str, str], str | None] = {}

    def vertex_of(domain: str, profiles: Mapping[str, Profile], uid: str) -> str | None:
        key = (domain, uid)
        if key not in vertex_cache:
            profile = profiles.get(uid)
            vertex_cache[key] = (
                aligned.vertex_for(domain, user_key(profile.username)) if profile else None
            )
        return vertex_cache[key]

    feature_cache: dict[tuple[str, str, int], object] = {}

    def feature_of(vertex: str | None, kind: str, hop: int):
        from .graph import GraphFeature

        if vertex is None:
            return GraphFeature(kind, hop, {})
        key = (vertex, kind, hop)
        if key not in feature_cache:
            fn = community_feature if kind == "community" else neighborhood_feature
            feature_cache[key] = fn(aligned, vertex, hop)
        return feature_cache[key]

    out = {}
    for column, (kind, hop) in columns.items():
        pairs = {}
        for trial in trials:
            vt = vertex_of("twitter", t_profiles, trial.u_t)
            vi = vertex_of("instagram", i_profiles, trial.u_i)
            pairs[trial.trial_id] = (feature_of(vt, kind, hop), feature_of(vi, kind, hop))
        out[column] = GraphFeatureSet(column, pairs)
    return out


def _graph_scores(
    feature_set: GraphFeatureSet,
    system: str,
    trials: Sequence[Trial],
    folds,
    svm_c: float,
    seed: int,
) -> dict[str, float | None]:
    if system == "dp":
        return {tid: dp_similarity(f1, f2) for tid, (f1, f2) in feature_set.pairs.items()}
    # SVM similarity is trained on trial labels, so it is scored per fold
    out: dict[str, float | None] = {}
    for fold_idx, (train, test) in enumerate(folds):
        pairs = []
        labels = []
        for trial in train:
            f1, f2 = feature_set.pairs[trial.trial_id]
            pairs.append((f1, f2))
            labels.append(trial.label)
        try:
            model = PairProductSVM(C=svm_c, random_state=seed).fit(pairs, labels)
        except ValueError as exc:
            logger.warning("fold %d: %s; %s column missing for its test fold",
                           fold_idx, exc, feature_set.column)
            for trial in test:
                out[trial.trial_id] = None
            continue
        for trial in test:
            f1, f2 = feature_set.pairs[trial.trial_id]
            out[trial.trial_id] = model.score(f1, f2)
    return out


def compute_feature_scores(
    config: RunConfig,
    trials: Sequence[Trial],
    twitter_posts: Sequence[Post],
    instagram_posts: Sequence[Post],
    t_profiles: Mapping[str, Profile],
    i_profiles: Mapping[str, Profile],
    aligned: AlignedGraph,
    folds,
) -> dict[str, dict[str, float | None]]:
    """All seven per-feature score maps, keyed by ScoreTable column."""
    user_spec = PipelineSpec.parse(config.username_system)
    full_spec = PipelineSpec.parse(config.fullname_system)
    corpus_stats = None
    if "soft_tfidf" in (user_spec.metric, full_spec.metric):
        names = [p.full_name for p in list(t_profiles.values()) + list(i_profiles.values())
                 if p.full_name]
        from .normalize import NormalizationConfig, normalize_text

        cfg = NormalizationConfig(apply_norm=True, apply_lowercase=True, reorder_full_name=True)
        corpus_stats = CorpusStats.from_documents(sorted(normalize_text(n, cfg) for n in names))

    scores: dict[str, dict[str, float | None]] = {}
    scores["P_user"] = _profile_scores(trials, t_profiles, i_profiles, user_spec,
                                       full_name=False, corpus_stats=corpus_stats)
    scores["P_full"] = _profile_scores(trials, t_profiles, i_profiles, full_spec,
                                       full_name=True, corpus_stats=corpus_stats)

    identifier = AuthorIdentifier(min_words=config.min_words, C=config.svm_c,
                                  random_state=config.seed)
    identifier.fit(tokenize_posts(twitter_posts))
    instagram_vectors = identifier.vectorize(tokenize_posts(instagram_posts))
    scores["C"] = score_content(trials, identifier, instagram_vectors)

    feature_sets = _graph_feature_pairs(trials, aligned, t_profiles, i_profiles)
    for column, system in (("Comm1", config.comm1_system), ("NBR1", config.nbr1_system),
                           ("Comm2", config.comm2_system), ("NBR2", config.nbr2_system)):
        scores[column] = _graph_scores(feature_sets[column], system, trials, folds,
                                       config.svm_c, config.seed)
    return scores


def fuse_scores(
    config: RunConfig,
    bundle_expr: str,
    rows: Sequence[ScoreRow],
    folds,
) -> dict[str, float | None]:
    """Per-fold fusion training/scoring, pooled over the test folds."""
    bundles = parse_bundles(bundle_expr)
    by_id = {row.trial_id: row for row in rows}
    fused: dict[str, float | None] = {}
    for train, test in folds:
        fuser = ScoreFusion(kind=config.fusion_kind, bundles=bundles,
                            min_mask_rows=config.min_mask_rows, l2=config.l2,
                            trees=config.trees, max_depth=config.max_depth,
                            random_state=config.seed)
        fuser.fit([by_id[t.trial_id] for t in train])
        fused.update(fuser.predict([by_id[t.trial_id] for t in test]))
    return fused


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def _write_lines(path: Path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_trials_tsv(path: Path, trials: Sequence[Trial], config: RunConfig) -> None:
    lines = [f"# {c}" for c in config.header_comments()]
    lines.append("u_t\tu_i\tlabel\tnontrivial")
    for t in trials:
        lines.append(f"{t.u_t}\t{t.u_i}\t{'true' if t.label else 'false'}\t"
                     f"{'true' if t.nontrivial else 'false'}")
    _write_lines(path, lines)


def read_trials_tsv(path: str | Path) -> list[Trial]:
    trials = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#") or line.startswith("u_t\t"):
                continue
            cells = line.split("\t")
            if len(cells) != 4:
                raise DataError(f"bad trial line {line!r}")
            trials.append(Trial(cells[0], cells[1], cells[2] == "true", cells[3] == "true"))
    return trials


def write_det_csv(path: Path, curve, config: RunConfig) -> None:
    lines = [f"# {c}" for c in config.header_comments()]
    lines.append("threshold,p_fa,p_miss")
    for t, p_fa, p_m in curve.points:
        lines.append(f"{t!r},{p_fa!r},{p_m!r}")
    _write_lines(path, lines)


def write_report_tsv(path: Path, reports: Sequence[EvalReport], config: RunConfig) -> None:
    lines = [f"# {c}" for c in config.header_comments()]
    lines.append("feature\tsystem\teer_all_pct\teer_nt_pct\tinterpolated\t"
                 "n_trials\tn_nontrivial\tn_excluded_all\tn_excluded_nt")
    for r in reports:
        interp = ("all" if r.interpolated_all else "") + ("+nt" if r.interpolated_nt else "")
        lines.append("\t".join([
            r.feature, r.system, f"{100.0 * r.eer_all:.2f}", f"{100.0 * r.eer_nt:.2f}",
            interp or "-", str(r.n_trials), str(r.n_nontrivial),
            str(r.n_excluded_all), str(r.n_excluded_nt),
        ]))
    _write_lines(path, lines)


def write_graph_snapshot(out_dir: Path, name: str, kinds: Mapping[str, str],
                         adj: Mapping[str, Mapping[str, float]], config: RunConfig) -> None:
    vlines = [f"# {c}" for c in config.header_comments()]
    vlines.append("vertex\tkind")
    for key in sorted(kinds):
        vlines.append(f"{key}\t{kinds[key]}")
    _write_lines(out_dir / f"{name}_vertices.tsv", vlines)
    elines = [f"# {c}" for c in config.header_comments()]
    elines.append("src\tdst\tweight\tsrc_kind\tdst_kind")
    for src in sorted(adj):
        for dst in sorted(adj[src]):
            if src < dst:
                weight = adj[src][dst]
                weight_repr = repr(int(weight)) if float(weight).is_integer() else repr(weight)
                elines.append(f"{src}\t{dst}\t{weight_repr}\t{kinds[src]}\t{kinds[dst]}")
    _write_lines(out_dir / f"{name}_edges.tsv", elines)


# ---------------------------------------------------------------------------
# the full run
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    trials: list[Trial]
    rows: list[ScoreRow]
    feature_scores: dict[str, dict[str, float | None]]
    fused: dict[str, dict[str, float | None]]  # bundle expr -> scores
    reports: list[EvalReport]
    out_files: list[Path] = field(default_factory=list)


def run_pipeline(config: RunConfig) -> PipelineResult:
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    current_stage = "start"

    def stage(name):
        nonlocal current_stage
        current_stage = name
        logger.info("stage: %s", name)

    try:
        stage("ingest")
        twitter_posts = ingest(config.twitter_path).posts
        instagram_posts = ingest(config.instagram_path).posts
        t_profiles = build_profiles(twitter_posts)
        i_profiles = build_profiles(instagram_posts)

        stage("links")
        if config.links_path:
            links = read_links_tsv(config.links_path)
        else:
            links = extract_truth_links(twitter_posts, instagram_posts)
        missing_side = [
            (t, i) for t, i in links if t not in t_profiles or i not in i_profiles
        ]
        if missing_side:
            raise DataError(f"links reference unknown users, e.g. {missing_side[0]}")

        stage("build-graph")
        gt = build_graph(twitter_posts)
        gi = build_graph(instagram_posts)
        seeds = select_seeds(gt, gi, config.seed_mode)
        aligned = align_graphs(gt, gi, seeds)
        detect_communities(aligned, seed=config.seed)

        stage("trials")
        trials = build_trials(
            links,
            instagram_pool=sorted(i_profiles),
            twitter_usernames={uid: p.username for uid, p in t_profiles.items()},
            instagram_usernames={uid: p.username for uid, p in i_profiles.items()},
            negatives_per_true=config.negatives_per_true,
            seed=config.seed,
        )
        folds = kfold_split(trials, k=config.k_folds, seed=config.seed)

        stage("score")
        feature_scores = compute_feature_scores(
            config, trials, twitter_posts, instagram_posts,
            t_profiles, i_profiles, aligned, folds,
        )
        rows = assemble_score_table(trials, feature_scores)

        stage("fuse")
        fused = {expr: fuse_scores(config, expr, rows, folds)
                 for expr in config.fusion_systems}

        stage("eval")
        system_labels = {
            "P_user": config.username_system,
            "P_full": config.fullname_system,
            "C": "svm",
            "Comm1": config.comm1_system,
            "NBR1": config.nbr1_system,
            "Comm2": config.comm2_system,
            "NBR2": config.nbr2_system,
        }
        reports = [
            evaluate_system(column, system_labels[column], feature_scores[column], trials)
            for column in FEATURE_COLUMNS
        ]
        reports.extend(
            evaluate_system(f"fusion:{expr}", config.fusion_kind, fused[expr], trials)
            for expr in config.fusion_systems
        )
    except ConfigError:
        raise
    except DataError as exc:
        raise DataError(f"stage {current_stage}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"stage {current_stage}: {exc}") from exc

    stage("write")
    result = PipelineResult(list(trials), rows, feature_scores, fused, reports)
    write_trials_tsv(out_dir / "trials.tsv", trials, config)
    result.out_files.append(out_dir / "trials.tsv")
    _write_lines(out_dir / "scores.tsv", score_table_lines(rows, config.header_comments()))
    result.out_files.append(out_dir / "scores.tsv")

    fused_lines = [f"# {c}" for c in config.header_comments()]
    fused_lines.append("trial_id\tlabel\t" + "\t".join(f"fused:{e}" for e in config.fusion_systems))
    label_by_id = {t.trial_id: t.label for t in trials}
    for trial in trials:
        cells = [trial.trial_id, "true" if label_by_id[trial.trial_id] else "false"]
        for expr in config.fusion_systems:
            value = fused[expr].get(trial.trial_id)
            cells.append("NA" if value is None else repr(value))
        fused_lines.append("\t".join(cells))
    _write_lines(out_dir / "fused.tsv", fused_lines)
    result.out_files.append(out_dir / "fused.tsv")

    labels_all = {t.trial_id: t.label for t in trials}
    labels_nt = {t.trial_id: t.label for t in trials if t.nontrivial}
    det_systems = {f"feature_{c}": feature_scores[c] for c in FEATURE_COLUMNS}
    det_systems.update({f"fusion_{e.replace('+', '-')}": fused[e] for e in config.fusion_systems})
    for name, scores in det_systems.items():
        for subset, labels in (("all", labels_all), ("nt", labels_nt)):
            try:
                curve = sweep_det(scores, labels)
            except ValueError:
                continue
            path = out_dir / f"det_{name}_{subset}.csv"
            write_det_csv(path, curve, config)
            result.out_files.append(path)

    write_report_tsv(out_dir / "report.tsv", reports, config)
    result.out_files.append(out_dir / "report.tsv")

    write_graph_snapshot(out_dir, "graph_twitter", gt.kinds, gt.adj, config)
    write_graph_snapshot(out_dir, "graph_instagram", gi.kinds, gi.adj, config)
    write_graph_snapshot(out_dir, "graph_aligned", aligned.kinds, aligned.adj, config)
    result.out_files.extend(out_dir / f"graph_{n}_{s}.tsv"
                            for n in ("twitter", "instagram", "aligned")
                            for s in ("vertices", "edges"))
    return result
