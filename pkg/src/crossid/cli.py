"""Command-line interface.

Subcommands: ingest, build-graph, features, trials, score, fuse, eval,
synth, and run (the whole pipeline). Exit codes: 0 success, 1 data error,
2 config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .evaluation import evaluate_system, kfold_split
from .exceptions import ConfigError, DataError
from .fusion import FEATURE_COLUMNS, parse_score_table
from .graph import (
    align_graphs,
    build_graph,
    community_feature,
    detect_communities,
    neighborhood_feature,
    select_seeds,
)
from .pipeline import (
    RunConfig,
    build_profiles,
    fuse_scores,
    ingest,
    read_trials_tsv,
    run_pipeline,
    write_det_csv,
    write_graph_snapshot,
    write_report_tsv,
    write_trials_tsv,
)
from .synth import SynthConfig, write_synth_corpus

logger = logging.getLogger(__name__)


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    parser.add_argument("--twitter", help="twitter posts JSONL")
    parser.add_argument("--instagram", help="instagram posts JSONL")
    parser.add_argument("--links", help="truth links TSV (extracted from posts when omitted)")
    parser.add_argument("--out-dir", help="output directory")
    parser.add_argument("--seed-mode", choices=("hashtags", "hashtags_and_usernames"))
    parser.add_argument("--negatives-per-true", type=int)
    parser.add_argument("--k-folds", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--username-system")
    parser.add_argument("--fullname-system")
    parser.add_argument("--comm1-system", choices=("dp", "svm"))
    parser.add_argument("--nbr1-system", choices=("dp", "svm"))
    parser.add_argument("--comm2-system", choices=("dp", "svm"))
    parser.add_argument("--nbr2-system", choices=("dp", "svm"))
    parser.add_argument("--fusion-kind", choices=("logit", "random_forest"))
    parser.add_argument("--fusion-systems", help="comma-separated, e.g. 'P,P+C+N1+N2'")
    parser.add_argument("--min-words", type=int)
    parser.add_argument("--min-mask-rows", type=int)
    parser.add_argument("--svm-c", type=float)
    parser.add_argument("--l2", type=float)
    parser.add_argument("--trees", type=int)
    parser.add_argument("--max-depth", type=int)


_FLAG_FIELDS = {
    "twitter": "twitter_path",
    "instagram": "instagram_path",
    "links": "links_path",
    "out_dir": "out_dir",
    "seed_mode": "seed_mode",
    "negatives_per_true": "negatives_per_true",
    "k_folds": "k_folds",
    "seed": "seed",
    "username_system": "username_system",
    "fullname_system": "fullname_system",
    "comm1_system": "comm1_system",
    "nbr1_system": "nbr1_system",
    "comm2_system": "comm2_system",
    "nbr2_system": "nbr2_system",
    "fusion_kind": "fusion_kind",
    "min_words": "min_words",
    "min_mask_rows": "min_mask_rows",
    "svm_c": "svm_c",
    "l2": "l2",
    "trees": "trees",
    "max_depth": "max_depth",
}


def build_run_config(args: argparse.Namespace, require_paths: bool = True) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                values.update(json.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config JSON: {exc}") from exc
    for flag, field_name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[field_name] = value
    if getattr(args, "fusion_systems", None):
        values["fusion_systems"] = tuple(s.strip() for s in args.fusion_systems.split(","))
    elif "fusion_systems" in values:
        values["fusion_systems"] = tuple(values["fusion_systems"])
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    if require_paths:
        for required in ("twitter_path", "instagram_path", "out_dir"):
            if not values.get(required):
                raise ConfigError(f"missing required config field {required}")
    else:
        values.setdefault("twitter_path", "")
        values.setdefault("instagram_path", "")
        values.setdefault("out_dir", ".")
    config = RunConfig(**values)
    config.validate()
    return config


def cmd_synth(args) -> int:
    config = SynthConfig(n_users=args.n_users, overlap_fraction=args.overlap, seed=args.seed)
    paths = write_synth_corpus(config, args.out_dir)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    return 0


def cmd_ingest(args) -> int:
    result = ingest(args.input)
    users = build_profiles(result.posts)
    print(f"posts\t{len(result.posts)}")
    print(f"users\t{len(users)}")
    print(f"malformed\t{result.malformed}")
    print(f"duplicates\t{result.duplicates}")
    return 0


def _load_aligned(args, config: RunConfig):
    twitter_posts = ingest(config.twitter_path).posts
    instagram_posts = ingest(config.instagram_path).posts
    gt = build_graph(twitter_posts)
    gi = build_graph(instagram_posts)
    seeds = select_seeds(gt, gi, config.seed_mode)
    aligned = align_graphs(gt, gi, seeds)
    return twitter_posts, instagram_posts, gt, gi, aligned


def cmd_build_graph(args) -> int:
    config = build_run_config(args)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, _, gt, gi, aligned = _load_aligned(args, config)
    detect_communities(aligned, seed=config.seed)
    write_graph_snapshot(out_dir, "graph_twitter", gt.kinds, gt.adj, config)
    write_graph_snapshot(out_dir, "graph_instagram", gi.kinds, gi.adj, config)
    write_graph_snapshot(out_dir, "graph_aligned", aligned.kinds, aligned.adj, config)
    print(f"twitter\t|V|={gt.vertex_count}\t|E|={gt.edge_count}")
    print(f"instagram\t|V|={gi.vertex_count}\t|E|={gi.edge_count}")
    print(f"aligned\t|V|={aligned.vertex_count}")
    return 0


def cmd_features(args) -> int:
    """Emit per-user graph features (community/NBR, 1/2-hop) as JSON lines."""
    config = build_run_config(args)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, _, _, _, aligned = _load_aligned(args, config)
    detect_communities(aligned, seed=config.seed)
    path = out_dir / "graph_features.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for comment in config.header_comments():
            fh.write(json.dumps({"comment": comment}) + "\n")
        for vertex in sorted(aligned.kinds):
            if aligned.kinds[vertex] != "user":
                continue
            record = {"vertex": vertex, "community": aligned.communities.get(vertex)}
            for kind, fn in (("community", community_feature), ("neighborhood", neighborhood_feature)):
                for hop in (1, 2):
                    feature = fn(aligned, vertex, hop)
                    record[f"{kind}_{hop}hop"] = (
                        None if feature.is_missing
                        else {str(k): v for k, v in sorted(feature.vector.items(), key=lambda kv: str(kv[0]))}
                    )
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"features\t{path}")
    return 0


def cmd_trials(args) -> int:
    from .evaluation import build_trials
    from .pipeline import extract_truth_links, read_links_tsv

    config = build_run_config(args)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    twitter_posts = ingest(config.twitter_path).posts
    instagram_posts = ingest(config.instagram_path).posts
    t_profiles = build_profiles(twitter_posts)
    i_profiles = build_profiles(instagram_posts)
    if config.links_path:
        links = read_links_tsv(config.links_path)
    else:
        links = extract_truth_links(twitter_posts, instagram_posts)
    trials = build_trials(
        links, sorted(i_profiles),
        {u: p.username for u, p in t_profiles.items()},
        {u: p.username for u, p in i_profiles.items()},
        negatives_per_true=config.negatives_per_true, seed=config.seed,
    )
    write_trials_tsv(out_dir / "trials.tsv", trials, config)
    print(f"trials\t{len(trials)}")
    return 0


def cmd_score(args) -> int:
    result = run_pipeline(build_run_config(args))
    print(f"scores\t{len(result.rows)} rows")
    return 0


def cmd_fuse(args) -> int:
    config = build_run_config(args, require_paths=False)
    rows = parse_score_table(open(args.scores, "r", encoding="utf-8"))
    trials = read_trials_tsv(args.trials)
    folds = kfold_split(trials, k=config.k_folds, seed=config.seed)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"# {c}" for c in config.header_comments()]
    lines.append("trial_id\tlabel\t" + "\t".join(f"fused:{e}" for e in config.fusion_systems))
    fused = {expr: fuse_scores(config, expr, rows, folds) for expr in config.fusion_systems}
    for row in rows:
        cells = [row.trial_id, "true" if row.label else "false"]
        for expr in config.fusion_systems:
            value = fused[expr].get(row.trial_id)
            cells.append("NA" if value is None else repr(value))
        lines.append("\t".join(cells))
    with open(out_dir / "fused.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"fused\t{out_dir / 'fused.tsv'}")
    return 0


def cmd_eval(args) -> int:
    from .evaluation import sweep_det

    config = build_run_config(args, require_paths=False)
    rows = parse_score_table(open(args.scores, "r", encoding="utf-8"))
    trials = read_trials_tsv(args.trials)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    labels_all = {t.trial_id: t.label for t in trials}
    labels_nt = {t.trial_id: t.label for t in trials if t.nontrivial}
    for column in FEATURE_COLUMNS:
        scores = {r.trial_id: r.scores.get(column) for r in rows}
        reports.append(evaluate_system(column, column, scores, trials))
        for subset, labels in (("all", labels_all), ("nt", labels_nt)):
            write_det_csv(out_dir / f"det_feature_{column}_{subset}.csv",
                          sweep_det(scores, labels), config)
    write_report_tsv(out_dir / "report.tsv", reports, config)
    print(f"report\t{out_dir / 'report.tsv'}")
    return 0


def cmd_run(args) -> int:
    result = run_pipeline(build_run_config(args))
    for report in result.reports:
        print(f"{report.feature}\t{report.system}\t{100 * report.eer_all:.2f}\t"
              f"{100 * report.eer_nt:.2f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="crossid",
                                     description="cross-domain entity resolution pipeline")
    parser.add_argument("--version", action="version", version=f"crossid {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cross-domain corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-users", type=int, default=625)
    p.add_argument("--overlap", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate a JSONL post file")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_ingest)

    for name, fn in (
        ("build-graph", cmd_build_graph),
        ("features", cmd_features),
        ("trials", cmd_trials),
        ("score", cmd_score),
        ("run", cmd_run),
    ):
        p = sub.add_parser(name)
        _add_config_args(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("fuse", help="fuse a score table")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="evaluate a score table")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_eval)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
