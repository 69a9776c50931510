"""``varfuse`` command line.

Subcommands: index-build, query-run, fuse, centroid-build, boost, match,
eval, bench. Exit codes: 0 success, 1 usage or invalid configuration,
2 data error. Outputs are assembled in memory and written atomically, so a
failed command leaves no partial files behind.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import formats
from .centroid import (
    BOOSTERS,
    CentroidEntry,
    MissingRunError,
    boost,
    build_centroid,
    build_pseudo_index,
    inject_error,
    load_centroids,
    match_cluster,
    save_centroids,
)
from .config import Config, resolve
from .errors import ConfigError, DataError, VarfuseError
from .evaluation import METRICS, evaluate, report_lines, risk_report
from .experiments import BENCH_COLUMNS, VARIANT_SWEEP, bench_variants, match_queries
from .fusion import EXECUTORS, fuse
from .index import build_index, load_index, read_corpus, save_index
from .synthetic import generate_distractors
from .traversal import STRATEGIES, WeightedQuery, retrieve

log = logging.getLogger("varfuse")

STATS_COLUMNS = "topic,strategy,postings,cpu_ns,wall_ns"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None):
    if out:
        formats.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _config(args) -> Config:
    return resolve(args.config, **{k: v for k, v in vars(args).items()})


def _timing(args, stats):
    if args.no_timing:
        return 0, 0
    return stats.cpu_ns, stats.elapsed_ns


# Commands


def cmd_index_build(args):
    cfg = _config(args)
    index = build_index(read_corpus(args.corpus), cfg.bm25, cfg.block_size)
    save_index(index, args.out)
    print(f"indexed {index.num_docs} documents, {len(index.lexicon)} terms -> {args.out}", file=sys.stderr)


def cmd_query_run(args):
    cfg = _config(args)
    index = load_index(args.index)
    queries = formats.read_queries(args.queries)
    tag = args.tag or f"bm25-{cfg.strategy}"
    lines, stats_lines = [], [cfg.header(), STATS_COLUMNS]
    for qid, terms in queries.items():
        ranked, stats = retrieve(index, WeightedQuery.from_terms(terms), cfg.k, cfg.strategy)
        lines += formats.run_lines(qid, ranked, index, tag)
        cpu, wall = _timing(args, stats)
        stats_lines.append(f"{qid},{cfg.strategy},{stats.postings_scored},{cpu},{wall}")
    if args.stats:
        formats.write_atomic(args.stats, formats.join_lines(stats_lines))
    _emit(formats.join_lines(lines), args.out)


def cmd_fuse(args):
    cfg = _config(args)
    index = load_index(args.index)
    clusters = formats.read_clusters(args.clusters)
    label = args.mode if args.mode == "sp-exhaustive" else f"{args.mode}-{cfg.strategy}"
    tag = args.tag or label
    lines, stats_lines = [], [cfg.header(), BENCH_COLUMNS]
    for topic, vs in clusters.items():
        ranked, stats = fuse(index, vs, cfg.k, args.mode, cfg.strategy, cfg.workers)
        lines += formats.run_lines(topic, ranked, index, tag)
        cpu, wall = _timing(args, stats)
        stats_lines.append(f"{topic},{label},{len(vs)},{stats.postings_scored},{cpu},{wall}")
    if args.stats:
        formats.write_atomic(args.stats, formats.join_lines(stats_lines))
    _emit(formats.join_lines(lines), args.out)


def _read_run_dir(path, index):
    """Per-cluster lists from every ``*.run`` file in ``path``.

    A run's topic field is the cluster id, optionally followed by ``:`` and a
    variation label; each (file, topic) pair is one input list.
    """
    files = sorted(Path(path).glob("*.run")) if Path(path).is_dir() else []
    if not files:
        raise MissingRunError(f"no *.run files found in {path}")
    lists: dict[str, list] = {}
    for f in files:
        for topic, entries in formats.read_run(f).items():
            cluster = topic.split(":", 1)[0]
            lists.setdefault(cluster, []).append(formats.run_to_ranked(entries, index))
    return lists


def cmd_centroid_build(args):
    cfg = _config(args)
    index = load_index(args.index)
    clusters = formats.read_clusters(args.clusters)
    run_lists = _read_run_dir(args.runs, index) if args.runs else None
    entries = []
    for cid, vs in clusters.items():
        if run_lists is None:
            entries.append(build_centroid(index, vs, "sp_cs_bm25", cfg.centroid_depth, strategy=cfg.strategy))
        else:
            if cid not in run_lists:
                raise MissingRunError(f"no run lists for cluster {cid!r} in {args.runs}")
            entries.append(
                build_centroid(index, vs, "multi_run_combsum", cfg.centroid_depth, runs=run_lists[cid], fuser=args.fuser)
            )
    save_centroids(entries, args.out, rank_only=args.rank_only)
    print(f"stored {len(entries)} centroids -> {args.out}", file=sys.stderr)


def _assignments(args, queries, centroids, cfg) -> dict[str, str | None]:
    if args.assignments:
        given = formats.read_assignments(args.assignments)
        return {q: given.get(q) for q in queries}
    if args.clusters:
        pseudo = build_pseudo_index(formats.read_clusters(args.clusters), cfg.bm25)
        return {q: match_cluster(terms, pseudo).matched_cluster for q, terms in queries.items()}
    return {q: q if q in centroids else None for q in queries}


def cmd_boost(args):
    cfg = _config(args)
    if cfg.epsilon > 0 and not args.out_dir:
        raise UsageError("--epsilon > 0 runs error trials and needs --out-dir")
    index = load_index(args.index)
    centroids = load_centroids(args.centroids)
    queries = formats.read_queries(args.queries)
    k = cfg.k
    runs = {q: retrieve(index, WeightedQuery.from_terms(t), k, cfg.strategy)[0] for q, t in queries.items()}
    assigned = _assignments(args, queries, centroids, cfg)
    tag = args.tag or f"boost-{args.method}"

    def boosted(assignment) -> list[str]:
        lines = []
        for qid, run in runs.items():
            entry: CentroidEntry | None = centroids.get(assignment.get(qid) or "")
            out = boost(args.method, entry, run, k, cfg.delta)
            lines += formats.run_lines(qid, out, index, tag)
        return lines

    if cfg.epsilon == 0:
        text = formats.join_lines(boosted(assigned))
        if args.out_dir:
            formats.write_atomic(Path(args.out_dir) / "boost.run", text)
        else:
            _emit(text, args.out)
        return
    matched = {q: c for q, c in assigned.items() if c is not None}
    universe = sorted(centroids)
    outputs = {}
    for trial in range(cfg.trials):
        noisy = {**assigned, **inject_error(matched, cfg.epsilon, cfg.seed, universe, trial=trial)}
        outputs[f"trial-{trial:02d}.run"] = formats.join_lines(boosted(noisy))
        outputs[f"assignments-{trial:02d}.tsv"] = formats.join_lines(
            formats.assignment_lines({q: c for q, c in noisy.items() if c is not None})
        )
    outputs["config.txt"] = cfg.header() + "\n"
    for name, text in outputs.items():
        formats.write_atomic(Path(args.out_dir) / name, text)


def cmd_match(args):
    cfg = _config(args)
    truth = formats.read_clusters(args.queries)
    clusters = formats.read_clusters(args.clusters)
    pool = list(clusters.values())
    if args.distractors:
        vocabs = [sorted({t for v in vs.variations for t in v}) for vs in pool]
        pool += generate_distractors(args.distractors, args.overlap, vocabs, cfg.seed)
    queries = [(cid, v) for cid, vs in truth.items() for v in vs.variations]
    results, rate = match_queries(queries, pool, cfg.bm25)
    lines = [cfg.header(), "query,true_cluster,matched_cluster,score"]
    for i, (true, m) in enumerate(results, 1):
        lines.append(f"{i},{true},{m.matched_cluster or '-'},{m.match_score:.6f}")
    lines.append(f"# distractors={args.distractors} overlap={args.overlap} success_rate={rate:.6f}")
    _emit(formats.join_lines(lines), args.out)


def _per_topic(run, qrels, metric, phi, topics, sep):
    """Score every topic; with ``sep`` the qrels topic is the id's prefix."""
    scores = []
    for topic in topics:
        qtopic = topic.split(sep, 1)[0] if sep else topic
        docs = [d for d, _ in run.get(topic, [])]
        scores.append(replace(evaluate(metric, docs, qrels, qtopic, phi), topic=topic))
    return scores


def cmd_eval(args):
    cfg = _config(args)
    qrels = formats.read_qrels(args.qrels)
    baseline = formats.read_run(args.baseline)
    runs = [(args.run, formats.read_run(args.run))] + [(p, formats.read_run(p)) for p in args.also]
    if args.query_topic_sep:
        topics = sorted(set(baseline) | {t for _, r in runs for t in r})
    else:
        topics = sorted(qrels)
    if not topics:
        raise DataError("no topics to evaluate")
    m = args.bonferroni or len(runs)
    base_scores = _per_topic(baseline, qrels, args.metric, cfg.phi, topics, args.query_topic_sep)
    base_map = {s.topic: s.value for s in base_scores}
    missing = sorted({s.topic for s in base_scores if s.missing_topic})
    if missing:
        log.warning("%d topics absent from qrels scored 0: %s", len(missing), ", ".join(missing[:5]))
    lines = [cfg.header()]
    for path, run in runs:
        scores = _per_topic(run, qrels, args.metric, cfg.phi, topics, args.query_topic_sep)
        report = None
        if len(topics) >= 2:
            report = risk_report(args.metric, {s.topic: s.value for s in scores}, base_map, cfg.alpha, cfg.band, m)
        lines.append(f"# run={Path(path).name} baseline={Path(args.baseline).name}")
        lines += report_lines(scores, args.metric, report)
    _emit(formats.join_lines(lines), args.out)


def cmd_bench(args):
    cfg = _config(args)
    index = load_index(args.index)
    clusters = formats.read_clusters(args.clusters)
    qrels = formats.read_qrels(args.qrels) if args.qrels else None
    sizes = [int(x) for x in args.variants.split(",")]
    strategies = args.strategies.split(",")
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r}")
    rows, eff = bench_variants(
        index, clusters, sizes, cfg.seed, args.reps, args.fused_k, args.depth, strategies, cfg.workers, qrels, cfg.phi
    )
    lines = [cfg.header(), BENCH_COLUMNS] + [r.csv(not args.no_timing) for r in rows]
    if args.effectiveness and qrels is not None:
        eff_lines = [cfg.header(), "variants,ndcg@10,rbp,rbp_residual"]
        eff_lines += [f"{m},{n:.6f},{r:.6f},{res:.6f}" for m, n, r, res in eff]
        formats.write_atomic(args.effectiveness, formats.join_lines(eff_lines))
    _emit(formats.join_lines(lines), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--no-timing", action="store_true", help="write 0 for timing columns (byte-stable output)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="varfuse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=func)
        return sp

    sp = add("index-build", cmd_index_build, "build an index from a docid<TAB>text corpus")
    sp.add_argument("corpus")
    sp.add_argument("out")
    sp.add_argument("--k1", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--block-size", type=int)

    sp = add("query-run", cmd_query_run, "run plain queries and emit a TREC run")
    sp.add_argument("index")
    sp.add_argument("queries")
    sp.add_argument("--strategy", choices=sorted(STRATEGIES))
    sp.add_argument("--k", type=int)
    sp.add_argument("--tag")
    sp.add_argument("--out")
    sp.add_argument("--stats", help="CSV of per-query cost")

    sp = add("fuse", cmd_fuse, "fuse each variation cluster into one run")
    sp.add_argument("index")
    sp.add_argument("clusters")
    sp.add_argument("--mode", choices=EXECUTORS, default="sp-cs")
    sp.add_argument("--strategy", choices=sorted(STRATEGIES))
    sp.add_argument("--k", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--tag")
    sp.add_argument("--out")
    sp.add_argument("--stats")

    sp = add("centroid-build", cmd_centroid_build, "precompute cluster centroids")
    sp.add_argument("index")
    sp.add_argument("clusters")
    sp.add_argument("out")
    sp.add_argument("--depth", dest="centroid_depth", type=int)
    sp.add_argument("--strategy", choices=sorted(STRATEGIES))
    sp.add_argument("--runs", help="directory of *.run files to fuse instead of BM25")
    sp.add_argument("--fuser", choices=["combsum", "combmnz", "rrf"], default="combsum")
    sp.add_argument("--rank-only", action="store_true", help="store docids without scores")

    sp = add("boost", cmd_boost, "boost query runs with matched centroids")
    sp.add_argument("index")
    sp.add_argument("centroids")
    sp.add_argument("queries")
    sp.add_argument("--method", choices=BOOSTERS, required=True)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--strategy", choices=sorted(STRATEGIES))
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--assignments", help="query_id<TAB>cluster_id file")
    src.add_argument("--clusters", help="variation clusters to match queries against")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--tag")
    sp.add_argument("--out")
    sp.add_argument("--out-dir", help="directory for per-trial runs")

    sp = add("match", cmd_match, "match labelled queries to clusters")
    sp.add_argument("queries", help="cluster_id<TAB>query text (true labels)")
    sp.add_argument("clusters")
    sp.add_argument("--distractors", type=int, default=0)
    sp.add_argument("--overlap", type=float, default=0.0)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = add("eval", cmd_eval, "evaluate a run against a baseline")
    sp.add_argument("run")
    sp.add_argument("baseline")
    sp.add_argument("qrels")
    sp.add_argument("--also", action="append", default=[], help="additional run to compare (repeatable)")
    sp.add_argument("--metric", choices=METRICS, default="ndcg@10")
    sp.add_argument("--phi", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--band", type=float)
    sp.add_argument("--bonferroni", type=int, help="comparisons m (default: number of runs)")
    sp.add_argument("--query-topic-sep", help="qrels topic is the run topic up to this separator")
    sp.add_argument("--out")

    sp = add("bench", cmd_bench, "cost versus number of fused variants")
    sp.add_argument("index")
    sp.add_argument("clusters")
    sp.add_argument("--variants", default=",".join(map(str, VARIANT_SWEEP)))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--fused-k", type=int, default=100, help="depth of the fused SERP")
    sp.add_argument("--depth", type=int, default=1000, help="per-variation depth for pf and sp-exhaustive")
    sp.add_argument("--strategies", default="maxscore,wand,bmw")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--qrels")
    sp.add_argument("--effectiveness", help="CSV of SP-CS effectiveness per variant count")
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"varfuse {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, VarfuseError) as exc:
        print(f"varfuse {args.command}: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
