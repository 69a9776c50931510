"""Experiment drivers shared by the CLI, ``scripts/`` and the acceptance tests."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from .centroid import (
    BOOSTERS,
    CentroidEntry,
    ClusterMatch,
    boost,
    build_pseudo_index,
    inject_error,
    match_cluster,
)
from .errors import ConfigError
from .evaluation import ndcg_at_k, rbp
from .fusion import QueryVariationSet, fuse_runs, pf, sp_cs, sp_exhaustive, variant_sequence
from .index import InvertedIndex
from .scoring import BM25Params
from .traversal import RankedList, TraversalStats, measure

VARIANT_SWEEP = (1, 2, 5, 10, 20, 50, 100)
BENCH_COLUMNS = "topic,strategy,variants,postings,cpu_ns,wall_ns"


@dataclass(frozen=True)
class CostRow:
    topic: str
    method: str
    variants: int
    postings: float
    cpu_ns: float
    wall_ns: float

    def csv(self, timing: bool = True) -> str:
        cpu, wall = (round(self.cpu_ns), round(self.wall_ns)) if timing else (0, 0)
        return f"{self.topic},{self.method},{self.variants},{self.postings:.1f},{cpu},{wall}"


def run_method(index: InvertedIndex, vs: QueryVariationSet, method: str, k: int, depth: int, workers: int = 1):
    """Fused top-``k`` and cost for one method name.

    Method names: ``sp-exhaustive``, ``sp-cs-<strategy>``, ``pf-<strategy>``.
    Per-variation lists (pf, sp-exhaustive) are computed to ``depth``.
    """
    if method == "sp-exhaustive":
        runs, stats = sp_exhaustive(index, vs, depth)
        fusion = TraversalStats()
        with measure(fusion):
            fused = fuse_runs(runs, k)
        total = stats + fusion
        return fused, total
    if method.startswith("sp-cs-"):
        return sp_cs(index, vs, k, method[len("sp-cs-"):])
    if method.startswith("pf-"):
        return pf(index, vs, k, workers, method[len("pf-"):], depth=depth)
    raise ConfigError(f"unknown method {method!r}")


def bench_methods(strategies: Sequence[str]) -> list[str]:
    return [f"pf-{s}" for s in strategies] + ["sp-exhaustive"] + [f"sp-cs-{s}" for s in strategies]


def bench_variants(
    index: InvertedIndex,
    clusters: Mapping[str, QueryVariationSet],
    sizes: Sequence[int] = VARIANT_SWEEP,
    seed: int = 0,
    reps: int = 10,
    k: int = 100,
    depth: int = 1000,
    strategies: Sequence[str] = ("maxscore", "wand", "bmw"),
    workers: int = 1,
    qrels: Mapping[str, Mapping[str, int]] | None = None,
    phi: float = 0.8,
) -> tuple[list[CostRow], list[tuple[int, float, float, float]]]:
    """Cost (and optionally effectiveness) as the number of fused variants grows.

    For every topic and repetition one incremental with-replacement sequence
    is drawn; each prefix size in ``sizes`` is executed by every method and
    costs are averaged over repetitions. Effectiveness rows are
    ``(variants, mean NDCG@10, mean RBP, mean RBP residual)`` of the SP-CS
    run, averaged over topics and repetitions.
    """
    methods = bench_methods(strategies)
    rows = []
    eff: dict[int, list[tuple[float, float, float]]] = {m: [] for m in sizes}
    for topic, vs in clusters.items():
        acc = {(meth, m): [0.0, 0.0, 0.0] for meth in methods for m in sizes}
        for rep in range(reps):
            for sample in variant_sequence(vs, sizes, seed, sequence=rep):
                m = len(sample)
                for meth in methods:
                    fused, stats = run_method(index, sample, meth, k, depth, workers)
                    a = acc[meth, m]
                    a[0] += stats.postings_scored
                    a[1] += stats.cpu_ns
                    a[2] += stats.elapsed_ns
                if qrels is not None:
                    fused, _ = sp_cs(index, sample, k, strategies[0])
                    docs = [index.docid(d) for d in fused.docs]
                    r = rbp(docs, qrels, topic, phi)
                    eff[m].append((ndcg_at_k(docs, qrels, topic).value, r.value, r.residual))
        for m in sizes:
            for meth in methods:
                p, c, w = acc[meth, m]
                rows.append(CostRow(topic, meth, m, p / reps, c / reps, w / reps))
    eff_rows = []
    if qrels is not None:
        for m in sizes:
            vals = eff[m]
            eff_rows.append((m, *(math.fsum(v[i] for v in vals) / len(vals) for i in range(3))))
    return rows, eff_rows


def match_queries(
    queries: Sequence[tuple[str, Sequence[str]]],
    clusters: Sequence[QueryVariationSet] | Mapping[str, QueryVariationSet],
    params: BM25Params = BM25Params(),
) -> tuple[list[tuple[str, ClusterMatch]], float]:
    """Match ``(true_cluster, terms)`` queries; return matches and success rate."""
    pseudo = build_pseudo_index(clusters, params)
    results = [(true, match_cluster(terms, pseudo)) for true, terms in queries]
    hits = sum(1 for true, m in results if m.matched_cluster == true)
    return results, hits / len(results) if results else 0.0


def epsilon_effectiveness(
    index: InvertedIndex,
    centroids: Mapping[str, CentroidEntry],
    query_runs: Mapping[str, RankedList],
    truth: Mapping[str, str],
    qrels: Mapping[str, Mapping[str, int]],
    epsilon: float,
    seed: int = 0,
    trials: int = 10,
    methods: Sequence[str] = BOOSTERS,
    k: int = 10,
    delta: float = 0.5,
) -> dict[str, float]:
    """Mean NDCG@k of each boosting method under ``epsilon`` misassignment.

    Each query's relevance is judged against its true cluster's topic while
    the centroid comes from the (possibly corrupted) assignment.
    """
    universe = sorted(centroids)
    sums = {m: [] for m in methods}
    for trial in range(trials):
        assigned = inject_error(truth, epsilon, seed, universe, trial=trial)
        for qid, run in query_runs.items():
            c = centroids.get(assigned[qid])
            for m in methods:
                out = boost(m, c, run, k, delta)
                docs = [index.docid(d) for d in out.docs]
                sums[m].append(ndcg_at_k(docs, qrels, truth[qid], k).value)
    return {m: math.fsum(v) / len(v) for m, v in sums.items()}
