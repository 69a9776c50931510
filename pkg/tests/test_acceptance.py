"""Acceptance criteria, one test each; every test records a pass/fail line.

The summary is printed at the end of the pytest run by ``conftest.py``.
"""

import itertools
import math
import random
import statistics
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from varfuse import build_index
from varfuse.centroid import (
    BOOSTERS,
    CentroidEntry,
    boost,
    build_centroid,
    build_pseudo_index,
    inject_error,
    interleave,
    linear_combination,
    rcc,
    ref_reorder,
)
from varfuse.cli import main
from varfuse.evaluation import ndcg_at_k, paired_t_bonferroni, rbp, trisk, urisk
from varfuse.experiments import epsilon_effectiveness, match_queries, run_method
from varfuse.fusion import QueryVariationSet, sp_cs, variant_sequence
from varfuse.synthetic import (
    SyntheticConfig,
    background_term,
    generate_collection,
    generate_distractors,
    generate_match_clusters,
    topic_term,
)
from varfuse.traversal import RankedList, WeightedQuery, retrieve

from conftest import index_of, random_corpus, record
from oracles import brute_combsum, brute_rank, close

pytestmark = pytest.mark.acceptance

DATA = Path(__file__).resolve().parent.parent / "data" / "tutorial"


def test_01_super_query_equals_combsum():
    rng = random.Random(20240601)
    start = time.perf_counter()
    instances, failures = 0, []
    for i in range(220):
        vocab, docs = random_corpus(rng, rng.randint(5, 500), rng.randint(5, 60))
        index = index_of(docs, block_size=rng.randint(2, 64))
        variations = tuple(
            tuple(rng.sample(vocab, rng.randint(1, min(5, len(vocab))))) for _ in range(rng.randint(1, 8))
        )
        vs = QueryVariationSet(f"t{i}", variations)
        n = len(docs)
        got, _ = sp_cs(index, vs, n, rng.choice(["exhaustive", "maxscore", "wand", "bmw"]))
        # oracle: full-depth per-variation BM25 lists, summed in a dictionary
        expected = brute_combsum(brute_rank(docs, {t: 1 for t in set(v)}) for v in variations)
        same_order = got.docs == [d for d, _ in expected]
        same_scores = len(got) == len(expected) and all(close(s, e, 1e-9) for s, (_, e) in zip(got.scores, expected))
        instances += 1
        if not (same_order and same_scores):
            failures.append(i)
    elapsed = time.perf_counter() - start
    ok = not failures and instances >= 200 and elapsed < 60
    record(1, "super query == CombSUM", ok, f"{instances} instances, {len(failures)} mismatches, {elapsed:.1f}s")
    assert ok, failures[:10]


def test_02_safe_to_k():
    rng = random.Random(77)
    start = time.perf_counter()
    triples, mismatches = 0, []
    while triples < 510:
        vocab, docs = random_corpus(rng, rng.randint(1, 300), rng.randint(2, 40))
        index = index_of(docs, block_size=rng.randint(1, 48))
        for _ in range(10):
            terms = rng.sample(vocab, rng.randint(1, min(8, len(vocab))))
            wq = WeightedQuery(tuple((t, rng.choice([1, 1, 1, 2, 3, 7])) for t in terms))
            k = rng.choice([1, 2, 3, 5, 10, 20, 50, 1000])
            reference, _ = retrieve(index, wq, k, "exhaustive")
            for strategy in ("maxscore", "wand", "bmw"):
                got, _ = retrieve(index, wq, k, strategy)
                triples += 1
                if got != reference:
                    mismatches.append((strategy, k, wq))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 60
    record(2, "safe-to-k pruning", ok, f"{triples} triples, {len(mismatches)} mismatches, {elapsed:.1f}s")
    assert ok, mismatches[:3]


@pytest.fixture(scope="module")
def collection():
    col = generate_collection(SyntheticConfig(), seed=7)
    return col, build_index(col.corpus)


def _overlap_cluster():
    core = tuple(topic_term(0, j) for j in range(3))
    pool = [topic_term(0, j) for j in range(3, 10)]
    pairs = list(itertools.combinations(pool, 2))[::2][:10]
    return [core + p for p in pairs]


def test_03_cost_trend(collection):
    _, index = collection
    variations = _overlap_cluster()
    first = set(variations[0])
    overlap = min(len(first & set(v)) / len(v) for v in variations)
    cost = {}
    for m in range(1, 11):
        vs = QueryVariationSet("c", tuple(variations[:m]))
        for method in ("sp-cs-maxscore", "sp-exhaustive", "pf-maxscore"):
            _, s = run_method(index, vs, method, k=100, depth=1000)
            cost[method, m] = s.postings_scored
    ordered = all(
        cost["sp-cs-maxscore", m] <= cost["sp-exhaustive", m] <= cost["pf-maxscore", m] for m in range(1, 11)
    )
    cs_growth = cost["sp-cs-maxscore", 10] / cost["sp-cs-maxscore", 1]
    pf_growth = cost["pf-maxscore", 10] / cost["pf-maxscore", 1]
    # sublinear: well under the 10x of one pass per variant; near-linear: at least 7x
    ok = overlap >= 0.6 and ordered and cs_growth <= 5 and pf_growth >= 7 and cs_growth < pf_growth
    record(
        3,
        "cost trend sp_cs <= sp_exhaustive <= pf",
        ok,
        f"overlap={overlap:.2f} growth 1->10: sp_cs x{cs_growth:.2f}, pf x{pf_growth:.2f}",
    )
    assert ok, cost


def test_04_fusion_benefit():
    sizes = [1, 2, 3, 4, 5]
    per_seed = []
    for seed in range(10):
        col = generate_collection(SyntheticConfig(), seed=seed)
        index = build_index(col.corpus)
        totals = {m: [] for m in sizes}
        for topic, vs in col.held_in.items():
            for rep in range(3):
                for sample in variant_sequence(vs, sizes, seed, sequence=rep):
                    fused, _ = sp_cs(index, sample, 10)
                    docs = [index.docid(d) for d in fused.docs]
                    totals[len(sample)].append(ndcg_at_k(docs, col.qrels, topic).value)
        per_seed.append([statistics.fmean(totals[m]) for m in sizes])
    means = [statistics.fmean(s[i] for s in per_seed) for i in range(len(sizes))]
    ok = all(b >= a - 0.01 for a, b in zip(means, means[1:]))
    record(4, "fusion benefit 1->5 variants", ok, "NDCG@10 " + " ".join(f"{m}:{v:.3f}" for m, v in zip(sizes, means)))
    assert ok, means


# Ten pinned queries: (ranking_system, ranking_baseline) over judged/unjudged ids.
QRELS5 = {
    f"q{i}": {f"r{i}a": 2, f"r{i}b": 1, f"r{i}c": 1, f"n{i}a": 0, f"n{i}b": 0} for i in range(10)
}
SYSTEM5 = {
    "q0": ["r0a", "r0b", "n0a", "u", "r0c"],
    "q1": ["n1a", "r1a", "u", "r1b"],
    "q2": ["r2b", "r2a", "r2c"],
    "q3": ["u", "u2", "n3a", "r3c"],
    "q4": ["r4a", "n4a", "n4b", "r4b", "r4c"],
    "q5": ["r5c", "u", "r5b", "r5a"],
    "q6": ["n6a", "n6b", "u"],
    "q7": ["r7a"],
    "q8": ["u", "r8a", "r8b", "r8c", "n8a"],
    "q9": ["r9b", "n9b", "r9a"],
}
BASELINE5 = {
    "q0": ["n0a", "r0b", "r0a"],
    "q1": ["r1a", "r1b", "r1c"],
    "q2": ["u", "r2c", "n2a", "r2a"],
    "q3": ["r3a", "u"],
    "q4": ["n4a", "r4c"],
    "q5": ["r5a", "r5b", "r5c"],
    "q6": ["r6b", "u", "r6a"],
    "q7": ["n7a", "n7b", "r7a"],
    "q8": ["r8c"],
    "q9": ["u", "u2", "r9a", "r9b"],
}


def _oracle_ndcg(ranking, judged, k=10):
    gains = np.array([2.0 ** judged.get(d, 0) - 1 for d in ranking[:k]])
    disc = np.log2(np.arange(2, len(gains) + 2))
    ideal = np.sort(np.array([2.0**g - 1 for g in judged.values()]))[::-1][:k]
    idisc = np.log2(np.arange(2, len(ideal) + 2))
    return float((gains / disc).sum() / (ideal / idisc).sum())


def _oracle_rbp(ranking, judged, phi=0.8):
    w = (1 - phi) * phi ** np.arange(len(ranking))
    rel = np.array([judged.get(d, -1) >= 1 for d in ranking], dtype=bool)
    unj = np.array([d not in judged for d in ranking], dtype=bool)
    return float(w[rel].sum()), float(w[unj].sum() + phi ** len(ranking))


def test_05_metric_correctness():
    checks = []
    sys_nd, base_nd = [], []
    for q in sorted(QRELS5):
        judged = QRELS5[q]
        for ranking, sink in ((SYSTEM5[q], sys_nd), (BASELINE5[q], base_nd)):
            nd = ndcg_at_k(ranking, QRELS5, q).value
            checks.append(abs(nd - _oracle_ndcg(ranking, judged)) <= 1e-6)
            sink.append(nd)
            r = rbp(ranking, QRELS5, q, 0.8)
            value, residual = _oracle_rbp(ranking, judged)
            checks.append(abs(r.value - value) <= 1e-6 and abs(r.residual - residual) <= 1e-6)
    s, b = np.array(sys_nd), np.array(base_nd)
    d = s - b
    r = np.where(d > 0, d, 4.0 * d)
    checks.append(abs(urisk(sys_nd, base_nd, 3.0) - r.mean()) <= 1e-6)
    checks.append(abs(trisk(sys_nd, base_nd, 3.0) - stats.ttest_1samp(r, 0.0).statistic) <= 1e-6)
    m = 3
    res = paired_t_bonferroni(sys_nd, base_nd, m)
    ref = stats.ttest_rel(s, b)
    checks.append(abs(res.t - ref.statistic) <= 1e-6)
    checks.append(abs(res.p_adjusted - min(1.0, m * ref.pvalue)) <= 1e-6)
    alpha_zero_exact = trisk(sys_nd, base_nd, 0.0) == res.t
    ok = all(checks) and alpha_zero_exact
    record(5, "metric correctness", ok, f"{sum(checks)}/{len(checks)} oracle checks, trisk(alpha=0)==t: {alpha_zero_exact}")
    assert ok


def test_06_boosting_semantics():
    a, b, c, x, y, d1, d2, d3, d5 = range(9)
    R = RankedList.from_docs
    goldens = [
        interleave(R([a, b]), R([x, y]), 4).docs == [a, x, b, y],
        interleave(R([a, b, c]), R([a, b, c]), 2).docs == [a, b],
        interleave(R([a, b, c]), R([b]), 3).docs == [a, b, c],
        interleave(R([]), R([]), 3).docs == [],
        ref_reorder(R([d3, d1, d5]), R([d1, d2, d3]), 3).docs == [d3, d1, d2],
        rcc(CentroidEntry("c", R([a, b, c])), 2).docs == [a, b],
    ]
    cs = RankedList.from_scores({a: 3.0, b: 2.0, c: 1.0})
    qs = RankedList.from_scores({c: 9.0, x: 5.0, a: 1.0})
    goldens += [
        linear_combination(cs, qs, 0.0, 3).docs == [c, x, a],
        linear_combination(cs, qs, 1.0, 3).docs == [a, b, c],
        linear_combination(cs, qs, 0.5, 4).docs == [a, c, b, x],
    ]
    rng = random.Random(6)
    clean = True
    for _ in range(300):
        cdocs = rng.sample(range(60), rng.randint(0, 40))
        qdocs = rng.sample(range(60), rng.randint(0, 40))
        entry = CentroidEntry("c", RankedList.from_scores({d: rng.random() for d in cdocs}))
        q = RankedList.from_scores({d: rng.random() * 10 for d in qdocs})
        k = rng.randint(1, 50)
        for method in BOOSTERS:
            out = boost(method, entry, q, k, rng.choice([0.0, 0.5, 1.0]))
            clean &= len(out) <= k and len(set(out.docs)) == len(out)
    ok = all(goldens) and clean
    record(6, "boosting semantics", ok, f"{sum(goldens)}/{len(goldens)} goldens, duplicate-free and <= k: {clean}")
    assert ok


@pytest.fixture(scope="module")
def boosted_world(collection):
    col, index = collection
    centroids = {t: build_centroid(index, vs) for t, vs in col.held_in.items()}
    runs = {
        qid: retrieve(index, WeightedQuery.from_terms(text.split()), 1000, "maxscore")[0]
        for qid, (_, text) in col.held_out.items()
    }
    truth = {qid: topic for qid, (topic, _) in col.held_out.items()}
    return col, index, centroids, runs, truth


def test_07_epsilon_protocol(boosted_world):
    col, index, centroids, runs, truth = boosted_world
    clusters = [f"c{i}" for i in range(50)]
    synthetic_truth = {f"q{i:05d}": clusters[i % 50] for i in range(10_000)}
    rates = {}
    for eps in (0.0, 0.05, 0.2, 1.0):
        noisy = inject_error(synthetic_truth, eps, seed=2024, clusters=clusters)
        rates[eps] = sum(noisy[q] != t for q, t in synthetic_truth.items()) / len(synthetic_truth)
    rate_ok = all(abs(rates[e] - e) <= 0.02 for e in rates)
    eff = {eps: epsilon_effectiveness(index, centroids, runs, truth, col.qrels, eps, seed=2024) for eps in (0.0, 0.05, 0.2, 1.0)}
    monotone = all(eff[a][m] >= eff[b][m] for m in BOOSTERS for a, b in [(0.0, 0.05), (0.05, 0.2), (0.2, 1.0)])
    ok = rate_ok and monotone
    detail = " ".join(f"eps={e}:{rates[e]:.4f}" for e in rates) + " | " + " ".join(
        f"{m} " + "/".join(f"{eff[e][m]:.3f}" for e in eff) for m in BOOSTERS
    )
    record(7, "epsilon misassignment protocol", ok, detail)
    assert ok, (rates, eff)


def test_08_matching_protocol():
    clusters, held_out = generate_match_clusters(seed=0)
    vocabs = [sorted({t for v in vs.variations for t in v}) for vs in clusters.values()]
    settings = [(0, 0.0), (50, 0.2), (100, 0.4), (200, 0.6), (400, 0.8)]
    rates = []
    for n, overlap in settings:
        pool = list(clusters.values()) + generate_distractors(n, overlap, vocabs, seed=0)
        rates.append(match_queries(held_out, pool)[1])
    ok = rates[0] == 1.0 and all(b <= a for a, b in zip(rates, rates[1:]))
    detail = " ".join(f"{n}@{o}:{r:.3f}" for (n, o), r in zip(settings, rates))
    record(8, "cluster matching under distractors", ok, detail)
    assert ok, rates


def _best_ns(fn, reps):
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        out = fn()
        best = min(best, time.perf_counter_ns() - t0)
    return best, out


def test_09_boost_overhead():
    col = generate_collection(SyntheticConfig(background_docs=2000), seed=1)
    index = build_index(col.corpus)
    common = (background_term(0),)
    centroids = {
        t: build_centroid(index, QueryVariationSet(t, vs.variations + (common,)), depth=1000)
        for t, vs in col.held_in.items()
    }
    k = 1000
    totals = {"query": 0, "interleave": 0, "lc": 0, "ref-reorder": 0}
    for topic, text in col.held_out.values():
        wq = WeightedQuery.from_terms(text.split() + [background_term(0), background_term(1)])
        t, run = _best_ns(lambda: retrieve(index, wq, k, "maxscore")[0], 3)
        totals["query"] += t
        for method in ("interleave", "lc", "ref-reorder"):
            t, _ = _best_ns(lambda: boost(method, centroids[topic], run, k), 5)
            totals[method] += t
    share = {m: totals[m] / (totals["query"] + totals[m]) for m in ("interleave", "lc", "ref-reorder")}
    ok = (
        totals["ref-reorder"] < totals["interleave"]
        and totals["ref-reorder"] < totals["lc"]
        and all(v < 0.10 for v in share.values())
    )
    record(9, "boost overhead at k=1000", ok, " ".join(f"{m}={share[m]:.1%}" for m in share))
    assert ok, (totals, share)


def _cli_pipeline(out: Path):
    tutorial = [
        ["index-build", DATA / "corpus.tsv", out / "index"],
        ["query-run", out / "index", DATA / "queries.tsv", "--k", "20", "--no-timing",
         "--stats", out / "query.csv", "--out", out / "query.run"],
        ["centroid-build", out / "index", DATA / "clusters.tsv", out / "centroids.bin"],
        ["centroid-build", out / "index", DATA / "clusters.tsv", out / "centroids-rank.bin", "--rank-only"],
        ["match", DATA / "clusters.tsv", DATA / "clusters.tsv", "--distractors", "40", "--overlap", "0.5",
         "--seed", "3", "--out", out / "match.csv"],
        ["boost", out / "index", out / "centroids.bin", DATA / "queries.tsv", "--method", "rcc", "--k", "10",
         "--epsilon", "0.3", "--seed", "11", "--out-dir", out / "eps"],
        ["bench", out / "index", DATA / "clusters.tsv", "--variants", "1,2,5", "--reps", "3", "--no-timing",
         "--strategies", "maxscore,bmw", "--qrels", DATA / "qrels.txt", "--effectiveness", out / "eff.csv",
         "--out", out / "bench.csv"],
    ]
    for mode in ("sp-cs", "pf", "sp-exhaustive"):
        tutorial.append(["fuse", out / "index", DATA / "clusters.tsv", "--mode", mode, "--k", "20", "--no-timing",
                         "--stats", out / f"{mode}.csv", "--out", out / f"{mode}.run"])
        tutorial.append(["eval", out / f"{mode}.run", out / "query.run", DATA / "qrels.txt", "--metric", "rbp",
                         "--out", out / f"{mode}.eval"])
    for method in BOOSTERS:
        tutorial.append(["boost", out / "index", out / "centroids.bin", DATA / "queries.tsv", "--method", method,
                         "--k", "10", "--clusters", DATA / "clusters.tsv", "--out", out / f"{method}.run"])
    for argv in tutorial:
        code = main([str(a) for a in argv])
        if code != 0:
            return argv
    return None


def test_10_cli_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    failed = _cli_pipeline(a) or _cli_pipeline(b)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    trials = [p for p in files if p.name.startswith("trial-")]
    differing = [str(p) for p in files if (a / p).read_bytes() != (b / p).read_bytes()]
    missing = [str(p) for p in files if not (b / p).is_file()]
    ok = failed is None and len(trials) == 10 and not differing and not missing
    record(10, "CLI determinism", ok, f"{len(files)} files, {len(trials)} epsilon trials, {len(differing)} differ")
    assert ok, (failed, differing, missing)
