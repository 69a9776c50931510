"""Fusing the rankings of a cluster of query variations.

Three executors produce a fused SERP from a :class:`QueryVariationSet`:

``pf``
    Each unique variation runs independently on a worker pool; the
    per-variation top-k lists are fused with CombSUM.
``sp_exhaustive``
    One DaaT pass over the union of the variations' postings, scoring each
    posting once and feeding a top-k heap per unique variation.
``sp_cs``
    The CombSUM of unnormalized additive scores equals a single weighted
    "super query" whose term weights are the number of variations that
    contain the term, so it is evaluated with any safe-to-k strategy.

Duplicate variations (from with-replacement sampling) count once per
occurrence: they raise ``n_t`` in the super query and weight a shared heap
by its multiplicity in the other two executors.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import ConfigError
from .index import InvertedIndex
from .rng import make_rng
from .text import normalize
from .traversal import (
    END,
    Cursor,
    RankedList,
    TopK,
    TraversalStats,
    WeightedQuery,
    measure,
    retrieve,
)


@dataclass(frozen=True)
class QueryVariationSet:
    topic_id: str
    variations: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.variations:
            raise ConfigError(f"topic {self.topic_id!r}: a variation set needs at least one query")
        object.__setattr__(self, "variations", tuple(tuple(v) for v in self.variations))

    @classmethod
    def from_texts(cls, topic_id: str, texts: Iterable[str]) -> QueryVariationSet:
        return cls(topic_id, tuple(tuple(normalize(t)) for t in texts))

    def __len__(self) -> int:
        return len(self.variations)

    def unique(self) -> list[tuple[WeightedQuery, int]]:
        """Distinct variations (as term sets) with their multiplicities.

        Sorted by term tuple so results do not depend on input order.
        Variations that normalize to nothing are dropped.
        """
        counts = Counter(tuple(sorted(set(v))) for v in self.variations)
        return [(WeightedQuery(tuple((t, 1) for t in key)), n) for key, n in sorted(counts.items()) if key]


@dataclass(frozen=True)
class SuperQuery(WeightedQuery):
    """Union of a cluster's terms, each weighted by ``n_t``."""

    num_variations: int = 1


def build_super_query(vs: QueryVariationSet) -> SuperQuery:
    counts: Counter[str] = Counter()
    for v in vs.variations:
        counts.update(set(v))
    return SuperQuery(tuple(sorted(counts.items())), len(vs.variations))


def minmax(ranked: RankedList) -> dict[int, float]:
    """Min-max rescale scores to [0, 1]; a constant-score list maps to 1.0."""
    if not len(ranked):
        return {}
    lo, hi = min(ranked.scores), max(ranked.scores)
    if hi == lo:
        return {e.doc: 1.0 for e in ranked}
    span = hi - lo
    return {e.doc: (e.score - lo) / span for e in ranked}


def _accumulate(lists: Sequence[RankedList], weights, normalize: bool) -> dict[int, list[float]]:
    if weights is None:
        weights = [1] * len(lists)
    elif len(weights) != len(lists):
        raise ConfigError("weights and lists differ in length")
    parts: dict[int, list[float]] = {}
    for ranked, w in zip(lists, weights):
        scores = minmax(ranked) if normalize else {e.doc: e.score for e in ranked}
        for d, s in scores.items():
            parts.setdefault(d, []).append(w * s)
    return parts


def combsum(lists: Sequence[RankedList], normalize: bool = False, weights: Sequence[float] | None = None) -> RankedList:
    """Sum each document's scores over the lists it appears in.

    ``weights`` multiplies a list's contribution; an integer weight ``m``
    is the same as repeating the list ``m`` times. The result holds every
    distinct document; callers truncate.
    """
    parts = _accumulate(lists, weights, normalize)
    return RankedList.from_scores({d: math.fsum(v) for d, v in parts.items()})


def combmnz(lists: Sequence[RankedList], normalize: bool = True, weights: Sequence[float] | None = None) -> RankedList:
    """CombSUM multiplied by the number of lists containing the document."""
    parts = _accumulate(lists, weights, normalize)
    return RankedList.from_scores({d: math.fsum(v) * len(v) for d, v in parts.items()})


def rrf(lists: Sequence[RankedList], c: int = 60, weights: Sequence[float] | None = None) -> RankedList:
    """Reciprocal rank fusion, ``sum 1 / (c + rank)``."""
    if weights is None:
        weights = [1] * len(lists)
    parts: dict[int, list[float]] = {}
    for ranked, w in zip(lists, weights):
        for rank, e in enumerate(ranked, 1):
            parts.setdefault(e.doc, []).append(w / (c + rank))
    return RankedList.from_scores({d: math.fsum(v) for d, v in parts.items()})


FUSERS = {"combsum": combsum, "combmnz": combmnz, "rrf": rrf}


def sp_cs(index: InvertedIndex, vs: QueryVariationSet, k: int, strategy: str = "maxscore"):
    """Single-pass CombSUM: evaluate the super query with ``strategy``."""
    return retrieve(index, build_super_query(vs), k, strategy)


@dataclass(frozen=True)
class VariationRun:
    query: WeightedQuery
    multiplicity: int
    ranking: RankedList


def fuse_runs(runs: Sequence[VariationRun], k: int | None = None) -> RankedList:
    fused = combsum([r.ranking for r in runs], weights=[r.multiplicity for r in runs])
    return fused if k is None else fused.truncate(k)


def sp_exhaustive(index: InvertedIndex, vs: QueryVariationSet, k: int) -> tuple[list[VariationRun], TraversalStats]:
    """One pass over the union of postings with a heap per unique variation."""
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    stats = TraversalStats()
    with measure(stats):
        unique = vs.unique()
        terms = sorted({t for q, _ in unique for t, _ in q.terms})
        owners: dict[str, list[int]] = {t: [] for t in terms}
        for v, (q, _) in enumerate(unique):
            for t, _ in q.terms:
                owners[t].append(v)
        cursors = [Cursor(index, t, 1) for t in terms if len(index.postings(t))]
        cursor_owners = [owners[c.term] for c in cursors]
        heaps = [TopK(k) for _ in unique]
        scored = 0
        while cursors:
            d = min(c.docid for c in cursors)
            if d == END:
                break
            contribs: dict[int, list[float]] = {}
            for c, vs_of_term in zip(cursors, cursor_owners):
                if c.docid == d:
                    s = c.score()
                    scored += 1
                    for v in vs_of_term:
                        contribs.setdefault(v, []).append(s)
                    c.next()
            for v, parts in contribs.items():
                heaps[v].push(d, math.fsum(parts))
        stats.postings_scored = scored
        runs = [VariationRun(q, m, h.ranked()) for (q, m), h in zip(unique, heaps)]
    return runs, stats


def pf(
    index: InvertedIndex,
    vs: QueryVariationSet,
    k: int,
    worker_budget: int = 1,
    strategy: str = "maxscore",
    depth: int | None = None,
) -> tuple[RankedList, TraversalStats]:
    """Parallel fusion: run each unique variation to ``depth`` and CombSUM.

    Aggregate ``postings_scored`` and ``cpu_ns`` are summed over workers;
    ``elapsed_ns`` is the slowest worker plus the fusion step.
    """
    if worker_budget < 1:
        raise ConfigError(f"worker_budget must be >= 1, got {worker_budget}")
    depth = k if depth is None else depth
    unique = vs.unique()

    def work(q: WeightedQuery):
        return retrieve(index, q, depth, strategy)

    if worker_budget == 1 or len(unique) <= 1:
        results = [work(q) for q, _ in unique]
    else:
        with ThreadPoolExecutor(max_workers=min(worker_budget, len(unique))) as pool:
            results = list(pool.map(work, [q for q, _ in unique]))

    fusion_stats = TraversalStats()
    with measure(fusion_stats):
        runs = [VariationRun(q, m, r) for (q, m), (r, _) in zip(unique, results)]
        fused = fuse_runs(runs, k)
    total = TraversalStats(cpu_clock=fusion_stats.cpu_clock)
    for _, s in results:
        total.postings_scored += s.postings_scored
        total.cpu_ns += s.cpu_ns
    total.cpu_ns += fusion_stats.cpu_ns
    total.elapsed_ns = max((s.elapsed_ns for _, s in results), default=0) + fusion_stats.elapsed_ns
    return fused, total


def sample_variants(vs: QueryVariationSet, m: int, seed: int, sequence: int = 0) -> QueryVariationSet:
    """Draw ``m`` variations with replacement.

    Draws are made one at a time from a stream keyed on the topic and the
    sequence number, so the sample of size ``m`` is a prefix of the sample
    of size ``m + 1`` for the same seed; that is the incremental 1, 2, ...
    protocol. Distinct ``sequence`` values give independent repetitions.
    """
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}")
    rng = make_rng(seed, "sample-variants", vs.topic_id, sequence)
    n = len(vs.variations)
    picks = [vs.variations[int(rng.integers(n))] for _ in range(m)]
    return QueryVariationSet(vs.topic_id, tuple(picks))


def variant_sequence(
    vs: QueryVariationSet, sizes: Iterable[int], seed: int, sequence: int = 0
) -> list[QueryVariationSet]:
    sizes = list(sizes)
    full = sample_variants(vs, max(sizes), seed, sequence)
    return [QueryVariationSet(vs.topic_id, full.variations[:m]) for m in sizes]


EXECUTORS = ("pf", "sp-exhaustive", "sp-cs")


def fuse(
    index: InvertedIndex,
    vs: QueryVariationSet,
    k: int,
    mode: str = "sp-cs",
    strategy: str = "maxscore",
    workers: int = 1,
) -> tuple[RankedList, TraversalStats]:
    """Dispatch to one of the three executors and return the fused top-k."""
    if mode == "sp-cs":
        return sp_cs(index, vs, k, strategy)
    if mode == "sp-exhaustive":
        t0 = time.perf_counter_ns()
        runs, stats = sp_exhaustive(index, vs, k)
        fusion = TraversalStats()
        with measure(fusion):
            fused = fuse_runs(runs, k)
        stats = stats + fusion
        stats.elapsed_ns = time.perf_counter_ns() - t0
        return fused, stats
    if mode == "pf":
        return pf(index, vs, k, workers, strategy)
    raise ConfigError(f"unknown fusion mode {mode!r}; choose from {EXECUTORS}")
