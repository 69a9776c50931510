"""Document-at-a-time top-k traversal over a weighted query.

Four strategies share one cursor and heap implementation:

* ``daat_exhaustive`` scores every document containing a query term and is
  the reference every pruned strategy must reproduce exactly;
* ``daat_maxscore`` splits terms into essential and non-essential sets by
  their cumulative upper bounds;
* ``daat_wand`` selects a pivot document from the docid-sorted cursors;
* ``daat_bmw`` refines the WAND pivot test with per-block maxima.

A term with query weight ``n_t`` contributes ``n_t * F(t, d)``; the pruning
bounds are scaled the same way at query time, so one index serves plain
queries and super queries alike.

Results are ordered by descending score, ties by ascending internal docid.
A document's final score is ``math.fsum`` of its per-term contributions,
which is independent of summation order, so every strategy produces
bit-identical scores for the documents it fully evaluates.
"""

from __future__ import annotations

import heapq
import math
import time
from bisect import bisect_left
from collections.abc import Iterable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from operator import attrgetter, neg
from typing import NamedTuple

from .errors import ConfigError
from .index import InvertedIndex
from .scoring import term_score

END = 1 << 62

# Pruning tests compare float sums of bounds against the heap threshold; the
# slack keeps a rounding-level shortfall in a bound from discarding a document
# that would tie or beat the threshold.
_SLACK = 1.0 + 1e-9

_new_tuple = tuple.__new__


class ScoredDoc(NamedTuple):
    doc: int
    score: float


@dataclass(frozen=True)
class RankedList:
    """Entries sorted by (score descending, doc ascending), at most ``k`` long."""

    entries: tuple[ScoredDoc, ...] = ()
    k: int | None = None

    def __post_init__(self):
        if self.k is not None and len(self.entries) > self.k:
            object.__setattr__(self, "entries", tuple(self.entries[: self.k]))

    @classmethod
    def from_scores(cls, scores: dict[int, float] | Iterable[tuple[int, float]], k: int | None = None) -> RankedList:
        if isinstance(scores, dict):
            keyed = sorted(zip(map(neg, scores.values()), scores.keys()))
        else:
            keyed = sorted([(-s, d) for d, s in scores])
        if k is not None:
            keyed = keyed[:k]
        # plain tuples compare in C and negating twice is exact; tuple.__new__
        # skips the namedtuple constructor's Python-level argument handling
        return cls(tuple([_new_tuple(ScoredDoc, (d, -ns)) for ns, d in keyed]), k)

    @classmethod
    def from_docs(cls, docs: Sequence[int], k: int | None = None) -> RankedList:
        """Rank-only list with synthetic ``1/rank`` scores."""
        if k is not None:
            docs = docs[:k]
        return cls(tuple([_new_tuple(ScoredDoc, (d, 1.0 / r)) for r, d in enumerate(docs, 1)]), k)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ScoredDoc]:
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def docs(self) -> list[int]:
        return [e.doc for e in self.entries]

    @property
    def scores(self) -> list[float]:
        return [e.score for e in self.entries]

    def truncate(self, k: int) -> RankedList:
        return RankedList(self.entries[:k], k)


@dataclass(frozen=True)
class WeightedQuery:
    """Unique terms with positive integer multiplicities ``n_t``."""

    terms: tuple[tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for term, weight in self.terms:
            if term in seen:
                raise ConfigError(f"duplicate query term {term!r}")
            if not isinstance(weight, int) or weight < 1:
                raise ConfigError(f"term weight must be a positive integer, got {weight!r} for {term!r}")
            seen.add(term)

    @classmethod
    def from_terms(cls, terms: Iterable[str]) -> WeightedQuery:
        """Plain user query: each distinct term once, weight 1."""
        return cls(tuple((t, 1) for t in dict.fromkeys(terms)))

    def scaled(self, factor: int) -> WeightedQuery:
        return WeightedQuery(tuple((t, w * factor) for t, w in self.terms))

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class TraversalStats:
    """Cost counters for one or more traversals.

    ``cpu_clock`` is ``"thread"`` when ``cpu_ns`` is per-thread processor
    time and ``"wall"`` when the platform lacks a thread clock and wall time
    was substituted.
    """

    postings_scored: int = 0
    elapsed_ns: int = 0
    cpu_ns: int = 0
    cpu_clock: str = "thread"

    def __add__(self, other: TraversalStats) -> TraversalStats:
        return TraversalStats(
            self.postings_scored + other.postings_scored,
            self.elapsed_ns + other.elapsed_ns,
            self.cpu_ns + other.cpu_ns,
            self.cpu_clock if self.cpu_clock == other.cpu_clock else "wall",
        )


try:
    time.thread_time_ns()
    _cpu_now, _CPU_CLOCK = time.thread_time_ns, "thread"
except (AttributeError, OSError):  # pragma: no cover - platform dependent
    _cpu_now, _CPU_CLOCK = time.perf_counter_ns, "wall"


@contextmanager
def measure(stats: TraversalStats):
    """Add the wall and processor time of the ``with`` body to ``stats``."""
    wall0, cpu0 = time.perf_counter_ns(), _cpu_now()
    try:
        yield stats
    finally:
        stats.elapsed_ns += time.perf_counter_ns() - wall0
        stats.cpu_ns += _cpu_now() - cpu0
        stats.cpu_clock = _CPU_CLOCK


class Cursor:
    __slots__ = (
        "term", "docs", "freqs", "norms", "size", "pos", "docid",
        "scale", "weight", "ub", "lasts", "maxes", "block_size",
    )

    def __init__(self, index: InvertedIndex, term: str, weight: int, with_blocks: bool = False):
        plist = index.postings(term)
        self.term = term
        self.docs = plist.docs
        self.freqs = plist.freqs
        self.norms = index.norms
        self.size = len(plist.docs)
        self.pos = 0
        self.docid = plist.docs[0] if self.size else END
        self.scale = index.idf_scale(term)
        self.weight = weight
        self.ub = weight * plist.upper_bound
        if with_blocks:
            meta = index.blocks(term)
            self.lasts, self.maxes, self.block_size = meta.lasts, meta.maxes, index.block_size

    def next(self):
        self.pos += 1
        self.docid = self.docs[self.pos] if self.pos < self.size else END

    def next_geq(self, target: int):
        if self.docid >= target:
            return
        self.pos = bisect_left(self.docs, target, self.pos + 1)
        self.docid = self.docs[self.pos] if self.pos < self.size else END

    def score(self) -> float:
        return self.weight * term_score(self.freqs[self.pos], self.norms[self.docid], self.scale)

    def _block_of(self, target: int) -> int:
        return bisect_left(self.lasts, target, min(self.pos, self.size - 1) // self.block_size)

    def block_max(self, target: int) -> float:
        """Scaled maximum of the block that would hold ``target``."""
        b = self._block_of(target)
        return self.weight * self.maxes[b] if b < len(self.maxes) else 0.0

    def block_last(self, target: int) -> int:
        b = self._block_of(target)
        return self.lasts[b] if b < len(self.lasts) else END


class TopK:
    """Bounded min-heap keyed so that the root is the worst retained entry."""

    __slots__ = ("k", "heap")

    def __init__(self, k: int):
        self.k = k
        self.heap: list[tuple[float, int]] = []

    @property
    def full(self) -> bool:
        return len(self.heap) >= self.k

    @property
    def threshold(self) -> float:
        return self.heap[0][0] if len(self.heap) >= self.k else 0.0

    def admits(self, bound: float) -> bool:
        """Whether a document whose score is at most ``bound`` could enter."""
        return len(self.heap) < self.k or bound * _SLACK > self.heap[0][0]

    def push(self, doc: int, score: float) -> bool:
        item = (score, -doc)
        if len(self.heap) < self.k:
            heapq.heappush(self.heap, item)
            return True
        if item > self.heap[0]:
            heapq.heapreplace(self.heap, item)
            return True
        return False

    def ranked(self) -> RankedList:
        return RankedList.from_scores(((-neg, s) for s, neg in self.heap), self.k)


def _check_k(k: int):
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")


def open_cursors(index: InvertedIndex, wq: WeightedQuery, with_blocks: bool = False) -> list[Cursor]:
    cursors = []
    for term, weight in wq.terms:
        if len(index.postings(term)):
            cursors.append(Cursor(index, term, weight, with_blocks))
    return cursors


def daat_exhaustive(index: InvertedIndex, wq: WeightedQuery, k: int) -> tuple[RankedList, TraversalStats]:
    _check_k(k)
    stats = TraversalStats()
    with measure(stats):
        cursors = open_cursors(index, wq)
        heap = TopK(k)
        scored = 0
        while cursors:
            d = min(c.docid for c in cursors)
            if d == END:
                break
            contribs = []
            for c in cursors:
                if c.docid == d:
                    contribs.append(c.score())
                    c.next()
            scored += len(contribs)
            heap.push(d, math.fsum(contribs))
        stats.postings_scored = scored
        result = heap.ranked()
    return result, stats


def daat_maxscore(index: InvertedIndex, wq: WeightedQuery, k: int) -> tuple[RankedList, TraversalStats]:
    _check_k(k)
    stats = TraversalStats()
    with measure(stats):
        cursors = open_cursors(index, wq)
        cursors.sort(key=attrgetter("ub"))
        n = len(cursors)
        cum, acc = [], 0.0
        for c in cursors:
            acc += c.ub
            cum.append(acc)
        heap = TopK(k)
        scored = 0
        first = 0
        while True:
            while first < n and not heap.admits(cum[first]):
                first += 1
            if first == n:
                break
            essential = cursors[first:]
            d = min(c.docid for c in essential)
            if d == END:
                break
            contribs = []
            partial = 0.0
            for c in essential:
                if c.docid == d:
                    s = c.score()
                    contribs.append(s)
                    partial += s
                    c.next()
            complete = True
            for i in range(first - 1, -1, -1):
                if not heap.admits(partial + cum[i]):
                    complete = False
                    break
                c = cursors[i]
                c.next_geq(d)
                if c.docid == d:
                    s = c.score()
                    contribs.append(s)
                    partial += s
            scored += len(contribs)
            if complete:
                heap.push(d, math.fsum(contribs))
        stats.postings_scored = scored
        result = heap.ranked()
    return result, stats


def _score_aligned(cursors: list[Cursor], d: int) -> list[float]:
    """Score and advance the leading cursors positioned on ``d``."""
    contribs = []
    for c in cursors:
        if c.docid != d:
            break
        contribs.append(c.score())
        c.next()
    return contribs


def _find_pivot(cursors: list[Cursor], heap: TopK) -> int:
    acc = 0.0
    for i, c in enumerate(cursors):
        acc += c.ub
        if heap.admits(acc):
            return i
    return -1


def daat_wand(index: InvertedIndex, wq: WeightedQuery, k: int) -> tuple[RankedList, TraversalStats]:
    _check_k(k)
    stats = TraversalStats()
    with measure(stats):
        cursors = open_cursors(index, wq)
        heap = TopK(k)
        scored = 0
        by_doc = attrgetter("docid")
        while cursors:
            cursors.sort(key=by_doc)
            p = _find_pivot(cursors, heap)
            if p < 0:
                break
            pdoc = cursors[p].docid
            if cursors[0].docid == pdoc:
                contribs = _score_aligned(cursors, pdoc)
                scored += len(contribs)
                heap.push(pdoc, math.fsum(contribs))
            else:
                for c in cursors[:p]:
                    c.next_geq(pdoc)
            cursors = [c for c in cursors if c.docid != END]
        stats.postings_scored = scored
        result = heap.ranked()
    return result, stats


def daat_bmw(index: InvertedIndex, wq: WeightedQuery, k: int) -> tuple[RankedList, TraversalStats]:
    _check_k(k)
    if index.block_meta is None:
        raise ConfigError("block-max traversal requires block metadata; build the index with a block size")
    stats = TraversalStats()
    with measure(stats):
        cursors = open_cursors(index, wq, with_blocks=True)
        heap = TopK(k)
        scored = 0
        by_doc = attrgetter("docid")
        while cursors:
            cursors.sort(key=by_doc)
            p = _find_pivot(cursors, heap)
            if p < 0:
                break
            pdoc = cursors[p].docid
            # Every cursor that can still land on pdoc must be in the block bound.
            last = p
            while last + 1 < len(cursors) and cursors[last + 1].docid == pdoc:
                last += 1
            block_bound = sum(c.block_max(pdoc) for c in cursors[: last + 1])
            if heap.admits(block_bound):
                if cursors[0].docid == pdoc:
                    contribs = _score_aligned(cursors, pdoc)
                    scored += len(contribs)
                    heap.push(pdoc, math.fsum(contribs))
                else:
                    for c in cursors[:p]:
                        c.next_geq(pdoc)
            else:
                nxt = min(c.block_last(pdoc) for c in cursors[: last + 1]) + 1
                if last + 1 < len(cursors):
                    nxt = min(nxt, cursors[last + 1].docid)
                for c in cursors[: last + 1]:
                    c.next_geq(nxt)
            cursors = [c for c in cursors if c.docid != END]
        stats.postings_scored = scored
        result = heap.ranked()
    return result, stats


STRATEGIES = {
    "exhaustive": daat_exhaustive,
    "maxscore": daat_maxscore,
    "wand": daat_wand,
    "bmw": daat_bmw,
}


def get_strategy(name: str):
    try:
        return STRATEGIES[name]
    except KeyError:
        raise ConfigError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}") from None


def retrieve(index: InvertedIndex, wq: WeightedQuery, k: int, strategy: str = "exhaustive"):
    return get_strategy(strategy)(index, wq, k)
