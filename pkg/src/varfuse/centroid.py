"""Precomputed cluster centroids and online boosting.

Offline, each query cluster gets a fused consensus ranking (its centroid,
1,000 documents deep) and a pseudo-document holding the deduplicated union
of its query terms. Online, an incoming query is matched to a cluster by a
BM25 search over the pseudo-documents, and its own BM25 run is combined
with the matched centroid by one of:

* :func:`interleave` - strict alternation, centroid first;
* :func:`linear_combination` - weighted sum of min-max rescaled scores;
* :func:`ref_reorder` - documents common to both in centroid order, then
  the rest of the query's run in its own order;
* :func:`rcc` - the centroid alone, ignoring the query run.
"""

from __future__ import annotations

import os
import struct
from bisect import bisect_left
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError
from .fusion import FUSERS, QueryVariationSet, minmax, sp_cs
from .index import InvertedIndex, build_index_from_terms
from .rng import make_rng
from .scoring import BM25Params
from .traversal import RankedList, ScoredDoc, WeightedQuery, daat_maxscore

CENTROID_DEPTH = 1000


class MissingRunError(DataError):
    """No external run lists were supplied for a multi-run centroid."""


class NoCentroidError(DataError):
    """The query matched no cluster, so there is no centroid to return."""


@dataclass(frozen=True)
class CentroidEntry:
    cluster_id: str
    ranking: RankedList
    rank_lookup: dict[int, int] = field(default_factory=dict, repr=False, compare=False)
    normalized: dict[int, float] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        # both lookups are fixed once the centroid exists, so boosting never rebuilds them
        if not self.rank_lookup:
            self.rank_lookup.update((e.doc, r) for r, e in enumerate(self.ranking, 1))
        if not self.normalized:
            self.normalized.update(minmax(self.ranking))

    def rank(self, doc: int) -> int | None:
        """1-based rank of ``doc``, or None when absent."""
        return self.rank_lookup.get(doc)

    def __contains__(self, doc: int) -> bool:
        return doc in self.rank_lookup

    def __len__(self) -> int:
        return len(self.ranking)


def build_centroid(
    index: InvertedIndex,
    vs: QueryVariationSet,
    method: str = "sp_cs_bm25",
    depth: int = CENTROID_DEPTH,
    runs: Sequence[RankedList] | None = None,
    strategy: str = "maxscore",
    fuser: str = "combsum",
) -> CentroidEntry:
    """Fuse a cluster's held-in variations into a centroid.

    ``sp_cs_bm25`` evaluates the cluster's super query; ``multi_run_combsum``
    fuses externally produced per-system, per-variation ``runs``.
    """
    if method == "sp_cs_bm25":
        ranking, _ = sp_cs(index, vs, depth, strategy)
    elif method == "multi_run_combsum":
        if not runs:
            raise MissingRunError(f"cluster {vs.topic_id!r}: multi-run centroid needs at least one run list")
        ranking = FUSERS[fuser](runs).truncate(depth)
    else:
        raise ConfigError(f"unknown centroid method {method!r}")
    return CentroidEntry(vs.topic_id, ranking)


# Centroid store: one packed little-endian file.
#
#   header  b"VFCS" | version u16 | flags u16 (bit 0: scores present) | count u32
#   entry   id_len u16 | cluster_id utf-8 | depth u32 |
#           depth x (docid u32, score f64)   or   depth x docid u32 (rank-only)
#
# docids are internal ids of the index the centroids were built against.

_MAGIC = b"VFCS"
_VERSION = 1
_HEADER = struct.Struct("<4sHHI")


def dump_centroids(entries: Iterable[CentroidEntry], rank_only: bool = False) -> bytes:
    entries = list(entries)
    out = [_HEADER.pack(_MAGIC, _VERSION, 0 if rank_only else 1, len(entries))]
    for entry in entries:
        cid = entry.cluster_id.encode("utf-8")
        out.append(struct.pack(f"<H{len(cid)}sI", len(cid), cid, len(entry.ranking)))
        if rank_only:
            out.append(struct.pack(f"<{len(entry.ranking)}I", *entry.ranking.docs))
        else:
            flat = [x for e in entry.ranking for x in e]
            out.append(struct.pack("<" + "Id" * len(entry.ranking), *flat))
    return b"".join(out)


def load_centroid_bytes(data: bytes) -> dict[str, CentroidEntry]:
    try:
        magic, version, flags, count = _HEADER.unpack_from(data, 0)
    except struct.error:
        raise DataError("centroid store is truncated") from None
    if magic != _MAGIC or version != _VERSION:
        raise DataError("not a centroid store, or unsupported version")
    has_scores = bool(flags & 1)
    pos = _HEADER.size
    entries = {}
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", data, pos)
            pos += 2
            cid = data[pos : pos + n].decode("utf-8")
            pos += n
            (depth,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if has_scores:
                flat = struct.unpack_from("<" + "Id" * depth, data, pos)
                pos += 12 * depth
                ranking = RankedList(tuple(_pairs(flat)))
            else:
                docs = struct.unpack_from(f"<{depth}I", data, pos)
                pos += 4 * depth
                ranking = RankedList.from_docs(list(docs))
            entries[cid] = CentroidEntry(cid, ranking)
    except struct.error:
        raise DataError("centroid store is truncated") from None
    return entries


def _pairs(flat):
    it = iter(flat)
    return [ScoredDoc(d, s) for d, s in zip(it, it)]


def save_centroids(entries: Iterable[CentroidEntry], path: str | os.PathLike, rank_only: bool = False) -> None:
    path = Path(path)
    data = dump_centroids(entries, rank_only)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def load_centroids(path: str | os.PathLike) -> dict[str, CentroidEntry]:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise DataError(f"centroid store not found: {path}") from None
    return load_centroid_bytes(data)


# Cluster matching


@dataclass(frozen=True)
class PseudoDoc:
    cluster_id: str
    terms: tuple[str, ...]


def pseudo_doc(vs: QueryVariationSet) -> PseudoDoc:
    return PseudoDoc(vs.topic_id, tuple(dict.fromkeys(t for v in vs.variations for t in v)))


def build_pseudo_index(
    clusters: Iterable[QueryVariationSet] | Mapping[str, QueryVariationSet],
    params: BM25Params = BM25Params(),
) -> InvertedIndex:
    """Index one deduplicated pseudo-document per cluster."""
    if isinstance(clusters, Mapping):
        clusters = clusters.values()
    docs = [pseudo_doc(vs) for vs in clusters]
    if not docs:
        raise ConfigError("cannot build a pseudo-document index over zero clusters")
    return build_index_from_terms(((d.cluster_id, d.terms) for d in docs), params, block_size=None)


@dataclass(frozen=True)
class ClusterMatch:
    query: tuple[str, ...]
    matched_cluster: str | None
    match_score: float


def match_cluster(query: Sequence[str], pseudo_index: InvertedIndex, min_score: float | None = None) -> ClusterMatch:
    """Top-1 BM25 pseudo-document for ``query``; ties go to the earlier cluster."""
    ranked, _ = daat_maxscore(pseudo_index, WeightedQuery.from_terms(query), 1)
    if not len(ranked) or (min_score is not None and ranked[0].score < min_score):
        return ClusterMatch(tuple(query), None, 0.0)
    best = ranked[0]
    return ClusterMatch(tuple(query), pseudo_index.docid(best.doc), best.score)


# Boosting


def _ranking(c: CentroidEntry | RankedList) -> RankedList:
    return c.ranking if isinstance(c, CentroidEntry) else c


def _check_k(k: int):
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")


def _unseen(docs: Sequence[int], seen: set[int]):
    # membership is tested lazily, so documents emitted by the other list meanwhile are skipped
    return (d for d in docs if d not in seen)


def interleave(c: CentroidEntry | RankedList, q: RankedList, k: int) -> RankedList:
    _check_k(k)
    seen: set[int] = set()
    sources = [_unseen(_ranking(c).docs, seen), _unseen(q.docs, seen)]
    out: list[int] = []
    turn = 0
    while len(out) < k:
        d = next(sources[turn], None)
        if d is None:
            for d in sources[1 - turn]:
                out.append(d)
                seen.add(d)
                if len(out) == k:
                    break
            break
        out.append(d)
        seen.add(d)
        turn = 1 - turn
    return RankedList.from_docs(out, k)


def linear_combination(c: CentroidEntry | RankedList, q: RankedList, delta: float, k: int) -> RankedList:
    _check_k(k)
    if not 0.0 <= delta <= 1.0:
        raise ConfigError(f"delta must lie in [0, 1], got {delta}")
    cs = c.normalized if isinstance(c, CentroidEntry) else minmax(c)
    w = 1.0 - delta
    scores = {d: delta * s for d, s in cs.items()}
    get = scores.get
    for d, s in minmax(q).items():
        scores[d] = get(d, 0.0) + w * s
    return RankedList.from_scores(scores, k)


def ref_reorder(c: CentroidEntry | RankedList, q: RankedList, k: int) -> RankedList:
    _check_k(k)
    lookup = c.rank_lookup if isinstance(c, CentroidEntry) else {e.doc: r for r, e in enumerate(c, 1)}
    docs = q.docs
    common = sorted((d for d in docs if d in lookup), key=lookup.__getitem__)
    rest = [d for d in docs if d not in lookup]
    return RankedList.from_docs(common + rest, k)


def rcc(c: CentroidEntry | None, k: int) -> RankedList:
    _check_k(k)
    if c is None:
        raise NoCentroidError("no matched centroid; fall back to the plain query run")
    return _ranking(c).truncate(k)


BOOSTERS = ("interleave", "lc", "ref-reorder", "rcc")


def boost(method: str, c: CentroidEntry | None, q: RankedList, k: int, delta: float = 0.5) -> RankedList:
    """Apply a boosting method; without a centroid the query run is returned."""
    if c is None:
        return q.truncate(k)
    if method == "interleave":
        return interleave(c, q, k)
    if method == "lc":
        return linear_combination(c, q, delta, k)
    if method == "ref-reorder":
        return ref_reorder(c, q, k)
    if method == "rcc":
        return rcc(c, k)
    raise ConfigError(f"unknown boosting method {method!r}; choose from {BOOSTERS}")


# Misassignment simulation


def inject_error(
    assignments: Mapping[str, str],
    epsilon: float,
    seed: int,
    clusters: Sequence[str] | None = None,
    trial: int = 0,
) -> dict[str, str]:
    """Reassign each query, with probability ``epsilon``, to another cluster.

    The replacement is uniform over the other clusters. ``clusters`` is the
    universe to draw from (default: every cluster already assigned).
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"epsilon must lie in [0, 1], got {epsilon}")
    universe = sorted(set(clusters) if clusters is not None else set(assignments.values()))
    if epsilon > 0 and len(universe) < 2:
        raise ConfigError("misassignment needs at least two clusters")
    rng = make_rng(seed, "inject-error", trial)
    out = {}
    for query, true in assignments.items():
        if rng.random() < epsilon:
            pos = bisect_left(universe, true)
            if pos < len(universe) and universe[pos] == true:
                j = int(rng.integers(len(universe) - 1))
                out[query] = universe[j + (j >= pos)]
            else:
                out[query] = universe[int(rng.integers(len(universe)))]
        else:
            out[query] = true
    return out


def error_trials(
    assignments: Mapping[str, str],
    epsilon: float,
    seed: int,
    trials: int = 10,
    clusters: Sequence[str] | None = None,
) -> list[dict[str, str]]:
    return [inject_error(assignments, epsilon, seed, clusters, trial=t) for t in range(trials)]
