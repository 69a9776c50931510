"""Document-ordered inverted index with the statistics dynamic pruning needs.

Postings are stored per term as two parallel lists (internal docids and term
frequencies). Upper bounds ``U_t`` and fixed-size block maxima ``U_{b,t}`` are
computed once for a given BM25 parameterisation and attached to a new index
value; a built index is never mutated afterwards and can be shared across
threads for read-only traversal.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .scoring import BM25Params, idf_scale, length_norm, term_score
from .text import normalize

DEFAULT_BLOCK_SIZE = 40
FORMAT_NAME = "varfuse-index"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Document:
    docid: str
    internal_id: int
    length: int


@dataclass(frozen=True)
class CollectionStats:
    num_docs: int
    total_tokens: int

    @property
    def avg_doc_length(self) -> float:
        return self.total_tokens / self.num_docs if self.num_docs else 0.0


class PostingsList:
    """Postings for one term, strictly increasing by internal docid."""

    __slots__ = ("term", "docs", "freqs", "upper_bound")

    def __init__(self, term: str, docs: list[int], freqs: list[int], upper_bound: float = 0.0):
        self.term = term
        self.docs = docs
        self.freqs = freqs
        self.upper_bound = upper_bound

    @property
    def document_frequency(self) -> int:
        return len(self.docs)

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return zip(self.docs, self.freqs)

    def __repr__(self) -> str:
        return f"PostingsList({self.term!r}, df={len(self.docs)}, U={self.upper_bound:.4f})"


_EMPTY: list = []


@dataclass(frozen=True)
class BlockMetadata:
    """Fixed-size blocks over one postings list.

    ``lasts[i]`` is the docid of the final posting in block ``i`` and
    ``maxes[i]`` the exact maximum score inside it.
    """

    term: str
    lasts: list[int]
    maxes: list[float]

    @property
    def blocks(self) -> list[tuple[int, float]]:
        return list(zip(self.lasts, self.maxes))


@dataclass(frozen=True)
class InvertedIndex:
    lexicon: dict[str, PostingsList]
    documents: list[Document]
    stats: CollectionStats
    params: BM25Params | None = None
    norms: list[float] | None = None
    block_size: int | None = None
    block_meta: dict[str, BlockMetadata] | None = None
    _by_docid: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self._by_docid:
            self._by_docid.update((d.docid, d.internal_id) for d in self.documents)

    @property
    def num_docs(self) -> int:
        return self.stats.num_docs

    def postings(self, term: str) -> PostingsList:
        plist = self.lexicon.get(term)
        if plist is None:
            return PostingsList(term, _EMPTY, _EMPTY, 0.0)
        return plist

    def upper_bound(self, term: str) -> float:
        return self.postings(term).upper_bound

    def blocks(self, term: str) -> BlockMetadata | None:
        if self.block_meta is None:
            return None
        return self.block_meta.get(term, BlockMetadata(term, [], []))

    def docid(self, internal_id: int) -> str:
        return self.documents[internal_id].docid

    def internal_id(self, docid: str) -> int:
        try:
            return self._by_docid[docid]
        except KeyError:
            raise DataError(f"unknown docid {docid!r}") from None

    def has_docid(self, docid: str) -> bool:
        return docid in self._by_docid

    def idf_scale(self, term: str) -> float:
        """``idf * (k1 + 1)`` for ``term`` under the attached parameters."""
        self._require_scoring()
        return idf_scale(self.num_docs, self.postings(term).document_frequency, self.params)

    def _require_scoring(self):
        if self.params is None or self.norms is None:
            raise ConfigError("index has no scorer attached; call with_scoring() first")

    def with_scoring(self, params: BM25Params, block_size: int | None = DEFAULT_BLOCK_SIZE) -> InvertedIndex:
        """Return a copy with upper bounds (and block maxima) for ``params``."""
        bounds = compute_upper_bounds(self, params)
        lexicon = {
            term: PostingsList(term, plist.docs, plist.freqs, bounds[term])
            for term, plist in self.lexicon.items()
        }
        norms = _doc_norms(self, params)
        scored = InvertedIndex(lexicon, self.documents, self.stats, params, norms, None, None, self._by_docid)
        if block_size is None:
            return scored
        meta = compute_block_maxima(scored, block_size)
        return InvertedIndex(lexicon, self.documents, self.stats, params, norms, block_size, meta, self._by_docid)


def _doc_norms(index: InvertedIndex, params: BM25Params) -> list[float]:
    avg = index.stats.avg_doc_length
    return [length_norm(d.length, avg, params) for d in index.documents]


def _posting_scores(index: InvertedIndex, plist: PostingsList, params: BM25Params, norms: list[float]):
    scale = idf_scale(index.num_docs, len(plist.docs), params)
    return [term_score(f, norms[d], scale) for d, f in zip(plist.docs, plist.freqs)]


def compute_upper_bounds(index: InvertedIndex, params: BM25Params) -> dict[str, float]:
    """Exact per-term maximum BM25 contribution over the postings list."""
    norms = index.norms if index.params == params and index.norms is not None else _doc_norms(index, params)
    return {
        term: max(_posting_scores(index, plist, params, norms), default=0.0)
        for term, plist in index.lexicon.items()
    }


def compute_block_maxima(index: InvertedIndex, block_size: int) -> dict[str, BlockMetadata]:
    if not isinstance(block_size, int) or block_size < 1:
        raise ConfigError(f"block_size must be a positive integer, got {block_size!r}")
    index._require_scoring()
    meta = {}
    for term, plist in index.lexicon.items():
        scores = _posting_scores(index, plist, index.params, index.norms)
        lasts, maxes = [], []
        for start in range(0, len(scores), block_size):
            end = min(start + block_size, len(scores))
            lasts.append(plist.docs[end - 1])
            maxes.append(max(scores[start:end]))
        meta[term] = BlockMetadata(term, lasts, maxes)
    return meta


def build_index_from_terms(
    records: Iterable[tuple[str, Sequence[str]]],
    params: BM25Params | None = BM25Params(),
    block_size: int | None = DEFAULT_BLOCK_SIZE,
) -> InvertedIndex:
    """Build from already-normalized ``(docid, terms)`` records."""
    documents: list[Document] = []
    seen: set[str] = set()
    docs_by_term: dict[str, list[int]] = {}
    freqs_by_term: dict[str, list[int]] = {}
    total = 0
    for docid, terms in records:
        if docid in seen:
            raise DataError(f"duplicate docid {docid!r}")
        seen.add(docid)
        internal = len(documents)
        counts: dict[str, int] = {}
        for t in terms:
            counts[t] = counts.get(t, 0) + 1
        for t, f in counts.items():
            docs_by_term.setdefault(t, []).append(internal)
            freqs_by_term.setdefault(t, []).append(f)
        documents.append(Document(docid, internal, len(terms)))
        total += len(terms)
    lexicon = {t: PostingsList(t, docs_by_term[t], freqs_by_term[t]) for t in sorted(docs_by_term)}
    index = InvertedIndex(lexicon, documents, CollectionStats(len(documents), total))
    if params is None:
        return index
    return index.with_scoring(params, block_size)


def build_index(
    corpus: Iterable[tuple[str, str]],
    params: BM25Params | None = BM25Params(),
    block_size: int | None = DEFAULT_BLOCK_SIZE,
) -> InvertedIndex:
    """Build an index from ``(docid, raw text)`` records in ingestion order."""
    return build_index_from_terms(((docid, normalize(text)) for docid, text in corpus), params, block_size)


def read_corpus(path: str | os.PathLike) -> Iterator[tuple[str, str]]:
    """Yield ``(docid, text)`` from a ``docid<TAB>text`` UTF-8 file."""
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"corpus not found: {path}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            docid, sep, text = line.partition("\t")
            if not sep or not docid:
                raise DataError(f"{path}:{lineno}: expected 'docid<TAB>text'")
            yield docid, text


# Serialization
#
# <dir>/stats.json    format name/version, N, total tokens, BM25 params, block size
# <dir>/doctable.tsv  internal_id<TAB>docid<TAB>length, one line per document
# <dir>/lexicon.tsv   term<TAB>df<TAB>offset, terms in sorted order
# <dir>/postings.bin  little-endian uint32 (docid, tf) pairs; a term's list
#                     starts at pair number ``offset`` and holds ``df`` pairs
#
# Bounds and block maxima are derived data and recomputed on load.


def save_index(index: InvertedIndex, out: str | os.PathLike) -> None:
    out = Path(out)
    if out.exists() and not (out / "stats.json").exists():
        raise DataError(f"{out} exists and is not an index directory")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=out.name + ".", dir=out.parent))
    try:
        stats = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "num_docs": index.stats.num_docs,
            "total_tokens": index.stats.total_tokens,
            "avg_doc_length": index.stats.avg_doc_length,
            "bm25": None if index.params is None else {"k1": index.params.k1, "b": index.params.b},
            "block_size": index.block_size,
        }
        (tmp / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        with open(tmp / "doctable.tsv", "w", encoding="utf-8", newline="\n") as fh:
            for d in index.documents:
                fh.write(f"{d.internal_id}\t{d.docid}\t{d.length}\n")
        pairs = []
        offset = 0
        with open(tmp / "lexicon.tsv", "w", encoding="utf-8", newline="\n") as fh:
            for term in sorted(index.lexicon):
                plist = index.lexicon[term]
                fh.write(f"{term}\t{len(plist)}\t{offset}\n")
                offset += len(plist)
                pairs.append(np.column_stack([plist.docs, plist.freqs]).ravel() if len(plist) else np.empty(0))
        flat = np.concatenate(pairs) if pairs else np.empty(0)
        flat.astype("<u4").tofile(tmp / "postings.bin")
        if out.exists():
            shutil.rmtree(out)
        os.replace(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def load_index(path: str | os.PathLike) -> InvertedIndex:
    path = Path(path)
    try:
        stats = json.loads((path / "stats.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{path}: not an index directory (missing stats.json)") from None
    if stats.get("format") != FORMAT_NAME or stats.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported index format {stats.get('format')!r} v{stats.get('version')!r}")
    documents = []
    with open(path / "doctable.tsv", encoding="utf-8") as fh:
        for line in fh:
            internal, docid, length = line.rstrip("\n").split("\t")
            documents.append(Document(docid, int(internal), int(length)))
    flat = np.fromfile(path / "postings.bin", dtype="<u4").astype(np.int64)
    lexicon = {}
    with open(path / "lexicon.tsv", encoding="utf-8") as fh:
        for line in fh:
            term, df, offset = line.rstrip("\n").split("\t")
            df, offset = int(df), int(offset)
            chunk = flat[2 * offset : 2 * (offset + df)]
            lexicon[term] = PostingsList(term, chunk[0::2].tolist(), chunk[1::2].tolist())
    index = InvertedIndex(lexicon, documents, CollectionStats(stats["num_docs"], stats["total_tokens"]))
    if stats["bm25"] is None:
        return index
    return index.with_scoring(BM25Params(**stats["bm25"]), stats["block_size"])
