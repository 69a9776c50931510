"""Readers and writers for the plain-text exchange formats.

========================  ==========================================
run (TREC 6-column)       ``topic Q0 docid rank score tag``
qrels                     ``topic 0 docid grade``
variation clusters        ``topic_id<TAB>query text``, repeats allowed
queries                   ``query_id<TAB>query text``
assignments               ``query_id<TAB>cluster_id``
========================  ==========================================

Blank lines and lines starting with ``#`` are skipped on input.
"""

from __future__ import annotations

import os
import tempfile
from collections.abc import Iterable, Iterator
from pathlib import Path

from .errors import DataError
from .fusion import QueryVariationSet
from .index import InvertedIndex
from .text import normalize
from .traversal import RankedList


def _lines(path: str | os.PathLike) -> Iterator[tuple[int, str]]:
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line


def _tab_pairs(path) -> Iterator[tuple[str, str]]:
    for lineno, line in _lines(path):
        key, sep, value = line.partition("\t")
        if not sep or not key:
            raise DataError(f"{path}:{lineno}: expected '<id><TAB><value>'")
        yield key, value


def format_score(score: float) -> str:
    return f"{score:.6f}"


def run_lines(topic: str, ranked: RankedList, index: InvertedIndex | None, tag: str) -> list[str]:
    """TREC run lines; docids are external when ``index`` is given."""
    name = index.docid if index is not None else str
    return [
        f"{topic} Q0 {name(e.doc)} {rank} {format_score(e.score)} {tag}"
        for rank, e in enumerate(ranked, 1)
    ]


def read_run(path: str | os.PathLike) -> dict[str, list[tuple[str, float]]]:
    """Per-topic ``(docid, score)`` in the file's rank order."""
    rows: dict[str, list[tuple[int, str, float]]] = {}
    for lineno, line in _lines(path):
        parts = line.split()
        if len(parts) != 6:
            raise DataError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
        topic, _, docid, rank, score, _tag = parts
        try:
            rows.setdefault(topic, []).append((int(rank), docid, float(score)))
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad rank or score") from None
    out = {}
    for topic, entries in rows.items():
        entries.sort(key=lambda r: r[0])
        seen = set()
        ranked = []
        for _, docid, score in entries:
            if docid in seen:
                raise DataError(f"{path}: topic {topic} lists {docid} twice")
            seen.add(docid)
            ranked.append((docid, score))
        out[topic] = ranked
    return out


def run_to_ranked(entries: list[tuple[str, float]], index: InvertedIndex, k: int | None = None) -> RankedList:
    """Map an external run onto internal docids, re-sorting by score."""
    return RankedList.from_scores({index.internal_id(d): s for d, s in entries}, k)


def read_qrels(path: str | os.PathLike) -> dict[str, dict[str, int]]:
    qrels: dict[str, dict[str, int]] = {}
    for lineno, line in _lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise DataError(f"{path}:{lineno}: expected 'topic 0 docid grade'")
        topic, _, docid, grade = parts
        try:
            g = int(grade)
        except ValueError:
            raise DataError(f"{path}:{lineno}: grade must be an integer") from None
        if g < 0:
            g = 0
        qrels.setdefault(topic, {})[docid] = g
    return qrels


def read_clusters(path: str | os.PathLike) -> dict[str, QueryVariationSet]:
    """Variation clusters keyed by topic, in first-appearance order."""
    texts: dict[str, list[str]] = {}
    for topic, text in _tab_pairs(path):
        texts.setdefault(topic, []).append(text)
    return {t: QueryVariationSet.from_texts(t, v) for t, v in texts.items()}


def read_queries(path: str | os.PathLike) -> dict[str, list[str]]:
    """Normalized queries keyed by query id; ids must be unique."""
    queries: dict[str, list[str]] = {}
    for qid, text in _tab_pairs(path):
        if qid in queries:
            raise DataError(f"{path}: duplicate query id {qid!r}")
        queries[qid] = normalize(text)
    return queries


def read_assignments(path: str | os.PathLike) -> dict[str, str]:
    return dict(_tab_pairs(path))


def assignment_lines(assignments: dict[str, str]) -> list[str]:
    return [f"{q}\t{c}" for q, c in assignments.items()]


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` so that ``path`` never holds a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def join_lines(lines: Iterable[str]) -> str:
    lines = list(lines)
    return "\n".join(lines) + "\n" if lines else ""
