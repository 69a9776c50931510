"""Seeded synthetic collections with planted relevance.

Two generators:

``generate_collection``
    A corpus of topical and background documents, graded qrels, noisy
    held-in query variations per topic (centroid material) and held-out
    queries (what a user would type).
``generate_match_clusters`` / ``generate_distractors``
    Term-only query clusters with private vocabularies, plus distractor
    clusters that each borrow a controlled share of one true cluster's
    vocabulary. Distractor ``i`` for a seed is drawn from its own stream, so a
    larger distractor set extends a smaller one.

Term spellings avoid stopwords and a trailing ``s`` so they pass through
:func:`varfuse.text.normalize` unchanged.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .fusion import QueryVariationSet
from .rng import make_rng


def topic_term(topic: int, j: int) -> str:
    return f"tp{topic}k{j}"


def background_term(i: int) -> str:
    return f"bg{i}z"


@dataclass(frozen=True)
class SyntheticConfig:
    num_topics: int = 20
    relevant_per_topic: int = 15
    decoys_per_topic: int = 15
    background_docs: int = 300
    topic_vocab: int = 10
    background_vocab: int = 400
    doc_length: tuple[int, int] = (30, 90)
    topic_term_prob: float = 0.55
    decoy_terms: tuple[int, int] = (1, 3)
    held_in: int = 10
    held_out: int = 5
    query_terms: tuple[int, int] = (2, 3)
    noise_terms: tuple[int, int] = (0, 2)
    noise_cross_topic: float = 0.5


@dataclass
class SyntheticCollection:
    config: SyntheticConfig
    corpus: list[tuple[str, str]]
    qrels: dict[str, dict[str, int]]
    held_in: dict[str, QueryVariationSet]
    held_out: dict[str, tuple[str, str]] = field(default_factory=dict)

    @property
    def topics(self) -> list[str]:
        return list(self.held_in)


def _zipf_weights(n: int, s: float = 1.0) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def generate_collection(config: SyntheticConfig = SyntheticConfig(), seed: int = 0) -> SyntheticCollection:
    cfg = config
    rng = make_rng(seed, "synthetic-collection")
    bg_p = _zipf_weights(cfg.background_vocab)
    lo, hi = cfg.doc_length

    def background(n: int) -> list[str]:
        return [background_term(int(i)) for i in rng.choice(cfg.background_vocab, size=n, p=bg_p)]

    docs: list[tuple[str, list[str]]] = []
    qrels: dict[str, dict[str, int]] = {}
    for t in range(cfg.num_topics):
        topic = f"T{t:03d}"
        qrels[topic] = {}
        for r in range(cfg.relevant_per_topic):
            terms = background(int(rng.integers(lo, hi + 1)))
            present = 0
            for j in range(cfg.topic_vocab):
                if rng.random() < cfg.topic_term_prob:
                    present += 1
                    terms += [topic_term(t, j)] * int(rng.integers(1, 4))
            docid = f"{topic}-R{r:03d}"
            docs.append((docid, terms))
            qrels[topic][docid] = 2 if present >= 0.6 * cfg.topic_vocab else 1
        for r in range(cfg.decoys_per_topic):
            terms = background(int(rng.integers(lo, hi + 1)))
            n = int(rng.integers(cfg.decoy_terms[0], cfg.decoy_terms[1] + 1))
            for j in rng.choice(cfg.topic_vocab, size=n, replace=False):
                terms += [topic_term(t, int(j))] * int(rng.integers(1, 4))
            docid = f"{topic}-D{r:03d}"
            docs.append((docid, terms))
            qrels[topic][docid] = 0
    for r in range(cfg.background_docs):
        docs.append((f"BG-{r:05d}", background(int(rng.integers(lo, hi + 1)))))

    order = rng.permutation(len(docs))
    corpus = []
    for i in order:
        docid, terms = docs[int(i)]
        rng.shuffle(terms)
        corpus.append((docid, " ".join(terms)))

    def variation(t: int) -> str:
        n = int(rng.integers(cfg.query_terms[0], cfg.query_terms[1] + 1))
        terms = [topic_term(t, int(j)) for j in rng.choice(cfg.topic_vocab, size=n, replace=False)]
        for _ in range(int(rng.integers(cfg.noise_terms[0], cfg.noise_terms[1] + 1))):
            if cfg.num_topics > 1 and rng.random() < cfg.noise_cross_topic:
                other = int(rng.integers(cfg.num_topics - 1))
                other += other >= t
                terms.append(topic_term(other, int(rng.integers(cfg.topic_vocab))))
            else:
                terms.append(background_term(int(rng.choice(cfg.background_vocab, p=bg_p))))
        return " ".join(terms)

    held_in, held_out = {}, {}
    for t in range(cfg.num_topics):
        topic = f"T{t:03d}"
        held_in[topic] = QueryVariationSet.from_texts(topic, [variation(t) for _ in range(cfg.held_in)])
        for h in range(cfg.held_out):
            held_out[f"{topic}.{h}"] = (topic, variation(t))
    return SyntheticCollection(cfg, corpus, qrels, held_in, held_out)


def cluster_term(cluster: int, j: int) -> str:
    return f"cl{cluster}v{j}"


def generate_match_clusters(
    num_clusters: int = 50,
    vocab_per_cluster: int = 8,
    queries_per_cluster: int = 10,
    held_out_per_cluster: int = 5,
    terms_per_query: tuple[int, int] = (2, 4),
    seed: int = 0,
) -> tuple[dict[str, QueryVariationSet], list[tuple[str, tuple[str, ...]]]]:
    """Clusters with disjoint vocabularies and held-out ``(cluster, terms)``.

    Held-out queries only use terms already present in their cluster's
    held-in queries.
    """
    rng = make_rng(seed, "match-clusters")
    clusters, held_out = {}, []
    for c in range(num_clusters):
        cid = f"C{c:04d}"
        vocab = [cluster_term(c, j) for j in range(vocab_per_cluster)]

        def query(pool):
            n = min(len(pool), int(rng.integers(terms_per_query[0], terms_per_query[1] + 1)))
            return tuple(pool[int(i)] for i in rng.choice(len(pool), size=n, replace=False))

        queries = [query(vocab) for _ in range(queries_per_cluster)]
        clusters[cid] = QueryVariationSet(cid, tuple(queries))
        seen = sorted({t for q in queries for t in q})
        held_out += [(cid, query(seen)) for _ in range(held_out_per_cluster)]
    return clusters, held_out


def generate_distractors(
    n: int,
    overlap: float,
    true_vocab: Sequence[Sequence[str]],
    seed: int = 0,
    queries_per_cluster: int = 5,
    terms_per_query: tuple[int, int] = (2, 4),
    distractor_vocab: int = 5000,
) -> list[QueryVariationSet]:
    """``n`` look-alike clusters, each anchored on one true cluster.

    ``true_vocab`` holds one term list per true cluster. Distractor ``i``
    picks an anchor uniformly, then each of its query terms comes from the
    anchor's vocabulary with probability ``overlap`` and from a private
    distractor vocabulary otherwise.
    """
    vocabs = [sorted(v) for v in true_vocab if v]
    out = []
    for i in range(n):
        rng = make_rng(seed, "distractor", i)
        anchor = vocabs[int(rng.integers(len(vocabs)))] if vocabs else []
        queries = []
        for _ in range(queries_per_cluster):
            size = int(rng.integers(terms_per_query[0], terms_per_query[1] + 1))
            terms = []
            for _ in range(size):
                u = rng.random()
                a = int(rng.integers(len(anchor))) if anchor else 0
                b = int(rng.integers(distractor_vocab))
                terms.append(anchor[a] if anchor and u < overlap else f"dx{b}q")
            queries.append(tuple(dict.fromkeys(terms)))
        out.append(QueryVariationSet(f"X{i:05d}", tuple(queries)))
    return out
