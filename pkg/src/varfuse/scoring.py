"""Okapi BM25 with a strictly positive idf.

Scores must be positive for the super-query rewrite of CombSUM to hold, so
the idf is ``ln(1 + (N - f_t + 0.5) / (f_t + 0.5))`` rather than the classic
form, which goes negative for terms in more than half the collection.

Every per-posting score in the package (upper bounds, block maxima, cursor
scoring) goes through :func:`term_score` so that bounds dominate scores
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class BM25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0 or not 0.0 <= self.b <= 1.0:
            raise ConfigError(f"invalid BM25 parameters k1={self.k1} b={self.b}")


def idf(num_docs: int, doc_freq: int) -> float:
    return math.log(1.0 + (num_docs - doc_freq + 0.5) / (doc_freq + 0.5))


def length_norm(doc_length: int, avg_doc_length: float, params: BM25Params) -> float:
    """The ``k1 * (1 - b + b * len/avgdl)`` denominator term for one document."""
    if avg_doc_length <= 0:
        return params.k1
    return params.k1 * (1.0 - params.b + params.b * doc_length / avg_doc_length)


def idf_scale(num_docs: int, doc_freq: int, params: BM25Params) -> float:
    """Per-term constant ``idf * (k1 + 1)``."""
    return idf(num_docs, doc_freq) * (params.k1 + 1.0)


def term_score(tf: int, norm: float, scale: float) -> float:
    return scale * tf / (tf + norm)


def score(
    term_frequency: int,
    doc_length: int,
    doc_freq: int,
    num_docs: int,
    avg_doc_length: float,
    params: BM25Params = BM25Params(),
) -> float:
    """BM25 contribution F(t, d) of one term to one document."""
    norm = length_norm(doc_length, avg_doc_length, params)
    return term_score(term_frequency, norm, idf_scale(num_docs, doc_freq, params))
