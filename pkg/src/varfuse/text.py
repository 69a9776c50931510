"""Text normalization: lowercase, alphanumeric split, stopping, suffix-s stemming."""

from __future__ import annotations

import re

# Lucene's classic English stop set.
STOPWORDS: frozenset[str] = frozenset(
    """
    a an and are as at be but by for if in into is it no not of on or such
    that the their then there these they this to was will with
    """.split()
)

_SPLIT = re.compile(r"[\W_]+", re.UNICODE)


def stem(token: str) -> str:
    """Strip one trailing ``s`` from tokens longer than three characters."""
    if len(token) > 3 and token.endswith("s"):
        return token[:-1]
    return token


def normalize(text: str) -> list[str]:
    """Turn raw text into a sequence of index terms.

    >>> normalize("The Cats")
    ['cat']
    >>> normalize("oyster farming, oysters")
    ['oyster', 'farming', 'oyster']
    """
    terms = []
    for token in _SPLIT.split(text.lower()):
        if not token or token in STOPWORDS:
            continue
        terms.append(stem(token))
    return terms
