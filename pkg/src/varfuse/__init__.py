"""Query-variation fusion over a document-ordered inverted index.

The package covers the whole offline/online pipeline: index construction,
safe-to-k DaaT traversal (exhaustive, MaxScore, WAND, block-max WAND),
fusion of query variations (parallel fusion, single-pass exhaustive and
single-pass CombSUM "super queries"), precomputed cluster centroids with
online boosting, and risk-sensitive evaluation.
"""

from .errors import ConfigError, DataError, VarfuseError
from .index import (
    BlockMetadata,
    CollectionStats,
    Document,
    InvertedIndex,
    PostingsList,
    build_index,
    compute_block_maxima,
    compute_upper_bounds,
)
from .scoring import BM25Params
from .text import normalize
from .traversal import (
    RankedList,
    ScoredDoc,
    TraversalStats,
    WeightedQuery,
    daat_bmw,
    daat_exhaustive,
    daat_maxscore,
    daat_wand,
)

__version__ = "0.1.0"

__all__ = [
    "BM25Params",
    "BlockMetadata",
    "CollectionStats",
    "ConfigError",
    "DataError",
    "Document",
    "InvertedIndex",
    "PostingsList",
    "RankedList",
    "ScoredDoc",
    "TraversalStats",
    "VarfuseError",
    "WeightedQuery",
    "build_index",
    "compute_block_maxima",
    "compute_upper_bounds",
    "daat_bmw",
    "daat_exhaustive",
    "daat_maxscore",
    "daat_wand",
    "normalize",
]
