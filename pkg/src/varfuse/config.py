"""Run configuration with ``flags > config file > defaults`` precedence."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError, DataError
from .index import DEFAULT_BLOCK_SIZE
from .scoring import BM25Params


@dataclass(frozen=True)
class Config:
    k1: float = 0.9
    b: float = 0.4
    block_size: int = DEFAULT_BLOCK_SIZE
    k: int = 1000
    centroid_depth: int = 1000
    strategy: str = "maxscore"
    workers: int = 1
    delta: float = 0.5
    phi: float = 0.8
    alpha: float = 3.0
    band: float = 0.10
    epsilon: float = 0.0
    trials: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.centroid_depth < 1:
            raise ConfigError("k and centroid_depth must be >= 1")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta must lie in [0, 1], got {self.delta}")
        if not 0.0 < self.phi < 1.0:
            raise ConfigError(f"phi must lie in (0, 1), got {self.phi}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ConfigError("seed must be a 64-bit non-negative integer")

    @property
    def bm25(self) -> BM25Params:
        return BM25Params(self.k1, self.b)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def header(self) -> str:
        return f"# config {self.to_json()}"


FIELDS = {f.name for f in fields(Config)}


def resolve(config_file: str | None = None, **overrides) -> Config:
    """Merge defaults, an optional JSON config file, then non-None overrides."""
    values = {}
    if config_file:
        try:
            loaded = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"config file not found: {config_file}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{config_file}: invalid JSON ({exc})") from None
        unknown = set(loaded) - FIELDS
        if unknown:
            raise ConfigError(f"{config_file}: unknown config keys {sorted(unknown)}")
        values.update(loaded)
    values.update({k: v for k, v in overrides.items() if k in FIELDS and v is not None})
    return replace(Config(), **values)
