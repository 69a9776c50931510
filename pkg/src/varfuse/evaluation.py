"""Effectiveness and risk-sensitive comparison of runs.

All functions are pure. Rankings are sequences of external docids, qrels map
``topic -> docid -> grade``; an absent (topic, docid) pair is unjudged, which
RBP keeps apart from a judged grade of 0.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from scipy import stats as _stats

from .errors import ConfigError

Qrels = Mapping[str, Mapping[str, int]]


@dataclass(frozen=True)
class MetricScore:
    topic: str
    value: float
    residual: float = 0.0
    missing_topic: bool = False


def ndcg_at_k(ranking: Sequence[str], qrels: Qrels, topic: str, k: int = 10) -> MetricScore:
    """NDCG with gain ``2^g - 1`` and discount ``log2(rank + 1)``."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    judged = qrels.get(topic)
    if judged is None:
        return MetricScore(topic, 0.0, 0.0, missing_topic=True)
    dcg = math.fsum(
        (2 ** judged.get(d, 0) - 1) / math.log2(r + 1) for r, d in enumerate(ranking[:k], 1)
    )
    ideal = sorted(judged.values(), reverse=True)[:k]
    idcg = math.fsum((2**g - 1) / math.log2(r + 1) for r, g in enumerate(ideal, 1))
    return MetricScore(topic, dcg / idcg if idcg > 0 else 0.0)


def rbp(ranking: Sequence[str], qrels: Qrels, topic: str, phi: float = 0.8) -> MetricScore:
    """Rank-biased precision and its residual.

    Relevance is binary at grade >= 1. The residual collects the weight of
    unjudged ranks plus the ``phi^len`` mass of the unseen tail.
    """
    if not 0.0 < phi < 1.0:
        raise ConfigError(f"phi must lie in (0, 1), got {phi}")
    judged = qrels.get(topic)
    missing = judged is None
    judged = judged or {}
    value, residual = [], []
    w = 1.0 - phi
    for d in ranking:
        g = judged.get(d)
        if g is None:
            residual.append(w)
        elif g >= 1:
            value.append(w)
        w *= phi
    residual.append(phi ** len(ranking))
    return MetricScore(topic, math.fsum(value), math.fsum(residual), missing_topic=missing)


METRICS = ("ndcg@10", "rbp")


def evaluate(metric: str, ranking: Sequence[str], qrels: Qrels, topic: str, phi: float = 0.8) -> MetricScore:
    if metric.startswith("ndcg@"):
        return ndcg_at_k(ranking, qrels, topic, int(metric.split("@", 1)[1]))
    if metric == "rbp":
        return rbp(ranking, qrels, topic, phi)
    raise ConfigError(f"unknown metric {metric!r}; choose from {METRICS}")


def _aligned(system: Sequence[float], baseline: Sequence[float]):
    if len(system) != len(baseline):
        raise ConfigError(f"score vectors differ in length ({len(system)} vs {len(baseline)})")
    return list(system), list(baseline)


def wtl(system: Sequence[float], baseline: Sequence[float], band: float = 0.10) -> tuple[int, int, int]:
    """Wins, ties and losses against a multiplicative tie band on the baseline."""
    system, baseline = _aligned(system, baseline)
    w = t = l = 0
    for s, b in zip(system, baseline):
        if b == 0:
            if s > 0:
                w += 1
            else:
                t += 1
        elif s > b * (1 + band):
            w += 1
        elif s < b * (1 - band):
            l += 1
        else:
            t += 1
    return w, t, l


class DegenerateVariance:
    """Result of a studentized statistic whose deltas have zero variance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DEGENERATE_VARIANCE"

    def __bool__(self) -> bool:
        return False


DEGENERATE_VARIANCE = DegenerateVariance()


def risk_deltas(system: Sequence[float], baseline: Sequence[float], alpha: float) -> list[float]:
    """Per-query ``delta`` for wins, ``(1 + alpha) * delta`` for losses."""
    system, baseline = _aligned(system, baseline)
    out = []
    for s, b in zip(system, baseline):
        d = s - b
        out.append(d if d > 0 else (1.0 + alpha) * d)
    return out


def _studentize(values: Sequence[float]) -> float | DegenerateVariance:
    n = len(values)
    if n < 2:
        raise ConfigError("a studentized statistic needs at least two queries")
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    if var == 0.0:
        return DEGENERATE_VARIANCE
    return mean / math.sqrt(var / n)


def urisk(system: Sequence[float], baseline: Sequence[float], alpha: float = 3.0) -> float:
    r = risk_deltas(system, baseline, alpha)
    if len(r) < 2:
        raise ConfigError("URisk needs at least two queries")
    return math.fsum(r) / len(r)


def trisk(system: Sequence[float], baseline: Sequence[float], alpha: float = 3.0) -> float | DegenerateVariance:
    """Studentized URisk: a one-sample t statistic over the risk deltas."""
    return _studentize(risk_deltas(system, baseline, alpha))


@dataclass(frozen=True)
class TTestResult:
    t: float
    p_raw: float
    p_adjusted: float
    comparisons: int
    degenerate: bool = False

    @property
    def marker(self) -> str:
        """The significance mark: double dagger below 0.001, dagger below 0.05."""
        if self.degenerate:
            return ""
        if self.p_adjusted < 0.001:
            return "‡"
        if self.p_adjusted < 0.05:
            return "†"
        return ""


def paired_t_bonferroni(system: Sequence[float], baseline: Sequence[float], comparisons: int = 1) -> TTestResult:
    """Two-sided paired t-test with Bonferroni adjustment over ``comparisons``."""
    if comparisons < 1:
        raise ConfigError(f"comparisons must be >= 1, got {comparisons}")
    system, baseline = _aligned(system, baseline)
    t = _studentize([s - b for s, b in zip(system, baseline)])
    if t is DEGENERATE_VARIANCE:
        nan = float("nan")
        return TTestResult(nan, nan, nan, comparisons, degenerate=True)
    p = float(2.0 * _stats.t.sf(abs(t), len(system) - 1))
    return TTestResult(t, p, min(1.0, comparisons * p), comparisons)


@dataclass(frozen=True)
class RiskReport:
    metric: str
    topics: tuple[str, ...]
    deltas: tuple[float, ...]
    mean: float
    baseline_mean: float
    wins: int
    ties: int
    losses: int
    urisk: float
    trisk: float | DegenerateVariance
    alpha: float
    band: float
    ttest: TTestResult


def risk_report(
    metric: str,
    system: Mapping[str, float],
    baseline: Mapping[str, float],
    alpha: float = 3.0,
    band: float = 0.10,
    comparisons: int = 1,
) -> RiskReport:
    """Compare per-topic scores over the baseline's topics (missing = 0)."""
    topics = tuple(baseline)
    s = [system.get(t, 0.0) for t in topics]
    b = [baseline[t] for t in topics]
    w, ti, lo = wtl(s, b, band)
    return RiskReport(
        metric=metric,
        topics=topics,
        deltas=tuple(x - y for x, y in zip(s, b)),
        mean=math.fsum(s) / len(s),
        baseline_mean=math.fsum(b) / len(b),
        wins=w,
        ties=ti,
        losses=lo,
        urisk=urisk(s, b, alpha),
        trisk=trisk(s, b, alpha),
        alpha=alpha,
        band=band,
        ttest=paired_t_bonferroni(s, b, comparisons),
    )


def _fmt(x) -> str:
    if isinstance(x, DegenerateVariance):
        return "degenerate"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.6f}"


def report_lines(scores: Sequence[MetricScore], metric: str, report: RiskReport | None) -> list[str]:
    """CSV ``topic,metric,value,residual`` followed by a ``#`` summary block."""
    lines = ["topic,metric,value,residual"]
    lines += [f"{s.topic},{metric},{s.value:.6f},{s.residual:.6f}" for s in scores]
    mean = math.fsum(s.value for s in scores) / len(scores) if scores else 0.0
    lines.append(f"# mean={mean:.6f}")
    if scores and metric == "rbp":
        lines.append(f"# mean_residual={math.fsum(s.residual for s in scores) / len(scores):.6f}")
    if report is not None:
        lines += [
            f"# baseline_mean={report.baseline_mean:.6f}",
            f"# wtl={report.wins}/{report.ties}/{report.losses} band={report.band}",
            f"# urisk={_fmt(report.urisk)} trisk={_fmt(report.trisk)} alpha={report.alpha}",
            f"# t={_fmt(report.ttest.t)} p_raw={_fmt(report.ttest.p_raw)} "
            f"p_adjusted={_fmt(report.ttest.p_adjusted)} m={report.ttest.comparisons} "
            f"significance={report.ttest.marker or '-'}",
        ]
    return lines
