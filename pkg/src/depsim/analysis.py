"""Metric analysis: pattern matching, forecasting, and learning.

Monitoring records stream into bounded per-(source, metric) windows.
A pattern library is checked against the windows to produce diagnoses;
a simple moving average forecasts whether a metric will cross a bound;
and after a confirmed fault the engine can learn a new threshold
pattern from the window that preceded it, so the same build-up is
flagged before the fault next time.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

SimTime = int

COMPARATORS = {
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
}


class InsufficientData(Exception):
    """Forecast asked for more history than the window holds."""


class NoSignal(Exception):
    """No metric shifted enough before the fault to learn from."""


@dataclass(frozen=True)
class MonitoringRecord:
    source: str
    metric: str
    value: float
    at: SimTime


@dataclass(frozen=True)
class Threshold:
    metric: str
    cmp: str
    bound: float
    min_consecutive: int = 1

    def __post_init__(self) -> None:
        if self.cmp not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.cmp!r}")
        if self.min_consecutive < 1:
            raise ValueError("min_consecutive must be >= 1")


@dataclass(frozen=True)
class Trend:
    """Least-squares slope over the last k samples, compared to a bound."""

    metric: str
    k: int
    cmp: str
    slope_bound: float

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("trend window must be >= 2")
        if self.cmp not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.cmp!r}")


@dataclass(frozen=True)
class Sequence:
    """Ordered sub-predicates that must all fire, in order, within
    ``span`` ticks of each other."""

    steps: tuple[Union[Threshold, Trend], ...]
    span: int

    def __post_init__(self) -> None:
        if len(self.steps) < 2:
            raise ValueError("sequence needs at least two steps")
        if self.span < 1:
            raise ValueError("span must be >= 1")


Predicate = Union[Threshold, Trend, Sequence]


@dataclass(frozen=True)
class Pattern:
    pattern_id: str
    fault_class: str
    predicate: Predicate
    confidence: float = 0.5
    origin: str = "predefined"  # predefined | learned


@dataclass(frozen=True)
class Diagnosis:
    subject: str
    fault_class: str
    confidence: float
    at: SimTime
    evidence: tuple[tuple[str, tuple[tuple[int, float], ...]], ...]  # (pattern_id, sample excerpt)


@dataclass(frozen=True)
class Prediction:
    source: str
    metric: str
    at: SimTime
    forecast: float
    horizon: int
    threshold: float
    cmp: str
    will_cross: bool


# --- predicate evaluation (pure) ---------------------------------------------


def _threshold_hit(samples: tuple[tuple[int, float], ...], pred: Threshold) -> bool:
    """True when the most recent min_consecutive samples all satisfy the
    comparison. Older history does not matter: the condition must hold
    right now."""
    m = pred.min_consecutive
    if len(samples) < m:
        return False
    op = COMPARATORS[pred.cmp]
    for _, value in samples[-m:]:
        if not op(value, pred.bound):
            return False
    return True


def _slope(samples: tuple[tuple[int, float], ...]) -> float:
    n = len(samples)
    mean_t = sum(s[0] for s in samples) / n
    mean_v = sum(s[1] for s in samples) / n
    num = sum((s[0] - mean_t) * (s[1] - mean_v) for s in samples)
    den = sum((s[0] - mean_t) ** 2 for s in samples)
    if den == 0.0:
        return 0.0
    return num / den


def _trend_hit(samples: tuple[tuple[int, float], ...], pred: Trend) -> bool:
    if len(samples) < pred.k:
        return False
    return COMPARATORS[pred.cmp](_slope(samples[-pred.k :]), pred.slope_bound)


def _step_hit_times(samples: tuple[tuple[int, float], ...], step: Union[Threshold, Trend]) -> list[int]:
    """Sample times at which the step predicate holds over the history
    up to and including that sample."""
    times = []
    for i in range(1, len(samples) + 1):
        prefix = samples[:i]
        hit = _threshold_hit(prefix, step) if isinstance(step, Threshold) else _trend_hit(prefix, step)
        if hit:
            times.append(samples[i - 1][0])
    return times


def _sequence_hit(windows_by_metric: dict[str, tuple[tuple[int, float], ...]], pred: Sequence) -> bool:
    """Greedy earliest-chain search: each step must fire strictly after
    the previous one, the whole chain within span ticks."""
    chain: list[int] = []
    for step in pred.steps:
        samples = windows_by_metric.get(step.metric, ())
        times = _step_hit_times(samples, step)
        floor = chain[-1] if chain else None
        nxt = None
        for t in times:
            if floor is None or t > floor:
                nxt = t
                break
        if nxt is None:
            return False
        chain.append(nxt)
    return chain[-1] - chain[0] <= pred.span


def compare(
    windows: dict[tuple[str, str], tuple[tuple[int, float], ...]],
    library: Iterable[Pattern],
    now: SimTime,
) -> list[Diagnosis]:
    """Match every pattern against every window.

    ``windows`` maps (source, metric) to samples ordered by time. At
    most one diagnosis per (subject, fault_class): confidence is the max
    over matching patterns, evidence collects each matching pattern with
    a short excerpt of the samples it matched on.
    """
    by_source: dict[str, dict[str, tuple[tuple[int, float], ...]]] = {}
    for (source, metric), samples in windows.items():
        by_source.setdefault(source, {})[metric] = samples

    grouped: dict[tuple[str, str], dict] = {}
    for pattern in library:
        pred = pattern.predicate
        for source, metrics in by_source.items():
            if isinstance(pred, Threshold):
                samples = metrics.get(pred.metric)
                hit = samples is not None and _threshold_hit(samples, pred)
                excerpt_from = samples[-pred.min_consecutive :] if hit else ()
            elif isinstance(pred, Trend):
                samples = metrics.get(pred.metric)
                hit = samples is not None and _trend_hit(samples, pred)
                excerpt_from = samples[-pred.k :] if hit else ()
            else:
                hit = _sequence_hit(metrics, pred)
                first = metrics.get(pred.steps[-1].metric, ())
                excerpt_from = first[-4:] if hit else ()
            if not hit:
                continue
            key = (source, pattern.fault_class)
            slot = grouped.setdefault(key, {"confidence": 0.0, "evidence": []})
            slot["confidence"] = max(slot["confidence"], pattern.confidence)
            slot["evidence"].append((pattern.pattern_id, tuple(excerpt_from)))

    return [
        Diagnosis(subject=source, fault_class=fc, confidence=slot["confidence"], at=now, evidence=tuple(slot["evidence"]))
        for (source, fc), slot in grouped.items()
    ]


def forecast_ma(
    samples: tuple[tuple[int, float], ...],
    k: int,
    horizon: int,
    threshold: float,
    cmp: str = ">",
    source: str = "",
    metric: str = "",
    at: SimTime = 0,
) -> Prediction:
    """Moving-average forecast: the mean of the last k values, projected
    ``horizon`` ticks out, checked against the threshold."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if cmp not in COMPARATORS:
        raise ValueError(f"unknown comparator {cmp!r}")
    if len(samples) < k:
        raise InsufficientData(f"need {k} samples, have {len(samples)}")
    forecast = sum(v for _, v in samples[-k:]) / k
    return Prediction(
        source=source,
        metric=metric,
        at=at,
        forecast=forecast,
        horizon=horizon,
        threshold=threshold,
        cmp=cmp,
        will_cross=COMPARATORS[cmp](forecast, threshold),
    )


# --- engine -------------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisParams:
    capacity: int = 128
    lookback: int = 50
    compare_interval: int = 10

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


class AnalysisEngine:
    """Stateful wrapper around the pure matching functions.

    Holds the windows, the pattern library and the edge-trigger state:
    a (subject, fault_class) pair produces a new diagnosis only when it
    starts matching, not on every poll while the condition persists.
    """

    def __init__(self, params: AnalysisParams, library: Iterable[Pattern] = ()):
        self.params = params
        self.windows: dict[tuple[str, str], deque[tuple[int, float]]] = {}
        self._last_at: dict[str, int] = {}
        self.library: list[Pattern] = list(library)
        self._learned_keys: set[tuple[str, float, str]] = set()
        self._active: set[tuple[str, str]] = set()
        self._learn_seq = 0

    def ingest(self, record: MonitoringRecord) -> bool:
        """Append a record. Records older than the newest already seen
        from the same source are dropped (returns False)."""
        last = self._last_at.get(record.source)
        if last is not None and record.at < last:
            return False
        self._last_at[record.source] = record.at
        key = (record.source, record.metric)
        window = self.windows.get(key)
        if window is None:
            window = deque(maxlen=self.params.capacity)
            self.windows[key] = window
        window.append((record.at, record.value))
        return True

    def snapshot(self) -> dict[tuple[str, str], tuple[tuple[int, float], ...]]:
        return {key: tuple(window) for key, window in self.windows.items()}

    def poll(self, now: SimTime) -> list[Diagnosis]:
        """Run compare and return only newly matching diagnoses."""
        current = compare(self.snapshot(), self.library, now)
        fresh = [d for d in current if (d.subject, d.fault_class) not in self._active]
        self._active = {(d.subject, d.fault_class) for d in current}
        return fresh

    def add_pattern(self, pattern: Pattern) -> bool:
        """Add to the library; learned duplicates (same metric, bound to
        3 decimals, fault class) are ignored. Returns True if added."""
        if pattern.origin == "learned" and isinstance(pattern.predicate, Threshold):
            key = (pattern.predicate.metric, round(pattern.predicate.bound, 3), pattern.fault_class)
            if key in self._learned_keys:
                return False
            self._learned_keys.add(key)
        self.library.append(pattern)
        return True

    def learn(self, subject: str, fault_class: str, fault_time: SimTime) -> Pattern:
        """Learn a threshold pattern from the window preceding a fault.

        Splits each of the subject's metrics at fault_time - lookback:
        older samples are the baseline, newer ones (before the fault)
        the pre-window. The metric with the largest upward standardized
        mean shift wins; its bound is baseline mean + 2 stddev. Raises
        NoSignal when nothing shifted by more than one standardized
        unit.
        """
        cut = fault_time - self.params.lookback
        best: tuple[float, str, float, float] | None = None  # (shift, metric, mean, std)
        for (source, metric), window in self.windows.items():
            if source != subject:
                continue
            baseline = [v for at, v in window if at < cut]
            pre = [v for at, v in window if cut <= at < fault_time]
            if len(baseline) < 2 or not pre:
                continue
            base_mean, base_std = _mean_std(baseline)
            pre_mean = sum(pre) / len(pre)
            diff = pre_mean - base_mean
            if base_std > 0.0:
                shift = diff / base_std
            else:
                shift = math.inf if diff > 0.0 else 0.0
            if shift > 1.0 and (best is None or shift > best[0]):
                best = (shift, metric, base_mean, base_std)
        if best is None:
            raise NoSignal(f"no metric of {subject!r} shifted before t={fault_time}")
        _, metric, base_mean, base_std = best
        self._learn_seq += 1
        pattern = Pattern(
            pattern_id=f"learned-{subject}-{metric}-{self._learn_seq}",
            fault_class=fault_class,
            predicate=Threshold(metric=metric, cmp=">", bound=base_mean + 2.0 * base_std, min_consecutive=2),
            confidence=0.5,
            origin="learned",
        )
        if not self.add_pattern(pattern):
            raise NoSignal(f"pattern for {subject!r}/{metric} already learned")
        return pattern
