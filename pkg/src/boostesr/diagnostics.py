"""Capacitor health assessment from batches of estimates."""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass

from .errors import InvalidParameterError, NotCalibratedError, RegressionError
from .estimator import EstimateStats, RegressionResult, linear_regression

HISTORY_WINDOW = 50
_RATIO_RTOL = 1e-9


class Status(enum.IntEnum):
    HEALTHY = 0
    DEGRADING = 1
    END_OF_LIFE = 2

    @property
    def label(self) -> str:
        return {0: "Healthy", 1: "Degrading", 2: "EndOfLife"}[self.value]


@dataclass(frozen=True)
class Thresholds:
    """Ratio limits relative to the baseline.

    The defaults follow the usual electrolytic end-of-life rule of thumb; they
    are policy, not measured limits.
    """

    esr_warn: float = 1.5
    esr_alarm: float = 2.0
    c_warn: float = 0.9
    c_alarm: float = 0.8

    def __post_init__(self):
        if not self.esr_warn < self.esr_alarm:
            raise InvalidParameterError("esr_warn must be below esr_alarm")
        if not self.c_warn > self.c_alarm:
            raise InvalidParameterError("c_warn must be above c_alarm")


@dataclass(frozen=True)
class HealthBaseline:
    esr_0: float
    c_0: float
    established_from: str = ""
    # ratios are taken against max(esr_0, esr_floor) so a near-zero baseline stays usable
    esr_floor: float = 1e-3

    def __post_init__(self):
        if not self.c_0 > 0:
            raise InvalidParameterError("baseline capacitance must be > 0")
        if not math.isfinite(self.esr_0):
            raise InvalidParameterError("baseline ESR must be finite")

    @classmethod
    def from_stats(cls, stats: EstimateStats, note: str = "") -> "HealthBaseline":
        return cls(esr_0=stats.mean["esr_est"], c_0=stats.mean["c_est"],
                   established_from=note or f"{stats.n_acquisitions} acquisitions")

    def to_dict(self) -> dict:
        return {"esr_0": self.esr_0, "c_0": self.c_0,
                "established_from": self.established_from, "esr_floor": self.esr_floor}

    @classmethod
    def from_dict(cls, data: dict) -> "HealthBaseline":
        return cls(esr_0=float(data["esr_0"]), c_0=float(data["c_0"]),
                   established_from=str(data.get("established_from", "")),
                   esr_floor=float(data.get("esr_floor", 1e-3)))


@dataclass(frozen=True)
class HealthReport:
    esr: float
    c: float
    esr_ratio: float
    c_ratio: float
    status: Status
    trend: RegressionResult | None

    def to_dict(self) -> dict:
        return {
            "esr_ohm": self.esr,
            "c_f": self.c,
            "esr_ratio": self.esr_ratio,
            "c_ratio": self.c_ratio,
            "status": self.status.label,
            "trend": None if self.trend is None else self.trend.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def classify(esr_ratio: float, c_ratio: float, thresholds: Thresholds = Thresholds()) -> Status:
    hi = 1.0 - _RATIO_RTOL
    lo = 1.0 + _RATIO_RTOL
    if esr_ratio >= thresholds.esr_alarm * hi or c_ratio <= thresholds.c_alarm * lo:
        return Status.END_OF_LIFE
    if esr_ratio >= thresholds.esr_warn * hi or c_ratio <= thresholds.c_warn * lo:
        return Status.DEGRADING
    return Status.HEALTHY


def _trend(history) -> RegressionResult | None:
    if len(history) < 2:
        return None
    try:
        return linear_regression(range(len(history)), history)
    except RegressionError:
        return None


def assess(stats: EstimateStats, baseline: HealthBaseline | None,
           thresholds: Thresholds = Thresholds(), history=()) -> HealthReport:
    """Compare a batch against the baseline.

    ``history`` is the sequence of earlier batch ESR means; the trend line is
    fitted over it plus the current batch.
    """
    if baseline is None:
        raise NotCalibratedError("no health baseline has been established")
    esr = stats.mean["esr_est"]
    c = stats.mean["c_est"]
    esr_ratio = esr / max(baseline.esr_0, baseline.esr_floor)
    c_ratio = c / baseline.c_0
    series = list(history)[-(HISTORY_WINDOW - 1):] + [esr]
    return HealthReport(esr, c, esr_ratio, c_ratio, classify(esr_ratio, c_ratio, thresholds), _trend(series))


class HealthMonitor:
    """Keeps a rolling history of batch results and emits reports."""

    def __init__(self, baseline: HealthBaseline | None = None,
                 thresholds: Thresholds = Thresholds(), window: int = HISTORY_WINDOW):
        self.baseline = baseline
        self.thresholds = thresholds
        self.history: deque[float] = deque(maxlen=window)
        self.reports: list[HealthReport] = []

    def update(self, stats: EstimateStats) -> HealthReport:
        if self.baseline is None:
            raise NotCalibratedError("no health baseline has been established")
        report = assess(stats, self.baseline, self.thresholds, self.history)
        self.history.append(report.esr)
        self.reports.append(report)
        return report
