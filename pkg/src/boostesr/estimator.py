"""Parameter estimation from one segmented switching period.

Load resistance and ESR come from period averages and the output voltage at
the middle of the on interval. L and C come from least-squares slopes of
``i_l`` and ``v_c`` while the switch is closed: the inductor then sees the
full input voltage and the capacitor alone feeds the load.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .acquisition import FrameMeans, SegmentedFrame, compute_means, segment_states
from .errors import (
    BatchError,
    BoostEsrError,
    CalibrationError,
    DiscontinuousConductionError,
    EstimationError,
    NoLoadError,
    RegressionError,
)
from .frame import AcquisitionFrame

NO_LOAD_CURRENT = 1e-9


class EsrDenominator(str, enum.Enum):
    """Current used to turn the mid-on voltage dip into a resistance."""

    LOAD_CURRENT = "load_current"   # i_l_media * (1 - d_on)
    INDUCTOR_MEAN = "inductor_mean"  # i_l_media, as printed in the source formula


class VMediaMode(str, enum.Enum):
    PERIOD = "period"
    ON = "on"


class RLoadMethod(str, enum.Enum):
    """How the mean load current behind ``R_load`` is obtained."""

    DIODE_CURRENT = "diode_current"  # trapezoidal mean of i_l over T_off
    PERIOD_MEAN = "period_mean"      # i_l_media * (1 - d_on)


class CapacitorCurrent(str, enum.Enum):
    """Voltage used for the load current the capacitor supplies during T_on."""

    ON_MEAN = "on_mean"        # mean v_out over T_on
    PERIOD_MEAN = "period_mean"  # v_media


@dataclass(frozen=True)
class EstimatorConfig:
    v_in: float | None = None
    esr_denominator: EsrDenominator = EsrDenominator.LOAD_CURRENT
    v_media_mode: VMediaMode = VMediaMode.PERIOD
    r_load_method: RLoadMethod = RLoadMethod.DIODE_CURRENT
    capacitor_current: CapacitorCurrent = CapacitorCurrent.ON_MEAN
    mid_window: int = 5
    guard: int = 3

    def __post_init__(self):
        for name, kind in (("esr_denominator", EsrDenominator), ("v_media_mode", VMediaMode),
                           ("r_load_method", RLoadMethod), ("capacitor_current", CapacitorCurrent)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if self.mid_window < 1 or self.mid_window % 2 == 0:
            raise ValueError("mid_window must be a positive odd integer")
        if self.guard < 0:
            raise ValueError("guard must be >= 0")


@dataclass(frozen=True)
class CalibrationOffset:
    esr_offset: float
    derived_from: int
    true_added_esr: float = 0.0
    esr_denominator: str = EsrDenominator.LOAD_CURRENT.value
    provenance: str = "baseline acquisitions"

    def __post_init__(self):
        if not math.isfinite(self.esr_offset):
            raise CalibrationError("calibration offset must be finite")
        if not self.provenance:
            raise CalibrationError("calibration provenance must be recorded")

    def to_dict(self) -> dict:
        return {
            "esr_offset": self.esr_offset,
            "derived_from": self.derived_from,
            "true_added_esr": self.true_added_esr,
            "esr_denominator": self.esr_denominator,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationOffset":
        return cls(
            esr_offset=float(data["esr_offset"]),
            derived_from=int(data["derived_from"]),
            true_added_esr=float(data.get("true_added_esr", 0.0)),
            esr_denominator=str(data.get("esr_denominator", EsrDenominator.LOAD_CURRENT.value)),
            provenance=str(data.get("provenance", "baseline acquisitions")),
        )


@dataclass(frozen=True)
class EstimateResult:
    r_load_est: float
    esr_raw: float
    esr_est: float
    c_est: float
    l_est: float
    d_on: float
    l_est_two_slope: float
    v_media: float
    i_l_media: float
    v_out_mid_on: float
    m_on_iL: float
    m_off_iL: float
    m_on_vC: float

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in STAT_FIELDS}


STAT_FIELDS = ("r_load_est", "esr_raw", "esr_est", "c_est", "l_est", "l_est_two_slope", "d_on")


def ls_slope(t: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of ``y`` against ``t``."""
    tc = t - t.mean()
    denom = float(np.dot(tc, tc))
    if denom == 0.0:
        raise EstimationError("slope fit needs at least two distinct time points")
    return float(np.dot(tc, y - y.mean()) / denom)


def _guarded(seg: SegmentedFrame, which: str, guard: int) -> slice:
    idx = seg.on_indices if which == "on" else seg.off_indices
    lo, hi = idx.start + guard, idx.stop - guard
    if hi - lo < 2:
        raise EstimationError(f"{which} segment too short for a slope fit with guard {guard}")
    return slice(lo, hi)


def segment_slope(seg: SegmentedFrame, channel: str, which: str = "on", guard: int = 3) -> float:
    s = _guarded(seg, which, guard)
    return ls_slope(seg.frame.t[s], getattr(seg.frame, channel)[s])


def mid_on_voltage(seg: SegmentedFrame, window: int = 5) -> float:
    """Mean of ``v_out`` over ``window`` samples centred on the middle of T_on."""
    centre = seg.n_on // 2
    half = window // 2
    lo = max(seg.on_indices.start, centre - half)
    hi = min(seg.on_indices.stop, centre + half + 1)
    return float(np.mean(seg.frame.v_out[lo:hi]))


def estimate_rload(means: FrameMeans, d_on: float) -> float:
    if means.i_l_media <= NO_LOAD_CURRENT:
        raise NoLoadError(f"mean inductor current {means.i_l_media:.3g} A is too small")
    if not 0.0 <= d_on < 1.0:
        raise EstimationError(f"duty ratio {d_on!r} outside [0, 1)")
    return means.v_media / (means.i_l_media * (1.0 - d_on))


def diode_current(seg: SegmentedFrame) -> float:
    """Period-average diode current: trapezoidal integral of ``i_l`` over T_off.

    The off run is closed with the first on sample, which in steady state is
    the current at the end of the period.
    """
    off = seg.off("i_l")
    closing = seg.frame.i_l[seg.on_indices.start]
    return float((off.sum() + 0.5 * (closing - off[0])) / len(seg.frame))


def estimate_rload_diode(seg: SegmentedFrame, means: FrameMeans) -> float:
    """``R_load`` from charge balance: mean output voltage over mean diode current."""
    current = diode_current(seg)
    if current <= NO_LOAD_CURRENT:
        raise NoLoadError(f"mean diode current {current:.3g} A is too small")
    return means.v_media / current


def estimate_esr(seg: SegmentedFrame, means: FrameMeans,
                 denominator: EsrDenominator | str = EsrDenominator.LOAD_CURRENT,
                 window: int = 5, v_media_mode: VMediaMode | str = VMediaMode.PERIOD) -> float:
    """Raw ESR from the dip of ``v_out`` below its mean at mid T_on.

    The result still contains board parasitics and a small ripple-shape
    bias; both are removed by :func:`calibrate_offset`.
    """
    denominator = EsrDenominator(denominator)
    if seg.n_on < 10:
        raise EstimationError("ESR estimate needs at least 10 on samples")
    v_mid = mid_on_voltage(seg, window)
    v_ref = means.v_media if VMediaMode(v_media_mode) is VMediaMode.PERIOD else means.on["v_out"]
    current = means.i_l_media
    if denominator is EsrDenominator.LOAD_CURRENT:
        current *= 1.0 - seg.d_on
    if current <= 0.0:
        raise EstimationError(f"non-positive ESR denominator {current:.3g} A")
    return -(v_mid - v_ref) / current


def estimate_l(seg: SegmentedFrame, v_in: float, guard: int = 3) -> float:
    if not v_in > 0:
        raise EstimationError("v_in must be > 0 to estimate L")
    slope = segment_slope(seg, "i_l", "on", guard)
    if slope <= 0:
        raise EstimationError(f"inductor current slope during T_on is {slope:.3g} A/s; must be > 0")
    return v_in / slope


def estimate_l_two_slope(seg: SegmentedFrame, means: FrameMeans, guard: int = 3) -> float:
    """L from the difference of the on and off current slopes; needs no V_in."""
    m_on = segment_slope(seg, "i_l", "on", guard)
    m_off = segment_slope(seg, "i_l", "off", guard)
    if m_on - m_off <= 0:
        raise EstimationError("on/off inductor current slopes do not bracket a positive L")
    return means.v_media / (m_on - m_off)


def estimate_c(seg: SegmentedFrame, means: FrameMeans, r_load_est: float, guard: int = 3,
               current: CapacitorCurrent | str = CapacitorCurrent.ON_MEAN) -> float:
    """C from the discharge slope of ``v_c`` while the capacitor alone feeds the load."""
    if not r_load_est > 0:
        raise EstimationError("r_load_est must be > 0 to estimate C")
    slope = segment_slope(seg, "v_c", "on", guard)
    if slope >= 0:
        raise EstimationError(f"capacitor voltage slope during T_on is {slope:.3g} V/s; must be < 0")
    if CapacitorCurrent(current) is CapacitorCurrent.ON_MEAN:
        v_load = means.on["v_out"]
    else:
        v_load = means.v_media
    return (v_load / r_load_est) / (-slope)


def _as_segmented(frame) -> SegmentedFrame:
    return frame if isinstance(frame, SegmentedFrame) else segment_states(frame)


def estimate_frame(frame: AcquisitionFrame | SegmentedFrame,
                   config: EstimatorConfig = EstimatorConfig(),
                   calibration: CalibrationOffset | None = None) -> EstimateResult:
    """Run the full single-period pipeline on one frame."""
    seg = _as_segmented(frame)
    i_min = float(np.min(seg.frame.i_l))
    if i_min <= 0.0:
        raise DiscontinuousConductionError(
            f"inductor current falls to {i_min:.3g} A; the estimator assumes continuous conduction")
    means = compute_means(seg)
    v_in = config.v_in
    if v_in is None:
        v_in = seg.frame.metadata.get("v_in_v")
    if v_in is None:
        raise EstimationError("input voltage unknown: set EstimatorConfig.v_in or frame metadata v_in_v")

    g = config.guard
    if config.r_load_method is RLoadMethod.DIODE_CURRENT:
        r_load = estimate_rload_diode(seg, means)
    else:
        r_load = estimate_rload(means, seg.d_on)
    esr_raw = estimate_esr(seg, means, config.esr_denominator, config.mid_window, config.v_media_mode)
    offset = calibration.esr_offset if calibration is not None else 0.0
    return EstimateResult(
        r_load_est=r_load,
        esr_raw=esr_raw,
        esr_est=esr_raw - offset,
        c_est=estimate_c(seg, means, r_load, g, config.capacitor_current),
        l_est=estimate_l(seg, float(v_in), g),
        d_on=seg.d_on,
        l_est_two_slope=estimate_l_two_slope(seg, means, g),
        v_media=means.v_media,
        i_l_media=means.i_l_media,
        v_out_mid_on=mid_on_voltage(seg, config.mid_window),
        m_on_iL=segment_slope(seg, "i_l", "on", g),
        m_off_iL=segment_slope(seg, "i_l", "off", g),
        m_on_vC=segment_slope(seg, "v_c", "on", g),
    )


def calibrate_offset(baseline_frames: Sequence, true_added_esr: float,
                     config: EstimatorConfig = EstimatorConfig(),
                     provenance: str = "baseline acquisitions") -> CalibrationOffset:
    """Constant ESR offset from frames taken at a known added ESR."""
    if not baseline_frames:
        raise CalibrationError("calibration needs baseline frames, got none")
    if len(baseline_frames) < 2:
        raise CalibrationError("calibration needs at least 2 baseline frames")
    raws = []
    for frame in baseline_frames:
        seg = _as_segmented(frame)
        raws.append(estimate_esr(seg, compute_means(seg), config.esr_denominator,
                                 config.mid_window, config.v_media_mode))
    return CalibrationOffset(
        esr_offset=float(np.mean(raws)) - float(true_added_esr),
        derived_from=len(raws),
        true_added_esr=float(true_added_esr),
        esr_denominator=config.esr_denominator.value,
        provenance=provenance,
    )


@dataclass(frozen=True)
class EstimateStats:
    mean: dict[str, float]
    variance: dict[str, float]
    n_acquisitions: int
    results: tuple[EstimateResult, ...] = field(default=(), repr=False)

    def std(self, name: str) -> float:
        return math.sqrt(self.variance[name])


def summarize(results: Sequence[EstimateResult]) -> EstimateStats:
    if len(results) < 2:
        raise BatchError(f"variance needs at least 2 acquisitions, got {len(results)}")
    # shifted by the first value: identical inputs give exactly zero variance
    shifted = {}
    for name in STAT_FIELDS:
        v = np.array([getattr(r, name) for r in results])
        shifted[name] = (v[0], v - v[0])
    return EstimateStats(
        mean={k: float(ref + d.mean()) for k, (ref, d) in shifted.items()},
        variance={k: float(d.var(ddof=1)) for k, (ref, d) in shifted.items()},
        n_acquisitions=len(results),
        results=tuple(results),
    )


def run_batch(frames: Sequence, calibration: CalibrationOffset | None = None,
              config: EstimatorConfig = EstimatorConfig()) -> EstimateStats:
    """Estimate every frame and return per-parameter mean and sample variance."""
    if len(frames) < 2:
        raise BatchError(f"a batch needs at least 2 frames, got {len(frames)}")
    results, failed, reasons = [], [], []
    for i, frame in enumerate(frames):
        try:
            results.append(estimate_frame(frame, config, calibration))
        except BoostEsrError as exc:
            failed.append(i)
            reasons.append(f"{i}: {type(exc).__name__}: {exc}")
    if failed:
        raise BatchError("estimation failed for frames " + "; ".join(reasons), failed)
    return summarize(results)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    n: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "n": self.n}


def linear_regression(x: Iterable[float], y: Iterable[float]) -> RegressionResult:
    """Ordinary least-squares line ``y = slope * x + intercept``.

    ``r_squared`` is reported as 0 when ``y`` has no spread.
    """
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise RegressionError("x and y must be 1-D sequences of equal length")
    if len(np.unique(x)) < 2:
        raise RegressionError("regression needs at least two distinct x values")
    xc = x - x.mean()
    yc = y - y.mean()
    slope = float(np.dot(xc, yc) / np.dot(xc, xc))
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(np.dot(yc, yc))
    if ss_tot == 0.0:
        r2 = 0.0
    else:
        resid = y - (slope * x + intercept)
        r2 = min(1.0, max(0.0, 1.0 - float(np.dot(resid, resid)) / ss_tot))
    return RegressionResult(slope, intercept, r2, len(x))
