"""Sweeps over the ESR network and capacitor bank.

Each sweep point simulates the steady state once and draws
``n_acquisitions`` independently noised captures of it, the way repeated
acquisitions on a settled converter differ only by measurement noise.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adc import measure
from .config import ExperimentConfig
from .errors import BoostEsrError, InvalidParameterError
from .estimator import (
    CalibrationOffset,
    EstimateStats,
    RegressionResult,
    calibrate_offset,
    estimate_frame,
    linear_regression,
    summarize,
)
from .sim import DegradationState, apply_degradation, simulate_clean

AXES = ("k", "esr", "caps")


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep.

    ``axis`` is ``"k"`` (parallel resistors in the ESR network), ``"esr"``
    (added series resistance in ohms) or ``"caps"`` (capacitor count). For
    the two ESR axes ``caps`` lists the capacitor counts to repeat the sweep
    at; each repetition is calibrated on its first point.
    """

    base: ExperimentConfig
    axis: str
    values: tuple
    caps: tuple[int, ...] = (3,)
    n_acquisitions: int = 20
    calibrate: bool = True

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidParameterError(f"sweep axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise InvalidParameterError("sweep needs at least one value")
        if self.n_acquisitions < 1:
            raise InvalidParameterError("n_acquisitions must be >= 1")
        if self.axis == "caps":
            object.__setattr__(self, "caps", ())

    def points(self) -> list["SweepPoint"]:
        base_deg = self.base.degradation or DegradationState()
        pts = []
        if self.axis == "caps":
            for n in self.values:
                deg = dataclasses.replace(base_deg, n_parallel_caps=int(n))
                params = apply_degradation(self.base.base, deg)
                pts.append(SweepPoint(len(pts), int(n), deg.added_esr, params, group=0))
            return pts
        for g, n_caps in enumerate(self.caps):
            for v in self.values:
                if self.axis == "k":
                    deg = DegradationState(int(v), int(n_caps))
                    params = apply_degradation(self.base.base, deg)
                    added = deg.added_esr
                else:
                    deg = DegradationState(0, int(n_caps))
                    params = apply_degradation(self.base.base, deg)
                    params = params.replace(esr=params.esr + float(v))
                    added = float(v)
                pts.append(SweepPoint(len(pts), int(n_caps), added, params, group=g))
        return pts


@dataclass(frozen=True)
class SweepPoint:
    index: int
    n_caps: int
    esr_entered: float
    params: object
    group: int

    @property
    def c_entered(self) -> float:
        return self.params.c


@dataclass
class PointResult:
    point: SweepPoint
    stats: EstimateStats | None = None
    error: str | None = None


@dataclass
class SweepResult:
    spec: ExperimentSpec
    points: list[PointResult]
    calibrations: dict[int, CalibrationOffset] = field(default_factory=dict)
    regressions: list[dict] = field(default_factory=list)

    @property
    def failed(self) -> list[PointResult]:
        return [p for p in self.points if p.error is not None]


def _acquire(point: SweepPoint, spec: ExperimentSpec, seed_seq):
    """Estimate ``n_acquisitions`` noisy captures of one sweep point (raw ESR)."""
    cfg = spec.base.sim
    est = spec.base.estimator_for_params
    clean = simulate_clean(point.params, cfg)
    rng = np.random.default_rng(seed_seq)
    frames = [measure(clean, cfg, rng) for _ in range(spec.n_acquisitions)]
    return frames, [estimate_frame(f, est) for f in frames]


def _run_point(args):
    point, spec, seed_seq = args
    try:
        frames, results = _acquire(point, spec, seed_seq)
        return point.index, frames, results, None
    except BoostEsrError as exc:
        return point.index, None, None, f"{type(exc).__name__}: {exc}"


def _apply_offset(results, calibration):
    return [dataclasses.replace(r, esr_est=r.esr_raw - calibration.esr_offset) for r in results]


def run_sweep(spec: ExperimentSpec, seed: int | None = None, jobs: int = 1) -> SweepResult:
    """Run every sweep point; failures are recorded per point, not raised."""
    pts = spec.points()
    if seed is None:
        seed = spec.base.sim.seed
    seeds = np.random.SeedSequence(seed).spawn(len(pts))
    work = [(p, spec, s) for p, s in zip(pts, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_point, work))
    else:
        outcomes = [_run_point(w) for w in work]
    outcomes.sort(key=lambda o: o[0])

    est = spec.base.estimator_for_params
    calibrations: dict[int, CalibrationOffset] = {}
    results = []
    for p, (_, frames, res, err) in zip(pts, outcomes):
        if err is None and spec.calibrate and spec.axis != "caps" and p.group not in calibrations:
            try:
                calibrations[p.group] = calibrate_offset(
                    frames, p.esr_entered, est,
                    provenance=f"sweep point {p.index} ({p.n_caps} caps, {p.esr_entered * 1e3:g} mOhm)")
            except BoostEsrError as exc:
                err = f"{type(exc).__name__}: {exc}"
        if err is not None:
            results.append(PointResult(p, error=err))
            continue
        cal = calibrations.get(p.group)
        if cal is not None:
            res = _apply_offset(res, cal)
        if len(res) >= 2:
            results.append(PointResult(p, stats=summarize(res)))
        else:
            results.append(PointResult(p, stats=_single(res[0])))

    sweep = SweepResult(spec, results, calibrations)
    sweep.regressions = regressions(sweep)
    return sweep


def _single(result) -> EstimateStats:
    values = result.values()
    return EstimateStats(mean=dict(values), variance={k: float("nan") for k in values},
                         n_acquisitions=1, results=(result,))


# Table units: mOhm, Ohm, uF, uH.
TABLE_SCALE = {"esr_est": 1e3, "esr_raw": 1e3, "r_load_est": 1.0, "c_est": 1e6, "l_est": 1e6}
TABLE_NAMES = {"esr_est": "esr_est_mohm", "esr_raw": "esr_raw_mohm", "r_load_est": "r_load_ohm",
               "c_est": "c_uf", "l_est": "l_uh"}


def table_rows(sweep: SweepResult) -> list[dict]:
    rows = []
    for pr in sweep.points:
        p = pr.point
        row = {
            "point": p.index,
            "n_caps": p.n_caps,
            "c_entered_uf": p.c_entered * 1e6,
            "esr_entered_mohm": p.esr_entered * 1e3,
            "n": 0 if pr.stats is None else pr.stats.n_acquisitions,
        }
        for key, name in TABLE_NAMES.items():
            scale = TABLE_SCALE[key]
            if pr.stats is None:
                row[f"{name}_mean"] = row[f"{name}_std"] = float("nan")
            else:
                row[f"{name}_mean"] = pr.stats.mean[key] * scale
                row[f"{name}_std"] = float(np.sqrt(pr.stats.variance[key])) * scale
        row["error"] = pr.error or ""
        rows.append(row)
    return rows


def _fit(rows, x_key, y_key) -> RegressionResult | None:
    xs = [r[x_key] for r in rows]
    ys = [r[y_key] for r in rows]
    if len(set(xs)) < 2:
        return None
    return linear_regression(xs, ys)


def regressions(sweep: SweepResult) -> list[dict]:
    """Estimated-vs-entered regression lines in table units.

    Fitted on the same floats that :func:`table_rows` reports, so the table
    can be re-regressed externally with identical results.
    """
    rows = [r for r in table_rows(sweep) if not r["error"]]
    out = []
    if sweep.spec.axis == "caps":
        fit = _fit(rows, "c_entered_uf", "c_uf_mean")
        if fit is not None:
            out.append({"quantity": "c_uf", "n_caps": None, **fit.to_dict()})
        return out
    for n_caps in sweep.spec.caps:
        group = [r for r in rows if r["n_caps"] == n_caps]
        for quantity in ("esr_est_mohm", "esr_raw_mohm"):
            fit = _fit(group, "esr_entered_mohm", f"{quantity}_mean")
            if fit is not None:
                out.append({"quantity": quantity, "n_caps": n_caps, **fit.to_dict()})
    return out
