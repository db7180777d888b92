"""Command-line entry point: ``boostesr {simulate,estimate,calibrate,sweep,monitor}``."""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import reports
from .config import NOISE_PROFILES, ExperimentConfig, load_config, sim_config
from .diagnostics import HealthBaseline, HealthMonitor, Thresholds
from .errors import (
    BoostEsrError,
    ConvergenceError,
    DiscontinuousConductionError,
    EstimationError,
    FrameParseError,
    InvalidDegradationError,
    InvalidParameterError,
    NotCalibratedError,
    SegmentationError,
)
from .estimator import CalibrationOffset, EstimatorConfig, calibrate_offset, estimate_frame, run_batch
from .experiments import ExperimentSpec, run_sweep, table_rows
from .frame import read_frame, write_frame
from .sim import simulate

log = logging.getLogger("boostesr")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ESTIMATION = 3
EXIT_PARTIAL = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (FrameParseError, InvalidParameterError, InvalidDegradationError,
                        NotCalibratedError, OSError, json.JSONDecodeError, KeyError, ValueError)):
        return EXIT_CONFIG
    if isinstance(exc, (EstimationError, SegmentationError, DiscontinuousConductionError, ConvergenceError)):
        return EXIT_ESTIMATION
    return 1


def _load(args) -> ExperimentConfig:
    if args.config is None:
        cfg = ExperimentConfig()
    else:
        path = Path(args.config)
        if not path.is_file():
            raise CliError(f"config file not found: {path}", EXIT_CONFIG)
        cfg = load_config(path)
    noise = getattr(args, "noise", None)
    if noise is not None:
        cfg = dataclasses.replace(cfg, sim=sim_config(noise, sample_rate=cfg.sim.sample_rate,
                                                      integrator_substeps=cfg.sim.integrator_substeps,
                                                      n_periods=cfg.sim.n_periods, seed=cfg.sim.seed),
                                  noise_profile=noise)
    return cfg.with_seed(args.seed)


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            yield fh


def _estimator(args, cfg: ExperimentConfig, frame=None) -> EstimatorConfig:
    est = cfg.estimator
    v_in = getattr(args, "v_in", None)
    if v_in is None and est.v_in is None:
        if frame is not None and "v_in_v" in frame.metadata:
            v_in = float(frame.metadata["v_in_v"])
        elif args.config is not None:
            v_in = cfg.base.v_in
    if v_in is not None:
        est = dataclasses.replace(est, v_in=v_in)
    if getattr(args, "esr_denominator", None):
        est = dataclasses.replace(est, esr_denominator=args.esr_denominator)
    return est


def _read_calibration(path) -> CalibrationOffset | None:
    if path is None:
        return None
    with open(path) as fh:
        return CalibrationOffset.from_dict(json.load(fh))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    params = cfg.params
    frame = simulate(params, cfg.sim)
    frame.metadata["esr_entered_ohm"] = (
        cfg.degradation.added_esr if cfg.degradation is not None else params.esr)
    if args.seed is not None or cfg.sim.seed is not None:
        frame.metadata["seed"] = cfg.sim.seed
    with _output(args.out) as fh:
        write_frame(frame, fh)
    if args.plot:
        from .plotting import waveform_figure

        waveform_figure(frame, args.plot)
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _load(args)
    cal = _read_calibration(args.calibration)
    frame = read_frame(args.frame)
    result = estimate_frame(frame, _estimator(args, cfg, frame), cal)
    entered = frame.metadata.get("esr_entered_ohm")
    with _output(args.out) as fh:
        reports.write_estimates(fh, [reports.estimate_row(Path(args.frame).stem, result,
                                                          entered if isinstance(entered, float) else None)])
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    frames = [read_frame(p) for p in args.frames]
    est = _estimator(args, cfg, frames[0] if frames else None)
    cal = calibrate_offset(frames, args.true_esr, est,
                           provenance=f"{len(frames)} frames: {', '.join(Path(p).name for p in args.frames)}")
    with _output(args.out) as fh:
        json.dump(cal.to_dict(), fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def _parse_values(text, axis):
    items = [s for s in text.split(",") if s.strip()]
    if axis == "esr":
        return tuple(float(s) for s in items)
    return tuple(int(s) for s in items)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    default_values = {"k": "5,4,3,2,1", "esr": "0.04,0.05,0.07,0.1,0.2", "caps": "1,2,3,4,5"}
    values = _parse_values(args.values or default_values[args.axis], args.axis)
    if args.caps:
        caps = tuple(int(s) for s in args.caps.split(","))
    elif cfg.degradation is not None:
        caps = (cfg.degradation.n_parallel_caps,)
    else:
        caps = (3,)
    spec = ExperimentSpec(base=cfg, axis=args.axis, values=values, caps=caps,
                          n_acquisitions=args.n, calibrate=not args.no_calibrate)
    sweep = run_sweep(spec, seed=cfg.sim.seed, jobs=args.jobs)

    out = Path(args.out or "sweep_out")
    out.mkdir(parents=True, exist_ok=True)
    rows = table_rows(sweep)
    with open(out / "table.csv", "w", newline="") as fh:
        reports.write_table(fh, rows)
    with open(out / "estimates.csv", "w", newline="") as fh:
        est_rows, footers = [], []
        for pr in sweep.points:
            if pr.stats is None:
                continue
            for i, r in enumerate(pr.stats.results):
                est_rows.append(reports.estimate_row(f"{pr.point.index}-{i}", r, pr.point.esr_entered))
            footers += reports.stats_footer(pr.stats, f"point={pr.point.index}")
        reports.write_estimates(fh, est_rows, footers)
    with open(out / "regression.json", "w") as fh:
        reports.write_regressions(fh, sweep.regressions)
    if sweep.calibrations:
        with open(out / "calibration.json", "w") as fh:
            json.dump({str(k): v.to_dict() for k, v in sweep.calibrations.items()}, fh, indent=2)
            fh.write("\n")
    if not args.no_plots:
        from .plotting import capacitance_regression_figure, esr_regression_figure

        if spec.axis == "caps":
            capacitance_regression_figure(rows, sweep.regressions, out / "c_regression.png")
        else:
            esr_regression_figure(rows, sweep.regressions, out / "esr_regression.png", "esr_est_mohm")
            esr_regression_figure(rows, sweep.regressions, out / "esr_raw_regression.png", "esr_raw_mohm")

    if args.print:
        reports.write_table(sys.stdout, rows)
    for pr in sweep.failed:
        log.error("sweep point %d failed: %s", pr.point.index, pr.error)
    return EXIT_PARTIAL if sweep.failed else EXIT_OK


def cmd_monitor(args) -> int:
    cfg = _load(args)
    cal = _read_calibration(args.calibration)
    baseline = None
    if args.baseline:
        with open(args.baseline) as fh:
            baseline = HealthBaseline.from_dict(json.load(fh))
    thresholds = Thresholds(args.esr_warn, args.esr_alarm, args.c_warn, args.c_alarm)
    monitor = HealthMonitor(baseline, thresholds)

    directory = Path(args.directory)
    if not directory.is_dir():
        raise CliError(f"frame directory not found: {directory}", EXIT_CONFIG)
    paths = sorted(p for p in directory.iterdir() if p.is_file() and p.suffix == ".csv")
    skipped = 0
    frames, names = [], []
    for p in paths:
        try:
            frames.append(read_frame(p))
            names.append(p.name)
        except (FrameParseError, OSError) as exc:
            log.warning("skipping %s: %s", p.name, exc)
            skipped += 1
    est = _estimator(args, cfg, frames[0] if frames else None)

    with _output(args.out) as fh:
        for start in range(0, len(frames), args.batch_size):
            batch = frames[start:start + args.batch_size]
            if len(batch) < 2:
                log.warning("dropping trailing batch of %d frame(s)", len(batch))
                continue
            stats = run_batch(batch, cal, est)
            if monitor.baseline is None:
                monitor.baseline = HealthBaseline.from_stats(stats, f"first batch ({len(batch)} frames)")
                if args.save_baseline:
                    with open(args.save_baseline, "w") as bf:
                        json.dump(monitor.baseline.to_dict(), bf, indent=2)
            report = monitor.update(stats)
            record = {"batch": start // args.batch_size, "first_frame": names[start],
                      "n_frames": len(batch), **report.to_dict()}
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    if skipped:
        log.warning("%d frame file(s) skipped", skipped)
        return EXIT_CONFIG
    return EXIT_OK


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="noise seed (overrides the config)")
    common.add_argument("--out", help="output file, or directory for sweep")
    common.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="boostesr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="write one steady-state frame")
    p.add_argument("--noise", choices=sorted(NOISE_PROFILES))
    p.add_argument("--plot", help="also render the waveforms to this image file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="estimate parameters from one frame")
    p.add_argument("frame")
    p.add_argument("--calibration", help="calibration JSON from `calibrate`")
    p.add_argument("--v-in", type=float, dest="v_in")
    p.add_argument("--esr-denominator", choices=["load_current", "inductor_mean"])
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("calibrate", parents=[common], help="ESR offset from baseline frames")
    p.add_argument("frames", nargs="+")
    p.add_argument("--true-esr", type=float, required=True, help="known added ESR in ohms")
    p.add_argument("--v-in", type=float, dest="v_in")
    p.add_argument("--esr-denominator", choices=["load_current", "inductor_mean"])
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", parents=[common], help="ESR or capacitance sweep with statistics")
    p.add_argument("--axis", choices=["k", "esr", "caps"], default="k")
    p.add_argument("--values", help="comma list: resistor counts, ohms, or capacitor counts")
    p.add_argument("--caps", help="comma list of capacitor counts for ESR sweeps")
    p.add_argument("--n", type=int, default=20, help="acquisitions per point")
    p.add_argument("--noise", choices=sorted(NOISE_PROFILES))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-calibrate", action="store_true")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--print", action="store_true", help="echo the table to stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("monitor", parents=[common], help="health reports over a directory of frames")
    p.add_argument("directory")
    p.add_argument("--baseline", help="baseline JSON; default is the first batch")
    p.add_argument("--save-baseline")
    p.add_argument("--calibration")
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--v-in", type=float, dest="v_in")
    p.add_argument("--esr-warn", type=float, default=1.5)
    p.add_argument("--esr-alarm", type=float, default=2.0)
    p.add_argument("--c-warn", type=float, default=0.9)
    p.add_argument("--c-alarm", type=float, default=0.8)
    p.set_defaults(func=cmd_monitor)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (BoostEsrError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
