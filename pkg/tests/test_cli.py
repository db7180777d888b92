import csv
import json
from pathlib import Path

import pytest

from boostesr.cli import main
from boostesr.estimator import linear_regression
from boostesr.frame import read_frame, write_frame
from boostesr.reports import read_table

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _config(tmp_path, **overrides):
    data = json.loads((CONFIGS / "bench.json").read_text())
    for key, value in overrides.items():
        section, _, field = key.partition("__")
        if field:
            data.setdefault(section, {})[field] = value
        else:
            data[section] = value
    path = tmp_path / f"cfg_{len(list(tmp_path.glob('cfg_*')))}.json"
    path.write_text(json.dumps(data))
    return str(path)


def _rows(path_or_text):
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else path_or_text
    return list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))


def test_simulate_writes_200_rows(tmp_path):
    out = tmp_path / "frame.csv"
    assert main(["simulate", "--config", str(CONFIGS / "design.json"), "--out", str(out)]) == 0
    frame = read_frame(out)
    assert len(frame) == 200
    assert frame.sample_rate == 2e6


def test_simulate_missing_config(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["simulate", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_simulate_seed_is_deterministic(tmp_path):
    cfg = _config(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", cfg, "--seed", "7", "--out", str(a)])
    main(["simulate", "--config", cfg, "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_simulate_plot(tmp_path):
    png = tmp_path / "wave.png"
    main(["simulate", "--out", str(tmp_path / "f.csv"), "--plot", str(png)])
    assert png.stat().st_size > 1000


def test_estimate_noiseless_frame(tmp_path, capsys):
    frame = tmp_path / "f.csv"
    main(["simulate", "--config", str(CONFIGS / "design.json"), "--out", str(frame)])
    capsys.readouterr()
    assert main(["estimate", str(frame)]) == 0
    (row,) = _rows(capsys.readouterr().out)
    assert float(row["r_load_ohm"]) == pytest.approx(20.0, rel=1e-3)
    assert float(row["l_uh"]) == pytest.approx(240.0, rel=1e-3)
    assert float(row["c_uf"]) == pytest.approx(160.0, rel=0.02)


def test_estimate_rejects_dcm_frame(tmp_path, design_frame, capsys):
    path = tmp_path / "dcm.csv"
    write_frame(design_frame.with_channels(i_l=design_frame.i_l - 1.0), path)
    assert main(["estimate", str(path), "--v-in", "12"]) == 3
    assert "DiscontinuousConduction" in capsys.readouterr().err


def test_estimate_parse_error_exit(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_s,i_l_a\n0,1\n")
    assert main(["estimate", str(path)]) == 2


def test_calibrate_then_estimate(tmp_path, capsys):
    cfg = _config(tmp_path)
    frames = []
    for seed in (1, 2, 3):
        f = tmp_path / f"base{seed}.csv"
        main(["simulate", "--config", cfg, "--seed", str(seed), "--out", str(f)])
        frames.append(str(f))
    cal = tmp_path / "cal.json"
    assert main(["calibrate", *frames, "--true-esr", "0.04", "--config", cfg, "--out", str(cal)]) == 0
    offset = json.loads(cal.read_text())["esr_offset"]
    assert json.loads(cal.read_text())["derived_from"] == 3
    capsys.readouterr()
    main(["estimate", frames[0]])
    raw = float(_rows(capsys.readouterr().out)[0]["esr_est_mohm"])
    main(["estimate", frames[0], "--calibration", str(cal)])
    row = _rows(capsys.readouterr().out)[0]
    assert float(row["esr_est_mohm"]) == pytest.approx(raw - offset * 1e3, rel=1e-12)
    assert float(row["esr_entered_mohm"]) == pytest.approx(40.0)


def test_sweep_outputs_and_external_regression(tmp_path):
    out = tmp_path / "sweep"
    cfg = _config(tmp_path)
    assert main(["sweep", "--config", cfg, "--axis", "k", "--n", "4", "--out", str(out)]) == 0
    for name in ("table.csv", "estimates.csv", "regression.json", "calibration.json",
                 "esr_regression.png", "esr_raw_regression.png"):
        assert (out / name).exists(), name
    rows = read_table(out / "table.csv")
    blocks = json.loads((out / "regression.json").read_text())
    for quantity in ("esr_est_mohm", "esr_raw_mohm"):
        block = next(b for b in blocks if b["quantity"] == quantity)
        fit = linear_regression([r["esr_entered_mohm"] for r in rows], [r[f"{quantity}_mean"] for r in rows])
        assert fit.slope == pytest.approx(block["slope"], abs=1e-9)
        assert fit.intercept == pytest.approx(block["intercept"], abs=1e-9)
    est_lines = (out / "estimates.csv").read_text().splitlines()
    assert est_lines[0] == "run_id,esr_entered_mohm,esr_est_mohm,r_load_ohm,c_uf,l_uh"
    assert sum(line.startswith("# stats") for line in est_lines) == 5
    assert len(_rows(out / "estimates.csv")) == 20


def test_sweep_byte_reproducible(tmp_path):
    cfg = _config(tmp_path)
    for name in ("a", "b"):
        main(["sweep", "--config", cfg, "--axis", "caps", "--values", "1,5", "--n", "3",
              "--seed", "4", "--no-plots", "--out", str(tmp_path / name)])
    for name in ("table.csv", "estimates.csv", "regression.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_partial_failure_exit(tmp_path):
    cfg = _config(tmp_path, converter__l=20e-6, converter__r_load=200.0)
    assert main(["sweep", "--config", cfg, "--axis", "caps", "--values", "1,2", "--n", "2",
                 "--no-plots", "--out", str(tmp_path / "s")]) == 4
    assert (tmp_path / "s" / "table.csv").exists()


def _stream(tmp_path, cfg, ks, per_batch=2):
    stream = tmp_path / "stream"
    stream.mkdir(exist_ok=True)
    n = 0
    for k in ks:
        c = _config(tmp_path, degradation={"n_parallel_esr_resistors": k, "n_parallel_caps": 3},
                    noise_profile="ideal")
        for _ in range(per_batch):
            main(["simulate", "--config", c, "--out", str(stream / f"frame_{n:04d}.csv")])
            n += 1
    return stream


def test_monitor_tracks_degradation(tmp_path, capsys):
    cfg = _config(tmp_path, noise_profile="ideal")
    stream = _stream(tmp_path, cfg, [5, 4, 3, 2, 1])
    cal = tmp_path / "cal.json"
    main(["calibrate", str(stream / "frame_0000.csv"), str(stream / "frame_0001.csv"),
          "--true-esr", "0.04", "--out", str(cal)])
    capsys.readouterr()
    assert main(["monitor", str(stream), "--batch-size", "2", "--calibration", str(cal)]) == 0
    reports = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    statuses = [r["status"] for r in reports]
    assert statuses == ["Healthy", "Healthy", "Degrading", "EndOfLife", "EndOfLife"]
    assert reports[-1]["trend"]["slope"] > 0


def test_monitor_constant_health(tmp_path, capsys):
    stream = _stream(tmp_path, None, [4, 4, 4])
    capsys.readouterr()
    assert main(["monitor", str(stream), "--batch-size", "2"]) == 0
    reports = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert {r["status"] for r in reports} == {"Healthy"}
    assert reports[-1]["trend"]["slope"] == pytest.approx(0.0, abs=1e-12)


def test_monitor_empty_directory(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["monitor", str(tmp_path / "empty")]) == 0
    assert capsys.readouterr().out == ""


def test_monitor_skips_bad_frames(tmp_path, capsys):
    stream = _stream(tmp_path, None, [5])
    (stream / "frame_zzzz.csv").write_text("garbage\n1,2\n")
    capsys.readouterr()
    code = main(["monitor", str(stream), "--batch-size", "2"])
    assert code == 2
    assert len(capsys.readouterr().out.splitlines()) == 1
