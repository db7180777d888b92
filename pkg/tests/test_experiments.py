import json

import pytest

from boostesr.config import ExperimentConfig, config_from_dict, config_to_dict, load_config, sim_config
from boostesr.errors import InvalidDegradationError, InvalidParameterError
from boostesr.experiments import ExperimentSpec, regressions, run_sweep, table_rows
from boostesr.sim import DegradationState
from helpers import params


def test_config_round_trip(tmp_path):
    cfg = config_from_dict({
        "converter": {"v_in": 12.0, "l": 240e-6, "c": 99e-6, "esr": 0.0, "r_track": 0.05,
                      "r_load": 20.0, "f_sw": 1e4, "duty": 0.4},
        "noise_profile": "hardware_ac",
        "sim": {"seed": 3},
        "degradation": {"n_parallel_esr_resistors": 5, "n_parallel_caps": 3},
    })
    assert cfg.params.esr == pytest.approx(0.04)
    assert cfg.params.r_track == pytest.approx(0.05 / 3)
    assert cfg.sim.ac_stage["v_c"].gain == 8.0
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config_to_dict(cfg)))
    again = load_config(path)
    assert again.params == cfg.params
    assert again.sim == cfg.sim


@pytest.mark.parametrize("bad", [
    {"converter": {"v_in": 12.0}},
    {"converter": {"v_in": 12, "l": 1e-4, "c": 1e-4, "esr": 0, "r_load": 20, "f_sw": 1e4, "duty": 0.4,
                   "inductance": 3}},
    {"sim": {"adc_bitz": 12}},
    {"noise_profile": "lab"},
    {"degradation": {"n_parallel_esr_resistors": 9, "n_parallel_caps": 3}},
    {"extra": {}},
])
def test_config_rejects(bad):
    with pytest.raises((InvalidParameterError, InvalidDegradationError)):
        config_from_dict(bad)


def _cfg(profile="ideal", r_track=0.0, seed=1):
    return ExperimentConfig(base=params(c=99e-6, r_track=r_track), sim=sim_config(profile, seed=seed),
                            degradation=DegradationState(5, 3))


def test_k_sweep_points():
    spec = ExperimentSpec(_cfg(), "k", (5, 4, 3, 2, 1), caps=(3, 5))
    pts = spec.points()
    assert len(pts) == 10
    assert [round(p.esr_entered * 1e3, 3) for p in pts[:5]] == [40.0, 50.0, 66.667, 100.0, 200.0]
    assert pts[5].c_entered == pytest.approx(165e-6)


def test_ideal_sweep_calibrated_on_first_point():
    spec = ExperimentSpec(_cfg(), "esr", (0.04, 0.1, 0.2), n_acquisitions=2)
    sweep = run_sweep(spec)
    rows = table_rows(sweep)
    assert rows[0]["esr_est_mohm_mean"] == pytest.approx(40.0, abs=1e-9)
    for row in rows:
        assert row["esr_est_mohm_mean"] == pytest.approx(row["esr_entered_mohm"], rel=0.05)
        assert row["esr_est_mohm_std"] == 0.0
    fit = next(r for r in sweep.regressions if r["quantity"] == "esr_est_mohm")
    assert 0.95 < fit["slope"] < 1.05


def test_sweep_is_seed_reproducible_and_job_independent():
    spec = ExperimentSpec(_cfg("hardware"), "k", (5, 1), n_acquisitions=3)
    a = table_rows(run_sweep(spec, seed=9))
    b = table_rows(run_sweep(spec, seed=9, jobs=2))
    assert a == b
    c = table_rows(run_sweep(spec, seed=10))
    assert a != c


def test_failed_point_is_recorded():
    # light load on a small inductor runs discontinuous
    cfg = ExperimentConfig(base=params(l=20e-6, r_load=200.0), sim=sim_config("ideal"))
    sweep = run_sweep(ExperimentSpec(cfg, "caps", (1, 3), n_acquisitions=2))
    assert len(sweep.failed) == 2
    assert "DiscontinuousConduction" in sweep.failed[0].error


def test_caps_sweep_regression():
    spec = ExperimentSpec(_cfg(), "caps", (1, 3, 5), n_acquisitions=2)
    sweep = run_sweep(spec)
    (fit,) = regressions(sweep)
    assert fit["quantity"] == "c_uf"
    assert fit["slope"] == pytest.approx(1.0, rel=0.01)


def test_bad_axis():
    with pytest.raises(InvalidParameterError):
        ExperimentSpec(_cfg(), "temperature", (1,))
