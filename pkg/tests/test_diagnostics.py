import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from boostesr.diagnostics import HealthBaseline, HealthMonitor, Status, Thresholds, assess, classify
from boostesr.errors import InvalidParameterError, NotCalibratedError
from boostesr.estimator import EstimateStats


def _stats(esr, c):
    return EstimateStats(mean={"esr_est": esr, "c_est": c}, variance={"esr_est": 0.0, "c_est": 0.0},
                         n_acquisitions=20)


BASE = HealthBaseline(esr_0=0.040, c_0=165e-6)


def test_baseline_is_healthy():
    assert classify(1.0, 1.0) is Status.HEALTHY


def test_table_rows_40_to_106_is_end_of_life():
    report = assess(_stats(0.106, 165e-6), BASE)
    assert report.esr_ratio == pytest.approx(2.65)
    assert report.status is Status.END_OF_LIFE


def test_capacitance_drop_to_80_percent_hits_alarm():
    report = assess(_stats(0.040, 132e-6), BASE)
    assert report.c_ratio == pytest.approx(0.8)
    assert report.status is Status.END_OF_LIFE


def test_warning_band():
    assert assess(_stats(0.062, 165e-6), BASE).status is Status.DEGRADING
    assert assess(_stats(0.040, 145e-6), BASE).status is Status.DEGRADING


def test_end_of_life_implies_a_ratio_crossed():
    t = Thresholds()
    for esr in (0.03, 0.06, 0.09):
        for c in (120e-6, 140e-6, 165e-6):
            r = assess(_stats(esr, c), BASE, t)
            if r.status is Status.END_OF_LIFE:
                assert r.esr_ratio >= t.esr_alarm * (1 - 1e-9) or r.c_ratio <= t.c_alarm * (1 + 1e-9)


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.3, 1.2), st.floats(0.3, 1.2))
def test_monotone(e1, e2, c1, c2):
    lo_e, hi_e = sorted((e1, e2))
    lo_c, hi_c = sorted((c1, c2))
    assert classify(hi_e, hi_c) >= classify(lo_e, hi_c)
    assert classify(hi_e, lo_c) >= classify(hi_e, hi_c)


def test_table_sweep_severity_never_improves():
    # Table 1 estimated means, 99 uF bank
    monitor = HealthMonitor(HealthBaseline(0.040, 103e-6))
    seq = [monitor.update(_stats(e, 103e-6)).status for e in (0.040, 0.055, 0.078, 0.106, 0.202)]
    assert seq == sorted(seq)
    assert seq[0] is Status.HEALTHY and seq[-1] is Status.END_OF_LIFE


def test_trend_over_history():
    monitor = HealthMonitor(BASE)
    for i in range(5):
        report = monitor.update(_stats(0.040 + 0.01 * i, 165e-6))
    assert report.trend.slope == pytest.approx(0.01)
    assert report.trend.r_squared == pytest.approx(1.0)


def test_history_window_bounded():
    monitor = HealthMonitor(BASE, window=5)
    for i in range(12):
        monitor.update(_stats(0.04, 165e-6))
    assert len(monitor.history) == 5


def test_missing_baseline():
    with pytest.raises(NotCalibratedError):
        assess(_stats(0.04, 1e-4), None)
    with pytest.raises(NotCalibratedError):
        HealthMonitor().update(_stats(0.04, 1e-4))


def test_near_zero_baseline_uses_floor():
    report = assess(_stats(0.0012, 165e-6), HealthBaseline(1e-5, 165e-6))
    assert report.esr_ratio == pytest.approx(1.2)


def test_invalid_thresholds():
    with pytest.raises(InvalidParameterError):
        Thresholds(esr_warn=2.5, esr_alarm=2.0)
    with pytest.raises(InvalidParameterError):
        Thresholds(c_warn=0.7, c_alarm=0.8)


def test_report_json():
    data = json.loads(assess(_stats(0.05, 165e-6), BASE).to_json())
    assert data["status"] == "Healthy"
    assert set(data) == {"esr_ohm", "c_f", "esr_ratio", "c_ratio", "status", "trend"}
