import csv
import io
import json

import numpy as np
import pytest

from oner.atom import DriveParams
from oner.engine import Trajectory
from oner.records import (
    SCHEMA_VERSION,
    calibration_csv,
    calibration_payload,
    display_threshold,
    display_value,
    emit_results,
    make_record,
    operating_point_from_payload,
    record_from_json,
    record_to_json,
    scan_csv,
    scan_payload,
    tolerance_csv,
    tolerance_payload,
    trajectory_csv,
)
from oner.scan import OperatingPoint, Peak, ScanCurve
from oner.stability import PERTURBABLE, Threshold, ToleranceReport


def _drive(**overrides):
    values = dict(field=3000.0, rabi_peak=2 * np.pi * 30.0, angle=1.0,
                  detuning=100.0, period=0.5, window=50.0)
    values.update(overrides)
    return DriveParams(**values)


def _trajectory(n=5):
    times = np.linspace(0.0, 50.0, n)
    populations = np.zeros((n, 40))
    populations[:, 0] = 1.0
    return Trajectory(times, populations, _drive())


def _curve():
    periods = np.array([0.49, 0.50, 0.51, 0.52])
    probabilities = np.array([0.2, 0.9, 0.99, 0.3])
    peaks = [Peak(period=0.5104, probability=0.9991, flip_time=12.0,
                  rabi=np.pi / 12.0)]
    return ScanCurve(-4.5, periods, probabilities, peaks, _drive())


def _report(layout="aggregated"):
    thresholds = {}
    for parameter in PERTURBABLE:
        thresholds[(parameter, 0.999)] = Threshold(
            parameter, 0.999, 0.01, "ok", 1.0, True, 10)
        thresholds[(parameter, 0.99)] = Threshold(
            parameter, 0.99, None, "exceeds_bound", 1.0, True, 3)
    if layout == "per_transition":
        thresholds = {(-4.5, p, t): thr
                      for (p, t), thr in thresholds.items()}
    return ToleranceReport(layout, (0.999, 0.99), {p: 1.0 for p in PERTURBABLE},
                           thresholds, {-4.5: 0.9995})


def test_display_values():
    assert display_value("period", 0.5) == pytest.approx(500.0)       # ns
    assert display_value("field", 0.3) == pytest.approx(300.0)        # mG
    assert display_value("rabi_peak", 2 * np.pi * 0.03) == pytest.approx(30.0)
    assert display_value("angle", np.pi / 2) == pytest.approx(90.0)
    assert display_value("detuning", 2 * np.pi * 0.5) == pytest.approx(500.0)


def test_display_threshold_rendering():
    ok = Threshold("field", 0.99, 0.2437, "ok", 30.0, True, 9)
    assert display_threshold(ok) == "240"
    dash = Threshold("field", 0.999, None, "not_achievable", 30.0, False, 1)
    assert display_threshold(dash) == "-"
    capped = Threshold("field", 0.99, 1.0, "exceeds_bound", 1.0, True, 3)
    assert display_threshold(capped) == ">1000"


def test_record_envelope_and_round_trip():
    record = make_record("scan", {"a": 1}, {"b": [1.5]}, {"note": "x"})
    assert record["schema"] == SCHEMA_VERSION
    back = record_from_json(record_to_json(record))
    assert back == record
    assert "created" in back["provenance"]


def test_record_schema_check():
    record = make_record("scan", {}, {})
    record["schema"] = 99
    with pytest.raises(ValueError):
        record_from_json(record_to_json(record))


def test_trajectory_csv_columns():
    stream = io.StringIO()
    trajectory_csv(_trajectory(), stream)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert len(rows[0]) == 41
    assert rows[0][0] == "time_us"
    # nuclear projections run descending, so +9/2 heads each manifold
    assert rows[0][1] == "p_1S0_mJ+0_mI9/2"
    assert rows[0][-1] == "p_3P1_mJ+1_mI-9/2"
    assert len(rows) == 6
    assert float(rows[1][1]) == 1.0


def test_scan_csv_peak_flag():
    stream = io.StringIO()
    scan_csv(_curve(), stream)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert rows[0] == ["T_ns", "probability", "peak"]
    flags = [int(row[2]) for row in rows[1:]]
    # refined peak at 510.4 ns flags the 510 ns grid point
    assert flags == [0, 0, 1, 0]
    assert float(rows[3][0]) == pytest.approx(510.0)


def test_calibration_csv_handles_missing():
    point = OperatingPoint(-4.5, _drive(), 0.9995, 15.0, 2 * np.pi * 0.03)
    stream = io.StringIO()
    calibration_csv({-4.5: point, -3.5: None}, stream)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert rows[1][0] == "-9/2:-7/2"
    assert rows[2] == ["-7/2:-5/2", "-", "-", "-", "-", "-"]


def test_tolerance_csv_layouts():
    stream = io.StringIO()
    tolerance_csv(_report(), stream)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert rows[0][0] == "target" and len(rows) == 3
    # 0.01 internal units per parameter: 10 ns, 10 mG, 1.6 kHz, 0.57 deg
    assert rows[1][1:] == ["10", "10", "1.6", "0.57", "1.6"]
    assert rows[2][1] == ">1000"         # capped cells render the bound

    stream = io.StringIO()
    tolerance_csv(_report("per_transition"), stream)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert rows[0][:2] == ["transition", "target"]
    assert rows[1][0] == "-9/2:-7/2"


def test_tolerance_payload_round_trips_through_json():
    payload = tolerance_payload(_report())
    back = json.loads(json.dumps(payload))
    assert back == payload
    assert back["layout"] == "aggregated"
    assert len(back["thresholds"]) == 10
    assert back["baseline"]["-9/2"] == 0.9995


def test_calibration_payload_round_trip():
    point = OperatingPoint(-4.5, _drive(), 0.9995, 15.0, 2 * np.pi * 0.03)
    payload = calibration_payload({-4.5: point, -3.5: None})
    back = json.loads(json.dumps(payload))
    restored = operating_point_from_payload(back["points"][0])
    assert restored == point
    assert operating_point_from_payload(back["points"][1]) is None


def test_payload_determinism():
    a = scan_payload(_curve())
    b = scan_payload(_curve())
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_emit_results_json_and_csv(tmp_path):
    curve = _curve()
    record = make_record("scan", {}, scan_payload(curve))
    json_path = tmp_path / "out.json"
    written = emit_results([(record, curve)], "json", str(json_path))
    assert written == [str(json_path)]
    load = json.loads(json_path.read_text())
    assert load[0]["kind"] == "scan"

    csv_path = tmp_path / "out.csv"
    written = emit_results([(record, curve)], "csv", str(csv_path))
    assert written == [str(csv_path)]
    assert csv_path.read_text().startswith("T_ns,")

    # several records get distinguishing suffixes
    written = emit_results([(record, curve), (record, curve)], "csv",
                           str(csv_path))
    assert len(written) == 2 and written[0] != written[1]

    with pytest.raises(ValueError):
        emit_results([(record, curve)], "tsv", str(csv_path))


def test_emit_results_json_sidecar_for_tableless_kind(tmp_path):
    record = make_record("conversion", {}, {"rabi_mhz": 20.0})
    written = emit_results([(record, None)], "csv", str(tmp_path / "x.csv"))
    assert written[0].endswith(".json")
    assert json.loads(open(written[0]).read())["kind"] == "conversion"
