"""Versioned result records and CSV/JSON emission.

A record is a plain-dict envelope: schema version, the resolved config
snapshot that produced it, a payload of JSON-native values, and
provenance (timestamps, integrator settings).  The determinism contract
lives in the payload: rebuilding a record from the same snapshot yields
bit-identical payload values, so only provenance may differ between
runs.

CSV is the plotting interchange; each payload kind has a fixed, documented
column set (see the ``*_csv`` functions).  Threshold tables render in the
customary display units (ns, mG, kHz, deg) at two significant figures,
with ``-`` for unachievable entries and ``>x`` for searches that ran into
their bound.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import json
import os
from typing import Iterable

import numpy as np

from .basis import ALL_STATES, format_half_integer
from .engine import Trajectory
from .scan import OperatingPoint, RabiEstimate, ScanCurve
from .stability import PERTURBABLE, ScatteringReport, Threshold, ToleranceReport

SCHEMA_VERSION = 1

#: display unit and multiplier from internal units, per perturbable parameter
DISPLAY_UNITS = {
    "period": ("ns", 1e3),
    "field": ("mG", 1e3),
    "rabi_peak": ("kHz", 1e3 / (2 * np.pi)),
    "angle": ("deg", 180.0 / np.pi),
    "detuning": ("kHz", 1e3 / (2 * np.pi)),
}


def display_value(parameter: str, value: float) -> float:
    return value * DISPLAY_UNITS[parameter][1]


def _two_sig(value: float) -> str:
    return np.format_float_positional(value, precision=2, unique=False,
                                      fractional=False, trim="-")


def display_threshold(threshold: Threshold) -> str:
    """Table cell: two significant figures, '-' dash, or '>bound'."""
    unit = DISPLAY_UNITS[threshold.parameter][1]
    if threshold.status == "not_achievable":
        return "-"
    if threshold.status == "exceeds_bound":
        return f">{_two_sig(threshold.bound * unit)}"
    return _two_sig(threshold.value * unit)


def make_record(kind: str, config: dict, payload: dict,
                provenance: dict | None = None) -> dict:
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "payload": payload,
        "provenance": {"created": stamp, **(provenance or {})},
    }


def record_to_json(record: dict) -> str:
    return json.dumps(record, indent=1, sort_keys=True)


def record_from_json(text: str) -> dict:
    record = json.loads(text)
    schema = record.get("schema")
    if schema != SCHEMA_VERSION:
        raise ValueError(f"unsupported record schema {schema!r}")
    return record


# ---------------------------------------------------------------- payloads

def trajectory_payload(traj: Trajectory) -> dict:
    return {
        "times_us": traj.times.tolist(),
        "populations": traj.populations.tolist(),
        "trace_drift": float(traj.trace_drift),
    }


def scan_payload(curve: ScanCurve) -> dict:
    return {
        "m_i": curve.m_i,
        "periods_us": curve.periods.tolist(),
        "probabilities": curve.probabilities.tolist(),
        "peaks": [peak.as_dict() for peak in curve.peaks],
    }


def operating_point_payload(point: OperatingPoint | None) -> dict | None:
    if point is None:
        return None
    return {
        "m_i": point.m_i,
        "drive": dataclasses.asdict(point.drive),
        "probability": point.probability,
        "flip_time_us": point.flip_time,
        "rabi": point.rabi,
    }


def calibration_payload(points: dict[float, OperatingPoint | None]) -> dict:
    return {
        "points": [operating_point_payload(points[m_i])
                   or {"m_i": m_i, "drive": None}
                   for m_i in sorted(points)],
    }


def operating_point_from_payload(entry: dict) -> OperatingPoint | None:
    from .atom import DriveParams

    if entry.get("drive") is None:
        return None
    return OperatingPoint(entry["m_i"], DriveParams(**entry["drive"]),
                          entry["probability"], entry["flip_time_us"],
                          entry["rabi"])


def rabi_payload(estimate: RabiEstimate) -> dict:
    return dataclasses.asdict(estimate)


def _threshold_payload(threshold: Threshold) -> dict:
    return {
        "parameter": threshold.parameter,
        "target": threshold.target,
        "status": threshold.status,
        "value": threshold.value,
        "bound": threshold.bound,
        "certified": threshold.certified,
        "probes": threshold.probes,
        "display": display_threshold(threshold),
    }


def tolerance_payload(report: ToleranceReport) -> dict:
    rows = []
    for key in sorted(report.thresholds):
        entry = _threshold_payload(report.thresholds[key])
        if report.layout == "per_transition":
            entry["m_i"] = key[0]
        rows.append(entry)
    return {
        "layout": report.layout,
        "targets": list(report.targets),
        "bounds": dict(report.bounds),
        "baseline": {format_half_integer(m): p
                     for m, p in sorted(report.baseline.items())},
        "thresholds": rows,
    }


def scattering_payload(report: ScatteringReport) -> dict:
    return dataclasses.asdict(report)


# ---------------------------------------------------------------- CSV

def trajectory_csv(traj: Trajectory, stream) -> None:
    """Columns: time_us, then one population per basis state (40)."""
    writer = csv.writer(stream)
    writer.writerow(["time_us"] + [
        f"p_{s.level}_mJ{s.m_j:+d}_mI{format_half_integer(s.m_i)}"
        for s in ALL_STATES])
    for t, row in zip(traj.times, traj.populations):
        writer.writerow([repr(float(t))] + [repr(float(p)) for p in row])


def scan_csv(curve: ScanCurve, stream) -> None:
    """Columns: T_ns, probability, peak (1 on grid points nearest a
    refined maximum, else 0)."""
    flags = np.zeros(len(curve.periods), dtype=int)
    for peak in curve.peaks:
        flags[int(np.argmin(np.abs(curve.periods - peak.period)))] = 1
    writer = csv.writer(stream)
    writer.writerow(["T_ns", "probability", "peak"])
    for period, probability, flag in zip(curve.periods, curve.probabilities,
                                         flags):
        writer.writerow([repr(float(period * 1e3)),
                         repr(float(probability)), int(flag)])


def calibration_csv(points: dict[float, OperatingPoint | None], stream) -> None:
    """One row per transition; '-' marks transitions with no usable peak."""
    writer = csv.writer(stream)
    writer.writerow(["transition", "detuning_kHz", "T_ns", "rabi_kHz",
                     "probability", "flip_time_us"])
    for m_i in sorted(points):
        label = (f"{format_half_integer(m_i)}:"
                 f"{format_half_integer(m_i + 1)}")
        point = points[m_i]
        if point is None:
            writer.writerow([label, "-", "-", "-", "-", "-"])
            continue
        writer.writerow([
            label,
            f"{display_value('detuning', point.drive.detuning):.6g}",
            f"{display_value('period', point.drive.period):.6g}",
            f"{display_value('rabi_peak', point.rabi):.6g}",
            f"{point.probability:.6f}",
            f"{point.flip_time:.4f}",
        ])


def tolerance_csv(report: ToleranceReport, stream) -> None:
    """Aggregated layout: one row per target, one column per parameter.
    Per-transition layout: one row per (transition, target)."""
    writer = csv.writer(stream)
    columns = [f"{p}_{DISPLAY_UNITS[p][0]}" for p in PERTURBABLE]
    if report.layout == "aggregated":
        writer.writerow(["target"] + columns)
        for target in report.targets:
            writer.writerow([repr(target)] + [
                display_threshold(report.threshold(p, target))
                for p in PERTURBABLE])
        return
    writer.writerow(["transition", "target"] + columns)
    transitions = sorted({key[0] for key in report.thresholds})
    for m_i in transitions:
        label = f"{format_half_integer(m_i)}:{format_half_integer(m_i + 1)}"
        for target in report.targets:
            writer.writerow([label, repr(target)] + [
                display_threshold(report.threshold(p, target, m_i=m_i))
                for p in PERTURBABLE])


_CSV_WRITERS = {
    "trajectory": trajectory_csv,
    "scan": scan_csv,
    "calibration": calibration_csv,
    "tolerance": tolerance_csv,
}


def emit_results(records: Iterable[tuple[dict, object]], fmt: str,
                 path: str) -> list[str]:
    """Write records; returns the paths written.

    ``records`` pairs each JSON envelope with its source object (needed
    for CSV, which renders from the object, not the payload).  JSON
    writes a single file holding the record list; CSV writes one file
    per record, suffixed ``_<index>_<kind>`` when there are several.
    Record kinds without a tabular form fall back to a JSON sidecar.
    """
    records = list(records)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump([record for record, _ in records], fh, indent=1,
                      sort_keys=True)
        return [path]
    if fmt != "csv":
        raise ValueError(f"unknown output format {fmt!r}")
    written = []
    stem, ext = os.path.splitext(path)
    ext = ext or ".csv"
    for index, (record, source) in enumerate(records):
        kind = record["kind"]
        suffix = "" if len(records) == 1 else f"_{index}_{kind}"
        writer = _CSV_WRITERS.get(kind)
        if writer is None:
            target = f"{stem}{suffix}.json"
            with open(target, "w") as fh:
                fh.write(record_to_json(record))
        else:
            target = f"{stem}{suffix}{ext}"
            with open(target, "w") as fh:
                writer(source, fh)
        written.append(target)
    return written
