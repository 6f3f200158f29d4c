"""Command-line surface: calibrate, scan, rabi, stability, convert.

Each subcommand reads an optional YAML config (see `config`), applies
flag overrides on top, runs the corresponding pipeline, prints a plain
table, and optionally writes records via `--out`.

Exit codes: 0 success; 1 input/config error; 2 numerical failure (no
requested transition produced a result, or the linear algebra broke);
3 partial results (some transitions failed, the rest were emitted).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np
import yaml

from .atom import AtomSpec
from .basis import format_half_integer, ground_index
from .config import ConfigError, PRESETS, RunConfig, config_snapshot, parse_config
from .engine import evolve, evolve_state
from .photometry import (SR87_PHOTOMETRY, beam_power, field_amplitude,
                         intensity_noise_to_rabi_noise, intensity_to_rabi,
                         rabi_to_intensity)
from .records import (DISPLAY_UNITS, calibration_payload, display_threshold,
                      display_value, emit_results, make_record, rabi_payload,
                      scan_payload, scattering_payload, tolerance_payload)
from .scan import (PROBE_OPTIONS, SCAN_OPTIONS, calibrate_manifold,
                   nuclear_rabi_frequency, peak_spacing_analysis,
                   scan_modulation_period)
from .stability import (PERTURBABLE, per_transition_tolerance_table,
                        scattering_estimate, tolerance_table)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_PARTIAL = 3


def _transition_label(m_i: float) -> str:
    return f"{format_half_integer(m_i)}:{format_half_integer(m_i + 1)}"


def _load_config(args) -> RunConfig:
    """Config file plus flag overrides, resolved through one parser."""
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    try:
        document = yaml.safe_load(text) or {}
    except yaml.YAMLError as err:
        raise ConfigError("", f"not parseable as YAML ({err})") from None
    if not isinstance(document, dict):
        raise ConfigError("", "config root must be a mapping")
    if args.preset:
        document["preset"] = args.preset
    drive = document.setdefault("drive", {}) if any(
        v is not None for v in (args.field_gauss, args.rabi_mhz,
                                args.angle_deg, args.window_us)) else None
    if args.field_gauss is not None:
        drive["field"] = f"{args.field_gauss} G"
    if args.rabi_mhz is not None:
        drive["rabi_peak"] = f"{args.rabi_mhz} MHz"
    if args.angle_deg is not None:
        drive["angle"] = f"{args.angle_deg} deg"
    if args.window_us is not None:
        drive["window"] = f"{args.window_us} us"
    if args.transition:
        document["transitions"] = list(args.transition)
    return parse_config(yaml.safe_dump(document))


def _provenance() -> dict:
    return {
        "scan_options": dataclasses.asdict(SCAN_OPTIONS),
        "probe_options": dataclasses.asdict(PROBE_OPTIONS),
    }


def _emit(args, records) -> None:
    if args.out:
        for path in emit_results(records, args.format, args.out):
            print(f"wrote {path}")


def _calibrate_points(cfg: RunConfig, workers: int = 1):
    return calibrate_manifold(cfg.atom, cfg.drive, cfg.transitions,
                              cfg.period_grid(), cfg.floor, workers=workers)


def _print_calibration(points) -> None:
    print(f"{'transition':>12} {'detuning_kHz':>14} {'T_ns':>10} "
          f"{'rabi_kHz':>9} {'P':>9} {'flip_us':>8}")
    for m_i in sorted(points):
        point = points[m_i]
        label = _transition_label(m_i)
        if point is None:
            print(f"{label:>12} {'no peak above the fidelity floor':>40}")
            continue
        print(f"{label:>12} "
              f"{display_value('detuning', point.drive.detuning):>14.1f} "
              f"{display_value('period', point.drive.period):>10.3f} "
              f"{display_value('rabi_peak', point.rabi):>9.2f} "
              f"{point.probability:>9.6f} {point.flip_time:>8.2f}")


def _partial_exit(points) -> int:
    missing = sum(1 for p in points.values() if p is None)
    if missing == len(points):
        return EXIT_NUMERICAL
    return EXIT_PARTIAL if missing else EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _load_config(args)
    points = _calibrate_points(cfg, args.workers)
    _print_calibration(points)
    record = make_record("calibration", config_snapshot(cfg),
                         calibration_payload(points), _provenance())
    _emit(args, [(record, points)])
    return _partial_exit(points)


def cmd_scan(args) -> int:
    cfg = _load_config(args)
    records, failed = [], []
    for m_i in cfg.transitions:
        try:
            curve = scan_modulation_period(cfg.atom, cfg.drive, m_i,
                                           cfg.period_grid())
        except np.linalg.LinAlgError as err:
            print(f"{_transition_label(m_i)}: propagation failed ({err})",
                  file=sys.stderr)
            failed.append(m_i)
            continue
        print(f"{_transition_label(m_i)}: {len(curve.peaks)} peak(s)")
        for peak in curve.peaks:
            print(f"    T = {peak.period * 1e3:9.3f} ns   "
                  f"P = {peak.probability:.6f}   "
                  f"rabi = {display_value('rabi_peak', peak.rabi):6.2f} kHz")
        comb = peak_spacing_analysis(curve)
        if comb is not None:
            print(f"    comb orders {comb.orders}, fundamental "
                  f"{comb.spacing * 1e3:.3f} ns, residual {comb.residual:.2e}")
        records.append((make_record("scan", config_snapshot(cfg),
                                    scan_payload(curve), _provenance()),
                        curve))
    _emit(args, records)
    if failed:
        return EXIT_NUMERICAL if not records else EXIT_PARTIAL
    return EXIT_OK


def cmd_rabi(args) -> int:
    cfg = _load_config(args)
    points = _calibrate_points(cfg, args.workers)
    records = []
    print(f"{'transition':>12} {'half_period_kHz':>16} {'fit_kHz':>9} "
          f"{'agrees':>7}")
    for m_i in sorted(points):
        point = points[m_i]
        if point is None:
            print(f"{_transition_label(m_i):>12} {'no flip found':>25}")
            continue
        state = np.zeros(40, dtype=complex)
        state[ground_index(m_i)] = 1.0
        traj = evolve_state(cfg.atom.without_decay(), point.drive, state,
                            PROBE_OPTIONS)
        estimate = nuclear_rabi_frequency(traj, ground_index(m_i + 1))
        if estimate is None:
            print(f"{_transition_label(m_i):>12} {'no flip found':>25}")
            continue
        fit = ("-" if estimate.fit_frequency is None
               else f"{display_value('rabi_peak', estimate.fit_frequency):.2f}")
        agrees = {None: "n/a", True: "yes", False: "NO"}[estimate.fit_agrees]
        print(f"{_transition_label(m_i):>12} "
              f"{display_value('rabi_peak', estimate.frequency):>16.2f} "
              f"{fit:>9} {agrees:>7}")
        payload = dict(rabi_payload(estimate), m_i=m_i)
        records.append((make_record("rabi", config_snapshot(cfg), payload,
                                    _provenance()), estimate))
    _emit(args, records)
    return _partial_exit(points)


def _print_tolerance(report) -> None:
    columns = [f"{p}_{DISPLAY_UNITS[p][0]}" for p in PERTURBABLE]
    if report.layout == "aggregated":
        print(f"{'target':>12} " + " ".join(f"{c:>14}" for c in columns))
        for target in report.targets:
            cells = [display_threshold(report.threshold(p, target))
                     for p in PERTURBABLE]
            print(f"{target:>12} " + " ".join(f"{c:>14}" for c in cells))
        return
    transitions = sorted({key[0] for key in report.thresholds})
    print(f"{'transition':>12} {'target':>7} "
          + " ".join(f"{c:>14}" for c in columns))
    for m_i in transitions:
        for target in report.targets:
            cells = [display_threshold(report.threshold(p, target, m_i=m_i))
                     for p in PERTURBABLE]
            print(f"{_transition_label(m_i):>12} {target:>7} "
                  + " ".join(f"{c:>14}" for c in cells))


def _scattering_rows(atom: AtomSpec, points) -> list:
    rows = []
    for m_i in sorted(points):
        point = points[m_i]
        if point is None:
            continue
        rho = np.zeros((40, 40), dtype=complex)
        k = ground_index(m_i)
        rho[k, k] = 1.0
        traj = evolve(atom, point.drive, rho, PROBE_OPTIONS)
        rows.append((m_i, scattering_estimate(traj, point.rabi,
                                              gamma=atom.gamma)))
    return rows


def cmd_stability(args) -> int:
    cfg = _load_config(args)
    points = _calibrate_points(cfg, args.workers)
    calibrated = {m: p for m, p in points.items() if p is not None}
    if not calibrated:
        print("no transition calibrated; nothing to perturb", file=sys.stderr)
        return EXIT_NUMERICAL
    _print_calibration(points)
    layouts = (("aggregated", "per_transition") if cfg.layout == "both"
               else (cfg.layout,))
    records = []
    for layout in layouts:
        if layout == "aggregated":
            try:
                report = tolerance_table(cfg.atom, calibrated,
                                         cfg.bounds_dict(),
                                         targets=cfg.targets)
            except ValueError as err:
                # aggregation is defined over the full manifold only
                print(f"aggregated layout unavailable: {err}",
                      file=sys.stderr)
                return EXIT_NUMERICAL if len(calibrated) < len(points) \
                    else EXIT_INPUT
        else:
            report = per_transition_tolerance_table(
                cfg.atom, calibrated, cfg.bounds_dict(), targets=cfg.targets)
        print(f"\n{layout} tolerance table "
              f"(bounds: " + ", ".join(
                  f"{p} {display_value(p, b):g} {DISPLAY_UNITS[p][0]}"
                  for p, b in cfg.bounds) + ")")
        _print_tolerance(report)
        violations = report.ordering_violations()
        if violations:
            print(f"ordering violations: {violations}", file=sys.stderr)
        records.append((make_record("tolerance", config_snapshot(cfg),
                                    tolerance_payload(report), _provenance()),
                        report))
    if args.scattering:
        print(f"\n{'transition':>12} {'P_exc_peak':>11} {'N_sc':>10} "
              f"{'within budget':>14}")
        scatter = _scattering_rows(cfg.atom, calibrated)
        for m_i, report in scatter:
            ok = "yes" if (report.excited_ok and report.scattering_ok) else "NO"
            print(f"{_transition_label(m_i):>12} {report.excited_peak:>11.5f} "
                  f"{report.photons_per_cycle:>10.6f} {ok:>14}")
        payload = {"per_transition": [
            dict(scattering_payload(r), m_i=m) for m, r in scatter]}
        records.append((make_record("scattering", config_snapshot(cfg),
                                    payload, _provenance()), scatter))
    _emit(args, records)
    return _partial_exit(points)


def cmd_convert(args) -> int:
    chosen = [v is not None for v in (args.rabi_mhz, args.intensity_w_cm2,
                                      args.intensity_noise)]
    if sum(chosen) != 1:
        print("convert needs exactly one of --rabi-mhz, --intensity-w-cm2, "
              "--intensity-noise", file=sys.stderr)
        return EXIT_INPUT
    waist = args.waist_um * 1e-6
    payload: dict
    if args.rabi_mhz is not None:
        if args.rabi_mhz < 0:
            print("--rabi-mhz must be non-negative", file=sys.stderr)
            return EXIT_INPUT
        rabi = 2 * np.pi * args.rabi_mhz
        intensity = rabi_to_intensity(rabi)
        payload = {
            "rabi_mhz": args.rabi_mhz,
            "field_amplitude_v_per_m": field_amplitude(rabi),
            "intensity_w_cm2": intensity,
            "waist_um": args.waist_um,
            "beam_power_w": beam_power(intensity, waist),
        }
        print(f"rabi {args.rabi_mhz} MHz -> {intensity:.4g} W/cm^2, "
              f"{payload['beam_power_w'] * 1e3:.4g} mW at "
              f"{args.waist_um:g} um waist")
    elif args.intensity_w_cm2 is not None:
        if args.intensity_w_cm2 < 0:
            print("--intensity-w-cm2 must be non-negative", file=sys.stderr)
            return EXIT_INPUT
        rabi = intensity_to_rabi(args.intensity_w_cm2)
        payload = {
            "intensity_w_cm2": args.intensity_w_cm2,
            "rabi_mhz": rabi / (2 * np.pi),
            "waist_um": args.waist_um,
            "beam_power_w": beam_power(args.intensity_w_cm2, waist),
        }
        print(f"{args.intensity_w_cm2} W/cm^2 -> rabi "
              f"{payload['rabi_mhz']:.4g} MHz")
    else:
        if args.intensity_noise < 0:
            print("--intensity-noise must be non-negative", file=sys.stderr)
            return EXIT_INPUT
        payload = {
            "relative_intensity_noise": args.intensity_noise,
            "relative_rabi_noise":
                intensity_noise_to_rabi_noise(args.intensity_noise),
        }
        print(f"relative intensity noise {args.intensity_noise} -> "
              f"relative rabi noise {payload['relative_rabi_noise']}")
    record = make_record("conversion", {}, payload,
                         {"dipole_cm": SR87_PHOTOMETRY.dipole})
    _emit(args, [(record, payload)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oner",
        description="Calibrate and stress-test modulated optical control "
                    "of the 87Sr nuclear spin qudit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config path")
    common.add_argument("--out", help="output path for result records")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--preset", choices=sorted(PRESETS),
                        help="base preset; flag overrides apply on top")
    common.add_argument("--field-gauss", type=float)
    common.add_argument("--rabi-mhz", type=float,
                        help="peak electronic Rabi frequency")
    common.add_argument("--angle-deg", type=float,
                        help="polarization angle against the bias field")
    common.add_argument("--window-us", type=float,
                        help="observation window")
    common.add_argument("--transition", action="append",
                        help="pair, written --transition=-9/2:-7/2 "
                             "(the = keeps the leading minus out of flag "
                             "parsing); repeatable")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel calibration processes")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("calibrate", parents=[common],
                   help="find Delta* and T* per transition").set_defaults(
        func=cmd_calibrate)
    sub.add_parser("scan", parents=[common],
                   help="flip probability across the period grid").set_defaults(
        func=cmd_scan)
    sub.add_parser("rabi", parents=[common],
                   help="nuclear Rabi frequency with sinusoid cross-fit"
                   ).set_defaults(func=cmd_rabi)
    stab = sub.add_parser("stability", parents=[common],
                          help="tolerance tables at the calibrated points")
    stab.add_argument("--scattering", action="store_true",
                      help="add the decay-inclusive scattering budget")
    stab.set_defaults(func=cmd_stability)

    conv = sub.add_parser("convert",
                          help="drive strength / intensity / power bridge")
    conv.add_argument("--rabi-mhz", type=float)
    conv.add_argument("--intensity-w-cm2", type=float)
    conv.add_argument("--intensity-noise", type=float,
                      help="relative intensity noise, e.g. 0.005")
    conv.add_argument("--waist-um", type=float, default=50.0)
    conv.add_argument("--out")
    conv.add_argument("--format", choices=("json", "csv"), default="json")
    conv.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as err:
        print(f"cannot read {err.filename}", file=sys.stderr)
        return EXIT_INPUT
    except np.linalg.LinAlgError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
