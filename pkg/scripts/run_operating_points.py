"""Calibrate every preset and print the operating-point tables.

This is the headline reproduction: per-transition modulation period,
detuning, flip probability, and nuclear Rabi frequency for the strong
3000 G regime and the two weak-field regimes.
"""

import argparse
import pathlib
import sys
import time

import numpy as np

from oner.atom import SR87
from oner.basis import format_half_integer
from oner.config import PRESETS
from oner.records import calibration_payload, display_value, emit_results, make_record
from oner.scan import calibrate_manifold


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", action="append", choices=sorted(PRESETS),
                        help="restrict to one preset; repeatable")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", type=pathlib.Path,
                        default=pathlib.Path("results"))
    args = parser.parse_args(argv)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name in args.preset or sorted(PRESETS):
        preset = PRESETS[name]
        t0 = time.time()
        points = calibrate_manifold(SR87, preset.drive,
                                    periods=np.arange(*preset.grid),
                                    workers=args.workers)
        print(f"\n=== {name}  ({time.time() - t0:.0f} s) ===")
        print(f"{'transition':>12} {'T_ns':>10} {'detuning_kHz':>13} "
              f"{'P':>9} {'rabi_kHz':>9}")
        for m_i in sorted(points):
            point = points[m_i]
            label = f"{format_half_integer(m_i)}:{format_half_integer(m_i + 1)}"
            if point is None:
                print(f"{label:>12} {'below fidelity floor':>30}")
                continue
            print(f"{label:>12} {display_value('period', point.drive.period):>10.3f} "
                  f"{display_value('detuning', point.drive.detuning):>13.1f} "
                  f"{point.probability:>9.6f} "
                  f"{display_value('rabi_peak', point.rabi):>9.2f}")
        record = make_record("calibration", {"preset": name},
                             calibration_payload(points), {})
        emit_results([(record, points)], "json",
                     str(args.out_dir / f"calibration_{name}.json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
