"""Regenerate the tolerance tables for all three operating regimes.

Aggregated layout (minimum fidelity over the manifold) at 3000 G,
per-transition layout at 1000 G and 1500 G.  Expect roughly fifteen
minutes of single-core time end to end; most of it is the bisections.
"""

import argparse
import pathlib
import sys
import time

import numpy as np

from oner.atom import SR87
from oner.config import PRESETS
from oner.records import emit_results, make_record, tolerance_payload
from oner.scan import calibrate_manifold
from oner.stability import per_transition_tolerance_table, tolerance_table

REGIMES = {
    "3000G": "aggregated",
    "1000G": "per_transition",
    "1500G": "per_transition",
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", action="append", choices=sorted(REGIMES))
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", type=pathlib.Path,
                        default=pathlib.Path("results"))
    args = parser.parse_args(argv)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name in args.preset or sorted(REGIMES):
        preset = PRESETS[name]
        layout = REGIMES[name]
        t0 = time.time()
        points = calibrate_manifold(SR87, preset.drive,
                                    periods=np.arange(*preset.grid),
                                    workers=args.workers)
        missing = [m for m, p in points.items() if p is None]
        if missing:
            print(f"{name}: no operating point for {missing}; skipping",
                  file=sys.stderr)
            continue
        build = (tolerance_table if layout == "aggregated"
                 else per_transition_tolerance_table)
        report = build(SR87, points, preset.bounds, workers=args.workers)
        print(f"{name} ({layout}): {len(report.thresholds)} thresholds "
              f"in {time.time() - t0:.0f} s; ordering violations "
              f"{report.ordering_violations()}")
        record = make_record("tolerance", {"preset": name},
                             tolerance_payload(report), {})
        out = args.out_dir / f"tolerance_{name}.json"
        emit_results([(record, report)], "json", str(out))
        emit_results([(record, report)], "csv",
                     str(out.with_suffix(".csv")))
    return 0


if __name__ == "__main__":
    sys.exit(main())
