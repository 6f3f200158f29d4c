"""Extended period scan: the equidistant multi-photon peak comb.

Scans well past the first flip resonance so the higher-order peaks at
T_n = n * T_1 show up, then fits the comb and prints the implied
ground-pair splitting per order.
"""

import argparse
import pathlib
import sys

import numpy as np

from oner.atom import SR87
from oner.basis import format_half_integer
from oner.config import PRESETS
from oner.records import display_value, emit_results, make_record, scan_payload
from oner.scan import peak_spacing_analysis, scan_modulation_period

TWO_PI = 2 * np.pi


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", choices=sorted(PRESETS), default="3000G")
    parser.add_argument("--transition", action="append", type=float,
                        help="lower m_I of the pair, e.g. -4.5; repeatable")
    parser.add_argument("--stop-us", type=float,
                        help="scan end; the default reaches past order three")
    parser.add_argument("--step-ns", type=float, default=4.0)
    parser.add_argument("--out-dir", type=pathlib.Path,
                        default=pathlib.Path("results"))
    args = parser.parse_args(argv)

    preset = PRESETS[args.preset]
    stop = args.stop_us if args.stop_us is not None else 3.3 * preset.grid[1]
    grid = np.arange(0.8 * preset.grid[0], stop, args.step_ns * 1e-3)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for m_i in args.transition or (-4.5, 3.5):
        label = format_half_integer(m_i)
        curve = scan_modulation_period(SR87, preset.drive, m_i, grid)
        print(f"\n{label}:{format_half_integer(m_i + 1)}  "
              f"{len(curve.peaks)} peaks")
        for peak in curve.peaks:
            print(f"  T = {display_value('period', peak.period):9.3f} ns  "
                  f"P = {peak.probability:.6f}  "
                  f"rabi = {display_value('rabi_peak', peak.rabi):6.2f} kHz")
        structure = peak_spacing_analysis(curve)
        if structure is None:
            print("  too few peaks for a comb fit")
        else:
            print(f"  orders {structure.orders}, spacing "
                  f"{display_value('period', structure.spacing):.3f} ns, "
                  f"splitting {structure.energy_gap / TWO_PI * 1e3:.2f} kHz, "
                  f"residual {structure.residual:.4f}")
        records.append((make_record("scan", {"preset": args.preset},
                                    scan_payload(curve), {}), curve))
    emit_results(records, "json",
                 str(args.out_dir / f"peak_comb_{args.preset}.json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
