#!/usr/bin/env python3
"""Scan bias current and report where the coupling lands in its useful window.

For a current-biased junction shunted into a transmission line, prints the
plasma frequency, level splitting, and dimensionless coupling alpha along a
bias scan, then reports the bias range where alpha falls inside the window
(0.2 to 3.0 by default).
"""

import argparse
import warnings

from sbnrg.circuit import CircuitParams, map_to_spin_boson, qubit_spectrum


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c-j", type=float, default=0.85e-12)
    ap.add_argument("--c-0", type=float, default=4.25e-12)
    ap.add_argument("--i-0", type=float, default=2e-6)
    ap.add_argument("--line-l", type=float, default=4e-7)
    ap.add_argument("--line-c", type=float, default=1.6e-10)
    ap.add_argument("--omega-c", type=float, default=1e14)
    ap.add_argument("--convention", default="half_omega_p",
                    choices=["omega10", "half_omega_p"])
    ap.add_argument("--lo", type=float, default=0.80,
                    help="scan start as a fraction of i_0")
    ap.add_argument("--hi", type=float, default=0.999)
    ap.add_argument("--steps", type=int, default=25)
    ap.add_argument("--window", type=float, nargs=2, default=[0.2, 3.0])
    args = ap.parse_args(argv)

    print(f"{'i_b/i_0':>9} {'omega_p/2pi [GHz]':>18} "
          f"{'omega_10/2pi [GHz]':>19} {'delta':>11} {'alpha':>9}  window")
    in_window = []
    for k in range(args.steps):
        frac = args.lo + (args.hi - args.lo) * k / (args.steps - 1)
        p = CircuitParams(c_j=args.c_j, c_0=args.c_0, i_0=args.i_0,
                          i_b=frac * args.i_0, l=args.line_l, c=args.line_c)
        spec = qubit_spectrum(p)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sb = map_to_spin_boson(p, args.omega_c,
                                   delta_convention=args.convention,
                                   alpha_window=tuple(args.window))
        inside = args.window[0] <= sb.alpha <= args.window[1]
        if inside:
            in_window.append(frac)
        ghz = 1e-9 / (2.0 * 3.141592653589793)
        print(f"{frac:9.4f} {spec.omega_p * ghz:18.4f} "
              f"{spec.omega_10 * ghz:19.4f} {sb.delta:11.3e} "
              f"{sb.alpha:9.4f}  {'yes' if inside else '-'}")

    if in_window:
        print(f"\nalpha in [{args.window[0]}, {args.window[1]}] for "
              f"i_b/i_0 in [{min(in_window):.4f}, {max(in_window):.4f}] "
              f"(on this grid)")
    else:
        print("\nalpha never enters the window on this grid")


if __name__ == "__main__":
    main()
