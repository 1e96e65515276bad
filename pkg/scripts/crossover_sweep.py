#!/usr/bin/env python3
"""Sweep alpha at fixed tunneling, extract crossover scales, fit alpha_c.

Produces a CSV of (alpha, n_star) points, a JSON fit summary, and one flow
CSV per alpha holding the rescaled level-1 trajectory. The defaults mirror
the flow-diagram regime (delta = 3e-5, alpha in 0.50..0.75) and finish in
about a minute.
"""

import argparse
import csv
import json
from pathlib import Path

from sbnrg.circuit import SpinBosonParams
from sbnrg.criticality import NoCrossingError, extract_nstar, fit_alpha_c
from sbnrg.nrg import NrgConfig, run
from sbnrg.numerics import FitError


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=3e-5)
    ap.add_argument("--alphas", type=float, nargs="+",
                    default=[0.50, 0.55, 0.60, 0.65, 0.70, 0.75])
    ap.add_argument("--n-iter", type=int, default=60)
    ap.add_argument("--n-s", type=int, default=100)
    ap.add_argument("--n-b", type=int, default=6)
    ap.add_argument("--threshold", type=float, default=0.3)
    ap.add_argument("--out", type=Path, default=Path("crossover_out"))
    args = ap.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    cfg = NrgConfig(n_s=args.n_s, n_b=args.n_b, n_iter=args.n_iter)
    points = []
    for alpha in args.alphas:
        res = run(SpinBosonParams(delta=args.delta, alpha=alpha), cfg)
        iters, vals = res.flow.level_series(1)
        with open(args.out / f"flow_alpha_{alpha:.4f}.csv", "w",
                  newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "level1_rescaled"])
            for it, v in zip(iters, vals):
                w.writerow([it, "%.15e" % v])
        try:
            point = extract_nstar(res.flow, threshold=args.threshold)
        except NoCrossingError as exc:
            print(f"alpha = {alpha:.3f}   no crossing ({exc}); "
                  f"raise --n-iter")
            continue
        points.append(point)
        print(f"alpha = {alpha:.3f}   N* = {point.n_star:.4f}")

    with open(args.out / "nstar.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "n_star", "threshold"])
        for p in points:
            w.writerow(["%.15e" % p.alpha, "%.15e" % p.n_star,
                        "%.15e" % p.threshold])

    summary = {"delta": args.delta, "threshold": args.threshold}
    try:
        fit = fit_alpha_c(points)
        summary["fit"] = {"a": fit.a, "b": fit.b, "alpha_c": fit.alpha_c,
                          "rss": fit.rss}
        print(f"fit: N* = {fit.a:.3f} + {fit.b:.3f}/(alpha_c - alpha), "
              f"alpha_c = {fit.alpha_c:.4f}")
    except FitError as exc:
        summary["fit_error"] = str(exc)
        print(f"fit rejected: {exc}")
    (args.out / "fit.json").write_text(json.dumps(summary, indent=2))
    print(f"wrote {args.out}/")


if __name__ == "__main__":
    main()
