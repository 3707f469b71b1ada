#!/usr/bin/env python3
"""Tabulate drift-kernel sandwich slacks over a Reynolds / delta grid.

For each (Re, delta) pair the exact constant-drift kernel is bracketed
by the p^{-sigma} and p^{+sigma} product envelopes; the table shows the
worst absolute slack (negative would mean a violated bound).  Optionally
follows up with a Monte Carlo consistency pass at the chosen pair.

Example:
    python3 scripts/kernel_sweep.py --mc --samples 50000
"""

import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vortexlab import heatkernel as hk  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reynolds", default="10,100,1000")
    ap.add_argument("--deltas", default="1e-3,1e-2,1e-1")
    ap.add_argument("--drift", default="1,1,1",
                    help="constant drift components, each in [-1, 1]")
    ap.add_argument("--mc", action="store_true",
                    help="run the Monte Carlo check at the last (Re, delta)")
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    res = [float(tok) for tok in args.reynolds.split(",")]
    deltas = [float(tok) for tok in args.deltas.split(",")]
    drift = tuple(float(tok) for tok in args.drift.split(","))

    print(f"drift {drift}")
    print(f"{'Re':>8} {'delta':>8} {'sigma':>8} {'min slack':>12} "
          f"{'kernel max':>12}")
    ok = True
    for re in res:
        sigma = math.sqrt(re / 2.0)
        for delta in deltas:
            rep = hk.kernel_bounds_check(sigma, delta, drift)
            ok = ok and rep.passed
            print(f"{re:8.0f} {delta:8.3f} {sigma:8.3f} "
                  f"{rep.min_slack:12.3e} {rep.kernel_max:12.3e}")

    if args.mc:
        sigma = math.sqrt(res[-1] / 2.0)
        rep = hk.monte_carlo_kernel_check(sigma, deltas[-1], drift,
                                          samples=args.samples,
                                          seed=args.seed)
        print(f"\nMonte Carlo: {rep.samples} samples, "
              f"{rep.violating_cells}/{rep.cells} cells beyond 3 SE", end="")
        if rep.chi2_p_value is not None:
            print(f", chi2 p = {rep.chi2_p_value:.3f}")
        else:
            print()
        ok = ok and rep.violating_cells == 0

    print("bounds hold" if ok else "BOUND VIOLATION")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
