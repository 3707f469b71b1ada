#!/usr/bin/env python3
"""Sweep the pointwise and mean identity residuals over grids and seeds.

Prints the worst relative residual per identity across the sweep; all of
them should sit at roundoff for band-limited random fields.

Example:
    python3 scripts/identity_sweep.py --sizes 16,32 --seeds 0,1,2
"""

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import vortexlab as vx  # noqa: E402
from vortexlab import spectral as spx  # noqa: E402


def band_limited_field(n, max_mode, seed):
    grid = vx.Grid(n)
    rng = np.random.default_rng(seed)
    ch = spx.to_spectral(grid, rng.standard_normal((3,) + grid.shape))
    ch = spx.spec_band_limit(grid, ch, max_mode)
    ch = spx.spec_project(grid, ch)
    ch[..., 0, 0, 0] = 0.0
    return vx.VectorField(grid, ch, "spectral")


def reports_for(u, nu):
    yield vx.residual_tr2(u)
    yield vx.residual_tr3(u)
    yield from vx.switched_invariant_residuals(u)
    yield vx.residual_grad_sw(u)
    yield vx.residual_pressure_hessian(u, vx.pressure_from_velocity(u))
    scalar = vx.ScalarField.spectral(u.grid, u.to_spectral().data[0])
    yield vx.gamma2_residual(u, scalar, nu)
    yield from vx.mean_identities(u)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,32",
                    help="comma-separated grid sizes")
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--nu", type=float, default=0.01)
    args = ap.parse_args()

    sizes = [int(tok) for tok in args.sizes.split(",")]
    seeds = [int(tok) for tok in args.seeds.split(",")]

    worst = defaultdict(float)
    for n in sizes:
        for seed in seeds:
            u = band_limited_field(n, n // 4, seed)
            for rep in reports_for(u, args.nu):
                worst[rep.name] = max(worst[rep.name], rep.relative)

    width = max(len(name) for name in worst)
    print(f"{len(sizes) * len(seeds)} fields, sizes {sizes}, seeds {seeds}")
    for name in sorted(worst):
        print(f"  {name:<{width}}  {worst[name]:.3e}")
    bad = [name for name, rel in worst.items() if rel > 1e-9]
    if bad:
        print(f"above 1e-9: {bad}")
        return 1
    print("all identities at roundoff")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
