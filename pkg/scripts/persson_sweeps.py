"""Persson exhaustion sweeps on the hyperbolic, flat and Andrade patches."""

import argparse
import math

import numpy as np

from speclab.spectrum import ball_region, persson_sweep, strip_region
from speclab.surfaces import AndradeParams, andrade_surface, flat_disk, hyperbolic_disk


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--which", choices=["hyperbolic", "flat", "andrade", "all"], default="all")
    ap.add_argument("--eps", type=float, default=0.01, help="hyperbolic truncation")
    args = ap.parse_args()
    np.set_printoptions(precision=4, suppress=True)

    if args.which in ("hyperbolic", "all"):
        eps = args.eps
        K = [ball_region(0, 1 - eps - 2.0**-l) for l in range(9)]
        sw = persson_sweep(hyperbolic_disk(eps), 1 / 512, K)
        # compact truncation: the l=0 value is close to 1/4 + pi^2/log(2/eps)^2
        print("hyperbolic lambda*:", sw.values)
        print("  1/4 + pi^2/log(2/eps)^2 =", 0.25 + math.pi**2 / math.log(2 / eps) ** 2)
    if args.which in ("flat", "all"):
        K = [None] + [ball_region(0, 1 - 2.0**-l) for l in range(1, 7)]
        print("flat disk lambda*:", persson_sweep(flat_disk(1.0), 2 / 511, K).values)
    if args.which in ("andrade", "all"):
        patch = andrade_surface(AndradeParams(1.0, math.sqrt(3.0)), 1.0, 40.0)
        sw = persson_sweep(patch, 1 / 32, [strip_region(l) for l in range(0, 37, 4)])
        print("Andrade lambda*:", sw.values)


if __name__ == "__main__":
    main()
