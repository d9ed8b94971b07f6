"""Gauge-measure verdicts for a segment, a square and the Andrade limit set."""

import math

import numpy as np

from speclab.hausdorff import Gauge, measure_limit, packing_lower_bound
from speclab.surfaces import AndradeParams, andrade_solid_volume, andrade_surface


def show(name, rep):
    print(f"{name}: sums {np.array2string(rep.sums, precision=4)} "
          f"rate {rep.rate:.3f} verdict {rep.verdict}")


def main():
    rng = np.random.default_rng(0)
    n = 100_000
    seg = np.column_stack([rng.random(n), np.zeros(n)])
    show("segment, t^2 log(1/t)",
         measure_limit(seg, Gauge("square_log", 0.25), [2.0**-k for k in range(4, 11)]))
    sq = rng.random((n, 2))
    show("square, t^2", measure_limit(sq, Gauge("square", 1.0),
                                      [2.0**-k for k in range(2, 7)],
                                      lower_bound=packing_lower_bound(1.0, 2)))
    params = AndradeParams(1.0, math.sqrt(3.0))
    # samples along v -> infinity fill the union of the trochoid cylinders
    m = 1_000_000
    z = rng.uniform(-1, 1, m) + 1j * rng.uniform(0, 20_000, m)
    pts = andrade_surface(params, 1.0, 20_000).immersion(z)
    lb = packing_lower_bound(andrade_solid_volume(params), 3)
    show("Andrade limit set, t^3",
         measure_limit(pts, Gauge("power", 1.5, exponent=3.0), [1, 0.7, 0.5, 0.35, 0.25],
                       lower_bound=lb))


if __name__ == "__main__":
    main()
