"""Grid convergence of the first Dirichlet eigenvalue of the unit disk."""

import argparse
import time

from scipy.special import jn_zeros

from speclab.spectrum import fundamental_tone
from speclab.surfaces import flat_disk


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    args = ap.parse_args()
    exact = jn_zeros(0, 1)[0] ** 2
    print(f"{'nodes':>6} {'mu_1':>12} {'rel err':>10} {'time s':>8}")
    for n in args.sizes:
        t0 = time.perf_counter()
        lam = fundamental_tone(flat_disk(1.0), 2 / (n - 1))
        print(f"{n:6d} {lam:12.8f} {abs(lam / exact - 1):10.2e} {time.perf_counter() - t0:8.2f}")


if __name__ == "__main__":
    main()
