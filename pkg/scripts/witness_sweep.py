"""Growth of the Barta witness bound as the cover radius r1 is halved."""

import argparse

from speclab.comparison import CurvatureBound, solve_h
from speclab.hausdorff import gauge_for_theta
from speclab.spectrum import barta_witness, boundary_circle_cover
from speclab.surfaces import flat_disk


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--r1", type=float, default=1 / 400)
    ap.add_argument("--spacing", type=float, default=1 / 256)
    args = ap.parse_args()
    model = solve_h(CurvatureBound.const(0.0), 3.0)
    psi = gauge_for_theta(1.0)
    prev = None
    for k in range(args.levels):
        r1 = args.r1 / 2**k
        cover = boundary_circle_cover(1.0, r1, psi)
        b = barta_witness(flat_disk(1.0), args.spacing, cover, model, r1, R_D=1.0).bound
        ratio = "" if prev is None else f"  ratio {b / prev:.3f}"
        print(f"r1 = {r1:.3e}  bound {b:.4f}{ratio}")
        prev = b


if __name__ == "__main__":
    main()
