"""Ball-property constants on the flat disk and the labyrinth annuli."""

import numpy as np

from speclab.spectrum import ball_property_check, discretize
from speclab.surfaces import LabyrinthParams, flat_disk, labyrinth_patch


def main():
    grid, _ = discretize(flat_disk(10.0), 1 / 32)
    rep = ball_property_check(grid, [0j], 1.0, 0.5, test_factor=1.1)
    print(f"flat disk: C = {rep.C:.4f}, max I_lambda = {rep.rayleigh_values.max():.4g}")
    for n in range(1, 7):
        p = LabyrinthParams(n, 1.0 / n, epsilon=0.3 * n)
        g, _ = discretize(labyrinth_patch(p), p.r_n / 100)
        r = ball_property_check(g, [complex(p.p_n)], 0.4 * p.r_n * p.C_n, 0.5)
        print(f"labyrinth n={n}: C = {r.C:.4f}, bound = {r.bound:.4g}")


if __name__ == "__main__":
    main()
