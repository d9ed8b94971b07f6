"""Discrete Laplace-Beltrami spectra on conformal patches."""

from .grid import (GridDiscretization, Region, SpectralProblem, ball_region, discretize,
                   laplace_beltrami, strip_region)
from .eigen import (EigenResult, EigenSolverError, PerssonSweep, fundamental_tone,
                    persson_sweep, smallest_eigs)
from .estimators import (BallPropertyReport, BartaResult, CircleCover, WitnessReport, ball_property_check,
                         barta_bound, barta_witness, boundary_circle_cover, geodesic_distance)
