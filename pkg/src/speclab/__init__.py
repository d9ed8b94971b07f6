"""Numerical checks of spectral discreteness for immersed submanifolds.

Submodules: ``comparison`` (radial models), ``subharmonic`` (barriers),
``surfaces`` (conformal patches), ``spectrum`` (discrete Laplace-Beltrami
spectra and estimators), ``hausdorff`` (gauge measures) and ``cli``.
"""

__version__ = "0.1.0"
