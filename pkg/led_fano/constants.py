"""Physical constants used by the package (CODATA values from
`scipy.constants`).

All values are in SI units. Keep every constant the package needs in this
table, so that there is a single place to check which values are used.
"""
from typing import Final

from scipy import constants as _sc


M_ELECTRON: Final[float] = _sc.m_e
"""Free-electron rest mass [kg]."""
HBAR: Final[float] = _sc.hbar
"""Reduced Planck constant [J s]."""
K_BOLTZMANN: Final[float] = _sc.k
"""Boltzmann constant [J/K]."""
SPEED_OF_LIGHT: Final[float] = _sc.c
"""Speed of light in vacuum [m/s]."""
