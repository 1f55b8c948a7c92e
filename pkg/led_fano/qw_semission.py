"""Band-edge spontaneous emission of a heavily p-doped quantum well.

The model assumes that cavity-QED effects suppress spontaneous emission (SE)
everywhere except at the band edge, that the well is doped highly enough for
the hole occupation there to be unity, and that the conduction band is
parabolic. The SE rate is then proportional to the electron occupation at the
band edge, which for a 2D parabolic band is `f_e = 1 - exp(-n_s/n0)` with the
degenerate density scale `n0 = m k_B T/(pi hbar^2)`.

Since `f_e` saturates, the radiative lifetime `n_s/R` grows with density and
the lifetime sensitivity `K_r` is negative, which is what makes sub-Poissonian
light possible with a Poissonian pump.

All functions accept numpy arrays for the sheet density.

Functions
---------
degenerate_density_scale(m_eff, T) -> n0
band_edge_occupation(qw) -> f_e
se_rate(qw) -> R_rel
k_r_of_density(qw) -> K_r
k_r_of_density_numeric(qw, rel_step) -> K_r
qw_sweep(n_s_values, temperatures, m_eff) -> pandas.DataFrame
"""
from collections.abc import Sequence
import dataclasses
import math
import typing as tp

import numpy as np
import numpy.typing as npt
import pandas as pd

from .constants import HBAR, K_BOLTZMANN, M_ELECTRON
from .exceptions import UnphysicalParameterError


FloatOrArray = tp.Union[float, npt.NDArray[np.float64]]

DEFAULT_M_EFF: tp.Final[float] = 0.1
"""Default electron effective mass, in units of the free-electron mass."""



@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class QWParams:
    """Quantum well state.

    Attributes
    ----------
    T : float
        Lattice temperature [K].
    n_s : float or numpy.ndarray
        Sheet electron density [1/m^2].
    m_eff : float
        Electron effective mass in units of the free-electron mass. Defaults
        to 0.1.
    """
    T: float
    n_s: FloatOrArray
    m_eff: float = DEFAULT_M_EFF

    def __post_init__(self) -> None:
        if not self.m_eff > 0:
            raise UnphysicalParameterError(
                f'`m_eff` must be positive, got {self.m_eff}'
            )
        if not self.T > 0:
            raise UnphysicalParameterError(
                f'`T` must be positive, got {self.T}'
            )
        if np.any(np.asarray(self.n_s) < 0):
            raise UnphysicalParameterError('`n_s` must be non-negative')

    @property
    def x(self) -> FloatOrArray:
        """Reduced density `n_s/n0`."""
        return self.n_s / degenerate_density_scale(self.m_eff, self.T)

###END class QWParams


def _as_output(value: npt.NDArray[np.float64]) -> FloatOrArray:
    return float(value) if np.ndim(value) == 0 else value


def degenerate_density_scale(m_eff: float, T: float) -> float:
    """Return the 2D degenerate density scale `n0 = m_eff m_e k_B T/(pi
    hbar^2)` [1/m^2].

    `n0` is the sheet density at which the band-edge occupation of a
    parabolic band reaches `1 - 1/e`.

    Parameters
    ----------
    m_eff : float
        Effective mass in units of the free-electron mass.
    T : float
        Temperature [K].

    Raises
    ------
    UnphysicalParameterError
        If `m_eff` or `T` is not positive.
    """
    if not (m_eff > 0 and T > 0):
        raise UnphysicalParameterError(
            f'`m_eff` and `T` must be positive, got m_eff = {m_eff}, T = {T}'
        )
    return m_eff * M_ELECTRON * K_BOLTZMANN * T / (math.pi * HBAR**2)
###END def degenerate_density_scale


def band_edge_occupation(qw: QWParams) -> FloatOrArray:
    """Electron occupation at the conduction band edge, `1 - exp(-n_s/n0)`."""
    return _as_output(-np.expm1(-np.asarray(qw.x, dtype=float)))


def se_rate(qw: QWParams) -> FloatOrArray:
    """Relative band-edge SE rate.

    The hole factor is unity, so the rate is the electron occupation itself;
    in these units `R(n0) = 1 - 1/e`.
    """
    return band_edge_occupation(qw)


def k_r_of_density(qw: QWParams) -> FloatOrArray:
    """Radiative lifetime sensitivity `K_r = dln R/dln n_s - 1`.

    Evaluates `x/(exp(x) - 1) - 1` with `x = n_s/n0`. The value at `n_s = 0`
    is the limit `K_r = 0`; `K_r` approaches -1 at full saturation.
    """
    x: np.ndarray = np.asarray(qw.x, dtype=float)
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        ratio: np.ndarray = np.where(x == 0, 1.0, x / np.expm1(x))
    return _as_output(ratio - 1.0)
###END def k_r_of_density


def k_r_of_density_numeric(
        qw: QWParams,
        rel_step: float = 1e-4,
) -> FloatOrArray:
    """Finite-difference version of `k_r_of_density`.

    Takes the central difference of `ln R` with respect to `ln n_s` with
    relative density step `rel_step`. Used to cross-check the closed form.
    """
    n_s: np.ndarray = np.asarray(qw.n_s, dtype=float)
    n0: float = degenerate_density_scale(qw.m_eff, qw.T)
    safe_n_s: np.ndarray = np.where(n_s == 0, n0, n_s)
    log_r_up = np.log(-np.expm1(-safe_n_s * (1.0 + rel_step) / n0))
    log_r_down = np.log(-np.expm1(-safe_n_s * (1.0 - rel_step) / n0))
    slope = (log_r_up - log_r_down) \
        / (math.log1p(rel_step) - math.log1p(-rel_step))
    return _as_output(np.where(n_s == 0, 0.0, slope - 1.0))
###END def k_r_of_density_numeric


def qw_sweep(
        n_s_values: npt.ArrayLike,
        temperatures: Sequence[float],
        m_eff: float = DEFAULT_M_EFF,
) -> pd.DataFrame:
    """Tabulate occupation, SE rate and `K_r` over densities and
    temperatures.

    Parameters
    ----------
    n_s_values : array_like
        Sheet densities [1/m^2].
    temperatures : sequence of float
        Temperatures [K]. Output blocks follow this order.
    m_eff : float, optional
        Effective mass in units of the free-electron mass.

    Returns
    -------
    pandas.DataFrame
        Long-format frame with columns `n_s`, `T`, `f_e`, `R_rel`, `K_r`,
        one block of rows per temperature.
    """
    n_s: np.ndarray = np.asarray(n_s_values, dtype=float)
    frames: list[pd.DataFrame] = []
    for _T in temperatures:
        _qw = QWParams(T=_T, n_s=n_s, m_eff=m_eff)
        frames.append(pd.DataFrame({
            'n_s': n_s,
            'T': float(_T),
            'f_e': band_edge_occupation(_qw),
            'R_rel': se_rate(_qw),
            'K_r': k_r_of_density(_qw),
        }))
    return pd.concat(frames, ignore_index=True)
###END def qw_sweep
