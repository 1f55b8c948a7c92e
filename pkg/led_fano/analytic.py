"""Closed-form results for the photon Fano factor and related quantities.

Every function here is a pure function of an `OperatingPoint` or of scalar
efficiencies. Functions that take a frequency `omega` accept either a float
or a numpy array and return the same shape.

Functions
---------
fano_master(q) -> W_ph
    Fano factor of the detected photons at frequency `q.omega`.
fano_zero_freq(op, W_e) -> W_ph
    Zero-frequency limit of `fano_master`.
fano_homogeneous(eta, eta_d, W_e), fano_classic(eta, W_e),
fano_inhomogeneous(eta, eta_d, zeta, W_e), fano_alternative(eta, eta_d, W_e)
    Zero-frequency special cases.
modulation_response(op, omega)
    Magnitude of the detected-flux response to pump modulation.
mode_cross_spectrum(op, l, m, omega, W_e)
    Output-flux cross spectral density between two modes.
detected_spectrum_from_modes(op, omega, W_e)
    Fano factor assembled from the mode cross spectra and partition noise.
ratio_r(eta, eta_d)
    Ratio of the Fano factors for a noiseless and a Poissonian pump.
spl_condition(op)
    Whether a Poissonian pump gives sub-Poissonian light.
fano_sweep(op, W_e, omegas, formulas)
    Tidy DataFrame of one or more formulas on a frequency grid.
"""
from collections.abc import Sequence
import dataclasses
import logging
import math
import typing as tp

import numpy as np
import numpy.typing as npt
import pandas as pd

from .core_params import OperatingPoint
from .exceptions import UnphysicalParameterError, ZeroEfficiencyError


logger = logging.getLogger(__name__)

FloatOrArray = tp.Union[float, npt.NDArray[np.float64]]

FORMULAS: tp.Final[tuple[str, ...]] = (
    'master',
    'homogeneous',
    'classic',
    'inhomogeneous',
    'alternative',
)
"""Formula names accepted by `fano_sweep`."""



@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class FanoQuery:
    """Arguments of `fano_master`.

    Attributes
    ----------
    op : OperatingPoint
        The operating point.
    W_e : float
        Fano factor of the pump at the queried frequency.
    omega : float or numpy.ndarray
        Angular frequency or frequencies [rad/s].
    """
    op: OperatingPoint
    W_e: float
    omega: FloatOrArray = 0.0

    def __post_init__(self) -> None:
        if not self.W_e >= 0:
            raise UnphysicalParameterError(
                f'`W_e` must be non-negative, got {self.W_e}'
            )
        if np.any(np.asarray(self.omega) < 0):
            raise UnphysicalParameterError('`omega` must be non-negative')

###END class FanoQuery


def _require_eta(eta: float) -> None:
    if not eta > 0:
        raise ZeroEfficiencyError(
            f'Zero quantum efficiency: the formula divides by eta = {eta}'
        )


def _lorentzian(omega: FloatOrArray, tau_dd: float) -> FloatOrArray:
    """Return `1/(1 + (omega tau_dd)^2)`."""
    x = np.asarray(omega) * tau_dd
    result = 1.0 / (1.0 + x * x)
    return float(result) if np.ndim(result) == 0 else result


def _master(
        eta: float,
        eta_d: float,
        zeta1: float,
        zeta2: float,
        W_e: float,
        rolloff: FloatOrArray,
) -> FloatOrArray:
    _require_eta(eta)
    return 1.0 - 2.0 * eta_d * zeta1 * rolloff \
        + (eta_d * eta_d / eta) * (1.0 + W_e) * zeta2 * rolloff


def fano_master(q: FanoQuery) -> FloatOrArray:
    """Fano factor of the photons detected at the detector surface.

    `W_ph = 1 - 2 eta_d zeta1 L + (eta_d^2/eta)(1 + W_e) zeta2 L`, with the
    roll-off `L = 1/(1 + (omega tau_dd)^2)`.

    Parameters
    ----------
    q : FanoQuery
        Operating point, pump Fano factor and frequency.

    Returns
    -------
    float or numpy.ndarray
        The photon Fano factor, with the same shape as `q.omega`.

    Raises
    ------
    ZeroEfficiencyError
        If the quantum efficiency of the operating point is zero.
    """
    op: OperatingPoint = q.op
    return _master(
        op.eta, op.eta_d, op.zeta1, op.zeta2, q.W_e,
        _lorentzian(q.omega, op.tau_dd),
    )
###END def fano_master


def fano_zero_freq(op: OperatingPoint, W_e: float) -> float:
    """Zero-frequency limit of `fano_master`.

    `W_ph(0) = 1 - 2 eta_d zeta1 + (eta_d^2/eta)(1 + W_e) zeta2`.
    """
    return tp.cast(float, _master(
        op.eta, op.eta_d, op.zeta1, op.zeta2, W_e, 1.0
    ))
###END def fano_zero_freq


def fano_homogeneous(eta: float, eta_d: float, W_e: float) -> float:
    """Zero-frequency Fano factor when all modes are emitted and detected
    alike (`zeta1 = zeta2 = 1`).

    `W_ph = 1 - 2 eta_d + (eta_d^2/eta)(1 + W_e)`.
    """
    _require_eta(eta)
    return 1.0 - 2.0 * eta_d + (eta_d * eta_d / eta) * (1.0 + W_e)


def fano_classic(eta: float, W_e: float) -> float:
    """Zero-frequency Fano factor for a straight I-L curve (`eta_d = eta`):
    `W_ph = 1 - eta + eta W_e`."""
    return 1.0 - eta + eta * W_e


def fano_inhomogeneous(
        eta: float,
        eta_d: float,
        zeta: float,
        W_e: float,
) -> float:
    """Zero-frequency Fano factor for inhomogeneous emission/detection with a
    single multimodeness factor `zeta` (`zeta1 = zeta2 = zeta`).

    `W_ph = 1 - 2 eta_d zeta + (eta_d^2 zeta/eta)(1 + W_e)`. Compared with
    `fano_homogeneous`, both efficiencies are effectively multiplied by
    `zeta`.

    `zeta` lies in `(0, 1]` when no mode has a density-dependent lifetime.
    Otherwise the detected modes can respond more strongly than the total
    flux, so `zeta > 1` is possible, and `zeta = 0` when the detected modes
    do not respond at all.

    Raises
    ------
    ZeroEfficiencyError
        If `eta` is zero.
    UnphysicalParameterError
        If `zeta` is negative or not finite.
    """
    _require_eta(eta)
    if not (math.isfinite(zeta) and zeta >= 0.0):
        raise UnphysicalParameterError(
            f'`zeta` must be finite and non-negative, got {zeta}'
        )
    return 1.0 - 2.0 * eta_d * zeta + (eta_d * eta_d * zeta / eta) * (1.0 + W_e)


def fano_alternative(eta: float, eta_d: float, W_e: float) -> float:
    """Zero-frequency Fano factor from the simple partition argument,
    `W_ph = 1 - eta + (eta_d^2/eta) W_e`.

    Provided for comparison with `fano_homogeneous`; for the efficiencies of
    typical LEDs the two differ by less than the experimental error.
    """
    _require_eta(eta)
    return 1.0 - eta + (eta_d * eta_d / eta) * W_e


def modulation_response(
        op: OperatingPoint,
        omega: FloatOrArray,
) -> FloatOrArray:
    """Magnitude of the detected-flux response to a pump modulation,
    `eta_d/sqrt(1 + (omega tau_dd)^2)`."""
    return op.eta_d * np.sqrt(_lorentzian(omega, op.tau_dd))


def cutoff_frequency(op: OperatingPoint) -> float:
    """Cutoff angular frequency `1/tau_dd` [rad/s] of both the modulation
    response and the Fano factor spectrum."""
    return 1.0 / op.tau_dd


def mode_cross_spectrum(
        op: OperatingPoint,
        l: int,
        m: int,
        omega: FloatOrArray,
        W_e: float,
) -> complex | npt.NDArray[np.complex128]:
    """Cross spectral density of the output fluxes of modes `l` and `m`.

    Returns `<dV_l*(omega) dV_m(omega)>/T`, assembled from the Fourier
    components of the noise sources::

        g_l g_m (1 + W_e) P0 / (1 + x^2)
        - g_l V_m0 / (1 - i x) - g_m V_l0 / (1 + i x)
        + delta_lm V_l0

    with `x = omega tau_dd` and `g_l = tau_dd/tau_r_l_eff`. The first term is
    the total carrier noise (pump, radiative and non-radiative), which sums to
    `(1 + W_e) P0` at the running point.

    Parameters
    ----------
    op : OperatingPoint
        The operating point.
    l, m : int
        0-based mode indices.
    omega : float or numpy.ndarray
        Angular frequency or frequencies [rad/s].
    W_e : float
        Pump Fano factor.

    Raises
    ------
    IndexError
        If `l` or `m` is not a valid mode index.
    """
    for _index in (l, m):
        if not 0 <= _index < op.n_modes:
            raise IndexError(
                f'Mode index {_index} out of range for {op.n_modes} modes'
            )
    x = np.asarray(omega, dtype=float) * op.tau_dd
    g_l: float = op.eff_emission_weights[l] / (1.0 + op.eps_prime)
    g_m: float = op.eff_emission_weights[m] / (1.0 + op.eps_prime)
    V_l0: float = op.V_l0[l]
    V_m0: float = op.V_l0[m]
    result = g_l * g_m * (1.0 + W_e) * op.P0 / (1.0 + x * x) \
        - g_l * V_m0 / (1.0 - 1j * x) \
        - g_m * V_l0 / (1.0 + 1j * x)
    if l == m:
        result = result + V_l0
    return complex(result) if np.ndim(result) == 0 else result
###END def mode_cross_spectrum


def detected_spectrum_from_modes(
        op: OperatingPoint,
        omega: FloatOrArray,
        W_e: float,
) -> FloatOrArray:
    """Fano factor of the detected flux assembled from the mode spectra.

    Sums the `xi_l xi_m`-weighted mode cross spectra, adds the partition
    noise `sum_l xi_l (1 - xi_l) V_l0` of the detection, and divides by the
    detected flux `N0`. The result is real and equals `fano_master`.
    """
    _require_eta(op.eta)
    total = np.zeros(np.shape(omega), dtype=complex)
    for _l in range(op.n_modes):
        for _m in range(op.n_modes):
            total = total + op.xi[_l] * op.xi[_m] \
                * mode_cross_spectrum(op, _l, _m, omega, W_e)
    partition: float = math.fsum(
        _xi * (1.0 - _xi) * _V for _xi, _V in zip(op.xi, op.V_l0)
    )
    result = (total.real + partition) / op.N0
    return float(result) if np.ndim(result) == 0 else result
###END def detected_spectrum_from_modes


def carrier_spectrum(
        op: OperatingPoint,
        omega: FloatOrArray,
        W_e: float,
) -> FloatOrArray:
    """Spectral density of the carrier-number fluctuations,
    `tau_dd^2 (1 + W_e) P0/(1 + (omega tau_dd)^2)`."""
    return op.tau_dd**2 * (1.0 + W_e) * op.P0 * _lorentzian(omega, op.tau_dd)


def carrier_variance(op: OperatingPoint, W_e: float) -> float:
    """Stationary variance of the carrier number, the frequency integral of
    `carrier_spectrum`: `(1 + W_e) P0 tau_dd/2`."""
    return 0.5 * (1.0 + W_e) * op.P0 * op.tau_dd


def ratio_r(eta: float, eta_d: float) -> float:
    """Ratio of the zero-frequency Fano factors for a noiseless and a
    Poissonian pump in the homogeneous case.

    `r = (1 - 2 eta_d + eta_d^2/eta)/(1 - 2 eta_d + 2 eta_d^2/eta)`. For
    `eta_d = eta` this reduces to `r = 1 - eta`.

    Raises
    ------
    ZeroEfficiencyError
        If `eta` is zero.
    UnphysicalParameterError
        If the denominator vanishes.
    """
    _require_eta(eta)
    q: float = eta_d * eta_d / eta
    denominator: float = 1.0 - 2.0 * eta_d + 2.0 * q
    if denominator == 0:
        raise UnphysicalParameterError(
            f'Zero denominator in r for eta = {eta}, eta_d = {eta_d}'
        )
    return (1.0 - 2.0 * eta_d + q) / denominator


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class SPLCondition:
    """Result of `spl_condition`.

    Attributes
    ----------
    sub_poissonian : bool
        True if `0 < eta_d < eta`, i.e. a Poissonian pump gives `W_ph < 1`.
    eta_margin : float
        `eta - eta_d`.
    K_sum : float
        `K_r + K_nr`. With a non-radiative channel and some detected light,
        `eta_d < eta` holds exactly when `K_sum < 0`.
    criteria_agree : bool
        Whether the two criteria give the same answer. Always True when the
        operating point has no non-radiative channel or detects no light,
        since `eta_d = eta` holds then regardless of `K_sum`.
    """
    sub_poissonian: bool
    eta_margin: float
    K_sum: float
    criteria_agree: bool

###END class SPLCondition


def spl_condition(op: OperatingPoint) -> SPLCondition:
    """Check the condition for sub-Poissonian light with a Poissonian pump
    in the homogeneous case."""
    sub_poissonian: bool = 0.0 < op.eta_d < op.eta
    K_sum: float = op.K_r + op.K_nr
    criteria_agree: bool = True
    if op.eps0 > 0 and op.beta0 > 0:
        criteria_agree = sub_poissonian == (K_sum < 0)
    return SPLCondition(
        sub_poissonian=sub_poissonian,
        eta_margin=op.eta - op.eta_d,
        K_sum=K_sum,
        criteria_agree=criteria_agree,
    )
###END def spl_condition


def fano_sweep(
        op: OperatingPoint,
        W_e: float,
        omegas: npt.ArrayLike,
        formulas: Sequence[str] = ('master',),
) -> pd.DataFrame:
    """Evaluate one or more Fano-factor formulas on a frequency grid.

    The zero-frequency formulas (`homogeneous`, `classic`, `inhomogeneous`,
    `alternative`) are extended to finite frequency by scaling `W_ph - 1`
    with the roll-off `1/(1 + (omega tau_dd)^2)` of the master formula. The
    `inhomogeneous` formula uses `zeta = op.zeta2`; it gives NaN, with a
    logged warning, when `zeta2` is undefined because no light is detected.

    Parameters
    ----------
    op : OperatingPoint
        The operating point.
    W_e : float
        Pump Fano factor.
    omegas : array_like
        Angular frequencies [rad/s].
    formulas : sequence of str, optional
        Names from `FORMULAS`. Defaults to `('master',)`.

    Returns
    -------
    pandas.DataFrame
        Long-format frame with columns `omega`, `W_ph` and `formula`, one
        block of rows per formula in the order given.

    Raises
    ------
    ValueError
        If a formula name is not in `FORMULAS`.
    """
    unknown: list[str] = [_f for _f in formulas if _f not in FORMULAS]
    if len(unknown) > 0:
        raise ValueError(
            f'Unknown formula name(s): {", ".join(unknown)}. Valid names are '
            f'{", ".join(FORMULAS)}.'
        )
    omega_array: np.ndarray = np.asarray(omegas, dtype=float)
    rolloff = np.asarray(_lorentzian(omega_array, op.tau_dd))
    zero_freq: dict[str, tp.Callable[[], float]] = {
        'homogeneous': lambda: fano_homogeneous(op.eta, op.eta_d, W_e),
        'classic': lambda: fano_classic(op.eta, W_e),
        'inhomogeneous': lambda: fano_inhomogeneous(
            op.eta, op.eta_d, op.zeta2, W_e
        ),
        'alternative': lambda: fano_alternative(op.eta, op.eta_d, W_e),
    }
    frames: list[pd.DataFrame] = []
    for _formula in formulas:
        if _formula == 'master':
            _values = np.asarray(
                fano_master(FanoQuery(op=op, W_e=W_e, omega=omega_array))
            )
        elif _formula == 'inhomogeneous' and not math.isfinite(op.zeta2):
            logger.warning(
                'zeta2 = %s is undefined (beta0 = %s); the inhomogeneous '
                'formula is reported as NaN', op.zeta2, op.beta0,
            )
            _values = np.full(omega_array.shape, np.nan)
        else:
            _values = 1.0 + (zero_freq[_formula]() - 1.0) * rolloff
        frames.append(pd.DataFrame({
            'omega': omega_array,
            'W_ph': _values,
            'formula': _formula,
        }))
    return pd.concat(frames, ignore_index=True)
###END def fano_sweep
