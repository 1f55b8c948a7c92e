"""Device and operating-point parameters, and the quantities derived from them.

The module holds the value types that describe an LED at a running point
(`ModeParams`, `DeviceParams`, `PumpSpec`), derives every small-signal
quantity of the linearized rate equations (`derive_operating_point`), and
checks whether the per-mode emission and absorption rates are small compared
to the photon escape rates (`check_low_injection`).

Functions
---------
derive_operating_point(device, pump) -> OperatingPoint
    Steady state, efficiencies, cutoff and multimodeness factors.
efficiencies_from_K(eps0, beta0, K_r, K_nr) -> tuple[float, float]
    Quantum efficiency and differential quantum efficiency.
check_low_injection(device, pump, ...) -> RegimeReport
    Order-of-magnitude check of the low-injection regime.
"""
import dataclasses
import math
import typing as tp

import numpy as np
import pandas as pd

from .constants import SPEED_OF_LIGHT
from .exceptions import UnphysicalParameterError



@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class ModeParams:
    """Constants of a single photon mode at the running point.

    Attributes
    ----------
    kappa0 : float
        Photon escape rate of the mode [1/s].
    tau_r_l0 : float
        Radiative lifetime of the carriers into the mode [s].
    K_r_l : float
        Dimensionless sensitivity of `tau_r_l0` to the carrier number.
    xi_l : float
        Probability that a photon of the mode reaches the detector and is
        detected.
    """
    kappa0: float
    tau_r_l0: float
    K_r_l: float = 0.0
    xi_l: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa0) and self.kappa0 > 0):
            raise UnphysicalParameterError(
                f'`kappa0` must be positive and finite, got {self.kappa0}'
            )
        if not (math.isfinite(self.tau_r_l0) and self.tau_r_l0 > 0):
            raise UnphysicalParameterError(
                f'`tau_r_l0` must be positive and finite, got {self.tau_r_l0}'
            )
        if not math.isfinite(self.K_r_l):
            raise UnphysicalParameterError(
                f'`K_r_l` must be finite, got {self.K_r_l}'
            )
        if not 0.0 <= self.xi_l <= 1.0:
            raise UnphysicalParameterError(
                f'`xi_l` must lie in [0, 1], got {self.xi_l}'
            )
    ###END def ModeParams.__post_init__

###END class ModeParams


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class DeviceParams:
    """Device constants at the running point.

    Attributes
    ----------
    modes : tuple of ModeParams
        The photon modes of the cavity, in a fixed order. Mode indices used
        elsewhere in the package refer to positions in this tuple.
    tau_nr0 : float
        Non-radiative lifetime [s]. `math.inf` means that there is no
        non-radiative channel, in which case all formulas use
        `1/tau_nr0 = 0`.
    K_nr : float
        Dimensionless sensitivity of `tau_nr0` to the carrier number.
    nbar_thermal : float
        Thermal photon number per mode. Only 0 is accepted; the field is kept
        so that configurations state the assumption explicitly.
    """
    modes: tuple[ModeParams, ...]
    tau_nr0: float = math.inf
    K_nr: float = 0.0
    nbar_thermal: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.modes, tuple):
            # Accept any sequence, but store a tuple to keep the object
            # immutable.
            object.__setattr__(self, 'modes', tuple(self.modes))
        if len(self.modes) == 0:
            raise UnphysicalParameterError('A device needs at least one mode')
        if not (self.tau_nr0 > 0):
            raise UnphysicalParameterError(
                f'`tau_nr0` must be positive or math.inf, got {self.tau_nr0}'
            )
        if not math.isfinite(self.K_nr):
            raise UnphysicalParameterError(
                f'`K_nr` must be finite, got {self.K_nr}'
            )
        if self.nbar_thermal != 0:
            raise UnphysicalParameterError(
                'Thermal photons are not supported, `nbar_thermal` must be 0 '
                f'(got {self.nbar_thermal})'
            )
    ###END def DeviceParams.__post_init__

    @property
    def inv_tau_r0(self) -> float:
        """Total radiative rate per carrier, sum of the per-mode rates."""
        return math.fsum(1.0 / _mode.tau_r_l0 for _mode in self.modes)

    @property
    def tau_r0(self) -> float:
        """Total radiative lifetime [s]."""
        return 1.0 / self.inv_tau_r0

    @property
    def inv_tau_nr0(self) -> float:
        """Non-radiative rate per carrier, 0 without a non-radiative channel."""
        return 0.0 if math.isinf(self.tau_nr0) else 1.0 / self.tau_nr0

    @property
    def emission_weights(self) -> tuple[float, ...]:
        """Share of the radiative flux emitted into each mode,
        `tau_r0/tau_r_l0`."""
        tau_r0: float = self.tau_r0
        return tuple(tau_r0 / _mode.tau_r_l0 for _mode in self.modes)

    @property
    def K_r(self) -> float:
        """Flux-weighted radiative sensitivity `sum_l (tau_r0/tau_r_l0) K_r_l`."""
        return math.fsum(
            _w * _mode.K_r_l
            for _w, _mode in zip(self.emission_weights, self.modes)
        )

###END class DeviceParams


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class PumpSpec:
    """Pump at the running point.

    Attributes
    ----------
    P0 : float
        Mean pump rate [1/s].
    W_e : float
        Fano factor of the pump (1 for a Poissonian pump, 0 for a noiseless
        one).
    modulation : tuple of (float, float), optional
        Sinusoidal modulation of the pump as `(amplitude [1/s],
        angular frequency [rad/s])`.
    """
    P0: float
    W_e: float = 1.0
    modulation: tp.Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.P0) and self.P0 > 0):
            raise UnphysicalParameterError(
                f'`P0` must be positive and finite, got {self.P0}'
            )
        if not (math.isfinite(self.W_e) and self.W_e >= 0):
            raise UnphysicalParameterError(
                f'`W_e` must be non-negative, got {self.W_e}'
            )
        if self.modulation is not None:
            amplitude, omega = self.modulation
            if amplitude < 0 or omega < 0:
                raise UnphysicalParameterError(
                    'Modulation amplitude and frequency must be non-negative, '
                    f'got {self.modulation}'
                )
    ###END def PumpSpec.__post_init__

###END class PumpSpec


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class OperatingPoint:
    """All quantities of the linearized model at a running point.

    Lifetimes are in seconds, fluxes in 1/s, all other quantities are
    dimensionless. Effective lifetimes that are formally infinite (no
    non-radiative channel, or a vanishing sensitivity factor) are stored as
    `math.inf`.

    Per-mode quantities are tuples in the order of `DeviceParams.modes`.
    `eff_emission_weights` holds `tau_r_eff/tau_r_l_eff`, the share of the
    carrier-number response emitted into each mode.
    """
    P0: float
    n_c0: float
    tau_r0: float
    tau_nr0: float
    eps0: float
    K_r: float
    K_nr: float
    tau_r_eff: float
    tau_nr_eff: float
    tau_dd: float
    eps_prime: float
    beta0: float
    eta: float
    eta_d: float
    zeta1: float
    zeta2: float
    V0: float
    N0: float
    kappa0: tuple[float, ...]
    xi: tuple[float, ...]
    emission_weights: tuple[float, ...]
    eff_emission_weights: tuple[float, ...]
    tau_r_l0: tuple[float, ...]
    tau_r_l_eff: tuple[float, ...]
    V_l0: tuple[float, ...]
    n_l0: tuple[float, ...]

    @property
    def n_modes(self) -> int:
        return len(self.kappa0)

    @property
    def inv_tau_nr0(self) -> float:
        return 0.0 if math.isinf(self.tau_nr0) else 1.0 / self.tau_nr0

    def to_dict(self) -> dict[str, float | list[float]]:
        """Return the fields as a JSON-serializable dict."""
        return {
            _field.name: (
                list(getattr(self, _field.name))
                if isinstance(getattr(self, _field.name), tuple)
                else getattr(self, _field.name)
            )
            for _field in dataclasses.fields(self)
        }
    ###END def OperatingPoint.to_dict

    def to_frame(self) -> pd.DataFrame:
        """Return the fields as a two-column DataFrame (`quantity`, `value`).

        Per-mode quantities get one row per mode, with the 1-based mode
        number in brackets (e.g. `n_l0[2]`), matching the `mode.N.*`
        numbering of configuration files.
        """
        rows: list[tuple[str, float]] = []
        for _name, _value in self.to_dict().items():
            if isinstance(_value, list):
                rows.extend(
                    (f'{_name}[{_i + 1}]', _v) for _i, _v in enumerate(_value)
                )
            else:
                rows.append((_name, _value))
        return pd.DataFrame(rows, columns=['quantity', 'value'])
    ###END def OperatingPoint.to_frame

###END class OperatingPoint


def efficiencies_from_K(
        eps0: float,
        beta0: float,
        K_r: float,
        K_nr: float,
) -> tuple[float, float]:
    """Return the quantum efficiency and the differential quantum efficiency.

    Parameters
    ----------
    eps0 : float
        Ratio of radiative to non-radiative lifetime, `tau_r0/tau_nr0`.
    beta0 : float
        Transfer efficiency from cavity output to detected photons.
    K_r, K_nr : float
        Radiative and non-radiative lifetime sensitivities.

    Returns
    -------
    (eta, eta_d) : tuple of float
        `eta = beta0/(1+eps0)` and `eta_d = beta0/(1+eps_prime)`, with
        `eps_prime = eps0 (1-K_nr)/(1+K_r)`.

    Raises
    ------
    UnphysicalParameterError
        If `K_r <= -1` or if `eps_prime <= -1`.
    """
    if not eps0 >= 0:
        raise UnphysicalParameterError(f'`eps0` must be >= 0, got {eps0}')
    if not 0.0 <= beta0 <= 1.0:
        raise UnphysicalParameterError(
            f'`beta0` must lie in [0, 1], got {beta0}'
        )
    if not 1.0 + K_r > 0:
        raise UnphysicalParameterError(
            f'Unphysical sensitivity: K_r = {K_r} <= -1 gives a non-positive '
            'effective radiative lifetime'
        )
    eps_prime: float = eps0 * (1.0 - K_nr) / (1.0 + K_r)
    if not 1.0 + eps_prime > 0:
        raise UnphysicalParameterError(
            f'Unphysical differential efficiency: eps_prime = {eps_prime} '
            f'<= -1 (K_nr = {K_nr})'
        )
    return beta0 / (1.0 + eps0), beta0 / (1.0 + eps_prime)
###END def efficiencies_from_K


def derive_operating_point(
        device: DeviceParams,
        pump: PumpSpec,
) -> OperatingPoint:
    """Derive every running-point quantity from device and pump parameters.

    Parameters
    ----------
    device : DeviceParams
        Device constants at the running point.
    pump : PumpSpec
        The pump. Only `pump.P0` enters the operating point; the pump noise
        enters the Fano factor through `W_e`.

    Returns
    -------
    OperatingPoint

    Raises
    ------
    UnphysicalParameterError
        If the total radiative sensitivity is `K_r <= -1`, or if the
        non-radiative sensitivity makes the carrier relaxation rate
        `1/tau_dd` non-positive.
    """
    inv_tau_r0: float = device.inv_tau_r0
    tau_r0: float = 1.0 / inv_tau_r0
    inv_tau_nr0: float = device.inv_tau_nr0
    eps0: float = tau_r0 * inv_tau_nr0
    n_c0: float = pump.P0 / (inv_tau_r0 + inv_tau_nr0)

    weights: np.ndarray = np.asarray(device.emission_weights)
    K_r_l: np.ndarray = np.array([_m.K_r_l for _m in device.modes])
    xi: np.ndarray = np.array([_m.xi_l for _m in device.modes])
    kappa0: np.ndarray = np.array([_m.kappa0 for _m in device.modes])
    tau_r_l0: np.ndarray = np.array([_m.tau_r_l0 for _m in device.modes])
    K_r: float = float(np.sum(weights * K_r_l))
    K_nr: float = device.K_nr
    if not 1.0 + K_r > 0:
        raise UnphysicalParameterError(
            f'Unphysical sensitivity: K_r = {K_r} <= -1 (flux-weighted sum '
            f'of mode sensitivities K_r_l = {K_r_l.tolist()})'
        )
    inv_tau_r_eff: float = (1.0 + K_r) * inv_tau_r0
    inv_tau_nr_eff: float = (1.0 - K_nr) * inv_tau_nr0
    inv_tau_dd: float = inv_tau_r_eff + inv_tau_nr_eff
    if not inv_tau_dd > 0:
        raise UnphysicalParameterError(
            f'Unphysical sensitivity: K_nr = {K_nr} makes the carrier '
            'relaxation rate 1/tau_dd non-positive'
        )
    beta0: float = float(np.sum(weights * xi))
    eta, eta_d = efficiencies_from_K(eps0, beta0, K_r, K_nr)
    eps_prime: float = inv_tau_nr_eff / inv_tau_r_eff

    # Share of the carrier-number response going into each mode,
    # tau_r_eff/tau_r_l_eff.
    eff_weights: np.ndarray = weights * (1.0 + K_r_l) / (1.0 + K_r)
    zeta1: float
    zeta2: float
    if beta0 > 0:
        zeta1 = float(
            np.sum(np.outer(eff_weights * xi, weights * xi)) / beta0**2
        )
        zeta2 = float(np.sum(eff_weights * xi / beta0)**2)
    else:
        zeta1 = zeta2 = math.nan

    with np.errstate(divide='ignore'):
        tau_r_l_eff: np.ndarray = np.where(
            1.0 + K_r_l == 0, np.inf, tau_r_l0 / (1.0 + K_r_l)
        )
    V_l0: np.ndarray = n_c0 / tau_r_l0
    V0: float = n_c0 * inv_tau_r0
    return OperatingPoint(
        P0=pump.P0,
        n_c0=n_c0,
        tau_r0=tau_r0,
        tau_nr0=device.tau_nr0,
        eps0=eps0,
        K_r=K_r,
        K_nr=K_nr,
        tau_r_eff=1.0 / inv_tau_r_eff,
        tau_nr_eff=math.inf if inv_tau_nr_eff == 0 else 1.0 / inv_tau_nr_eff,
        tau_dd=1.0 / inv_tau_dd,
        eps_prime=eps_prime,
        beta0=beta0,
        eta=eta,
        eta_d=eta_d,
        zeta1=zeta1,
        zeta2=zeta2,
        V0=V0,
        N0=beta0 * V0,
        kappa0=tuple(kappa0.tolist()),
        xi=tuple(xi.tolist()),
        emission_weights=tuple(weights.tolist()),
        eff_emission_weights=tuple(eff_weights.tolist()),
        tau_r_l0=tuple(tau_r_l0.tolist()),
        tau_r_l_eff=tuple(tau_r_l_eff.tolist()),
        V_l0=tuple(V_l0.tolist()),
        n_l0=tuple((V_l0 / kappa0).tolist()),
    )
###END def derive_operating_point


@dataclasses.dataclass(kw_only=True, slots=True)
class RegimeReport:
    """Result of the low-injection check.

    Attributes
    ----------
    kappa_estimate : float
        Geometric estimate of the photon escape rate,
        `1/(V_cavity^(1/3)/c + Q t_device)` [1/s].
    n_l0 : tuple of float
        Steady-state photon number of each mode, `R_sp_l/kappa0_l`, using the
        escape rates of the device.
    R_abs : float
        Absorption rate estimate `c * R_abs_per_length * V_active/V_cavity`
        [1/s].
    R_abs_ratio : float
        `R_abs/kappa_estimate`.
    threshold : float
        Ratios must be below this value for the check to pass.
    passed : bool
        Whether every ratio is below `threshold`.
    failed_checks : pandas.DataFrame or None
        Rows (`quantity`, `value`) of the ratios that are not below
        `threshold`, or None if all checks passed.
    """
    kappa_estimate: float
    n_l0: tuple[float, ...]
    R_abs: float
    R_abs_ratio: float
    threshold: float
    passed: bool
    failed_checks: pd.DataFrame | None

    def to_frame(self) -> pd.DataFrame:
        """Return the report as a two-column DataFrame (`quantity`,
        `value`)."""
        rows: list[tuple[str, float]] = [
            ('kappa_estimate', self.kappa_estimate),
        ] + [
            (f'n_l0[{_i + 1}]', _n) for _i, _n in enumerate(self.n_l0)
        ] + [
            ('R_abs', self.R_abs),
            ('R_abs_ratio', self.R_abs_ratio),
            ('threshold', self.threshold),
            ('passed', float(self.passed)),
        ]
        return pd.DataFrame(rows, columns=['quantity', 'value'])
    ###END def RegimeReport.to_frame

    def to_dict(self) -> dict[str, tp.Any]:
        return {
            'kappa_estimate': self.kappa_estimate,
            'n_l0': list(self.n_l0),
            'R_abs': self.R_abs,
            'R_abs_ratio': self.R_abs_ratio,
            'threshold': self.threshold,
            'passed': self.passed,
        }

###END class RegimeReport


def check_low_injection(
        device: DeviceParams,
        pump: PumpSpec,
        *,
        cavity_volume: float,
        active_volume: float,
        R_abs_per_length: float,
        device_transit_time: float,
        Q: float,
        threshold: float = 0.01,
) -> RegimeReport:
    """Check that emission and absorption rates per mode are far below the
    photon escape rates.

    The check is an order-of-magnitude estimate. The photon escape rate of a
    weakly confining LED "cavity" is estimated from the time a photon needs
    to cross it, `1/kappa ~ V_cavity^(1/3)/c + Q t_device`. The absorption
    rate per mode scales as `V_active/V_cavity`; `R_abs_per_length` is the
    absorption rate divided by `c` for a device where the mode is confined
    to the active layer (`V_active = V_cavity`), so that for a laser diode
    `R_abs_per_length ~ 1e6 1/m` against `kappa/c ~ 1e4 1/m`.

    Parameters
    ----------
    device : DeviceParams
        The device. Its `kappa0` values are used for the photon numbers.
    pump : PumpSpec
        The pump, needed for the spontaneous emission rates.
    cavity_volume, active_volume : float
        Volumes of the "cavity" and of the active layer [m^3].
    R_abs_per_length : float
        Absorption rate over speed of light for a fully confined mode [1/m].
    device_transit_time : float
        Time for a photon to traverse the device [s].
    Q : float
        Quality factor of the device.
    threshold : float, optional
        A ratio passes if it is below `threshold`. Defaults to 0.01.

    Returns
    -------
    RegimeReport

    Raises
    ------
    UnphysicalParameterError
        If a volume, `R_abs_per_length`, `device_transit_time` or `Q` is not
        positive.
    """
    for _name, _value in (
            ('cavity_volume', cavity_volume),
            ('active_volume', active_volume),
            ('R_abs_per_length', R_abs_per_length),
            ('device_transit_time', device_transit_time),
            ('Q', Q),
    ):
        if not _value > 0:
            raise UnphysicalParameterError(
                f'`{_name}` must be positive, got {_value}'
            )
    op: OperatingPoint = derive_operating_point(device, pump)
    kappa_estimate: float = 1.0 / (
        cavity_volume**(1.0 / 3.0) / SPEED_OF_LIGHT + Q * device_transit_time
    )
    R_abs: float = SPEED_OF_LIGHT * R_abs_per_length \
        * active_volume / cavity_volume
    R_abs_ratio: float = R_abs / kappa_estimate
    ratios: list[tuple[str, float]] = [
        (f'n_l0[{_i + 1}]', _n) for _i, _n in enumerate(op.n_l0)
    ] + [('R_abs_ratio', R_abs_ratio)]
    failed: list[tuple[str, float]] = [
        (_name, _ratio) for _name, _ratio in ratios if not _ratio < threshold
    ]
    return RegimeReport(
        kappa_estimate=kappa_estimate,
        n_l0=op.n_l0,
        R_abs=R_abs,
        R_abs_ratio=R_abs_ratio,
        threshold=threshold,
        passed=len(failed) == 0,
        failed_checks=None if len(failed) == 0 else pd.DataFrame(
            failed, columns=['quantity', 'value']
        ),
    )
###END def check_low_injection
