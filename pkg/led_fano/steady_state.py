"""Nonlinear steady state with carrier-number-dependent lifetimes.

The carrier number `n_c` at pump rate `P` solves `P = R_r(n_c) + R_nr(n_c)`,
where `R_r = n_c/tau_r(n_c)` and `R_nr = n_c/tau_nr(n_c)` are the radiative
and non-radiative recombination rates. Sampling the solution over a range of
pump rates gives the I-L (injection-light) curve, whose secant and tangent
slopes are the quantum efficiency and the differential quantum efficiency.

Sensitivities follow the sign convention `K_r = -dln tau_r/dln n_c` and
`K_nr = +dln tau_nr/dln n_c`, so that a rate law `R ~ n^p` has `K_r = p - 1`
when radiative and `K_nr = 1 - p` when non-radiative. With this convention
the small-signal result `eta_d = beta0/(1 + eps_prime)`,
`eps_prime = eps0 (1 - K_nr)/(1 + K_r)`, equals the tangent slope of the
I-L curve.

Functions
---------
solve_carrier_number(P0, model) -> n_c0
il_curve(P_range, model, beta0, n_points) -> ILCurve
extract_K(model, n_c0, method) -> (K_r, K_nr)
consistency_check(model, P0, beta0, rtol) -> ConsistencyReport
device_at(model, P0, kappa0, xi) -> DeviceParams
"""
import dataclasses
import logging
import math
import typing as tp

import numpy as np
import pandas as pd
from scipy import optimize

from .core_params import DeviceParams, ModeParams, efficiencies_from_K
from .exceptions import NoSteadyStateError, UnphysicalParameterError
from .qw_semission import QWParams, degenerate_density_scale, k_r_of_density


logger = logging.getLogger(__name__)

MAX_BRACKET_DECADES: tp.Final[int] = 60
"""How many decades the root bracket may expand in each direction."""
STEADY_STATE_RTOL: tp.Final[float] = 1e-10
"""Maximum relative residual `|R_tot(n_c) - P|/P` of a returned root."""
DEFAULT_REL_STEP: tp.Final[float] = 1e-4
"""Default relative step for central differences."""



class RateLaw(tp.Protocol):
    """A recombination rate as a function of the carrier number."""

    def rate(self, n: float) -> float:
        """Recombination rate [1/s] at carrier number `n`."""
        ...

    def log_slope(self, n: float) -> float:
        """`dln R/dln n` at carrier number `n`."""
        ...

    @property
    def reference_number(self) -> float:
        """A typical carrier number, used to start the root bracket."""
        ...

###END class RateLaw


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class PowerLaw:
    """Power-law recombination rate `R(n) = (n_ref/tau_ref) (n/n_ref)^p`.

    Attributes
    ----------
    exponent : float
        The exponent `p`. `p = 1` gives a constant lifetime, `p = 2`
        bimolecular recombination.
    tau_ref : float
        Lifetime at `n = n_ref` [s].
    n_ref : float
        Reference carrier number.
    """
    exponent: float
    tau_ref: float
    n_ref: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.exponent):
            raise UnphysicalParameterError(
                f'`exponent` must be finite, got {self.exponent}'
            )
        if not (self.tau_ref > 0 and math.isfinite(self.tau_ref)):
            raise UnphysicalParameterError(
                f'`tau_ref` must be positive and finite, got {self.tau_ref}'
            )
        if not (self.n_ref > 0 and math.isfinite(self.n_ref)):
            raise UnphysicalParameterError(
                f'`n_ref` must be positive and finite, got {self.n_ref}'
            )

    def rate(self, n: float) -> float:
        return (self.n_ref / self.tau_ref) * (n / self.n_ref)**self.exponent

    def log_slope(self, n: float) -> float:
        return self.exponent

    @property
    def reference_number(self) -> float:
        return self.n_ref

###END class PowerLaw


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class QuantumWellEmission:
    """Band-edge quantum-well emission `R(n) = rate_max (1 - exp(-n_s/n0))`
    with sheet density `n_s = n/area`.

    Attributes
    ----------
    T : float
        Temperature [K].
    area : float
        Area of the well [m^2], converting carrier number to sheet density.
    rate_max : float
        Saturated emission rate [1/s].
    m_eff : float
        Effective mass in units of the free-electron mass.
    """
    T: float
    area: float
    rate_max: float
    m_eff: float = 0.1

    def __post_init__(self) -> None:
        for _name in ('T', 'area', 'rate_max', 'm_eff'):
            _value: float = getattr(self, _name)
            if not (_value > 0 and math.isfinite(_value)):
                raise UnphysicalParameterError(
                    f'`{_name}` must be positive and finite, got {_value}'
                )

    @property
    def n0(self) -> float:
        """Degenerate density scale [1/m^2]."""
        return degenerate_density_scale(self.m_eff, self.T)

    def rate(self, n: float) -> float:
        return self.rate_max * -math.expm1(-(n / self.area) / self.n0)

    def log_slope(self, n: float) -> float:
        qw = QWParams(T=self.T, n_s=n / self.area, m_eff=self.m_eff)
        return 1.0 + float(k_r_of_density(qw))

    @property
    def reference_number(self) -> float:
        return self.area * self.n0

###END class QuantumWellEmission


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class LifetimeModel:
    """Radiative and non-radiative recombination laws of a device.

    Attributes
    ----------
    radiative : PowerLaw or QuantumWellEmission
        Radiative recombination rate law.
    nonradiative : PowerLaw, optional
        Non-radiative recombination rate law. None means that there is no
        non-radiative channel (infinite `tau_nr`).
    """
    radiative: PowerLaw | QuantumWellEmission
    nonradiative: PowerLaw | None = None

    def radiative_rate(self, n: float) -> float:
        return self.radiative.rate(n)

    def nonradiative_rate(self, n: float) -> float:
        return 0.0 if self.nonradiative is None else self.nonradiative.rate(n)

    def total_rate(self, n: float) -> float:
        return self.radiative_rate(n) + self.nonradiative_rate(n)

    def tau_r(self, n: float) -> float:
        """Radiative lifetime `n/R_r(n)` [s]."""
        return n / self.radiative_rate(n)

    def tau_nr(self, n: float) -> float:
        """Non-radiative lifetime `n/R_nr(n)` [s], `math.inf` without a
        non-radiative channel."""
        rate: float = self.nonradiative_rate(n)
        return math.inf if rate == 0 else n / rate

###END class LifetimeModel


def _find_bracket(P0: float, model: LifetimeModel) -> tuple[float, float]:
    """Expand a bracket geometrically around the model's reference number
    until the residual `R_tot(n) - P0` changes sign."""
    n_start: float = model.radiative.reference_number
    n_lo: float = n_start
    n_hi: float = n_start
    for _ in range(MAX_BRACKET_DECADES):
        if model.total_rate(n_lo) <= P0:
            break
        n_lo /= 10.0
    for _ in range(MAX_BRACKET_DECADES):
        if model.total_rate(n_hi) >= P0:
            break
        n_hi *= 10.0
    if not (model.total_rate(n_lo) <= P0 <= model.total_rate(n_hi)):
        raise NoSteadyStateError(
            f'No steady state in search range: the recombination rate does '
            f'not reach P0 = {P0} for carrier numbers in [{n_lo:g}, {n_hi:g}]'
        )
    logger.debug('Bracket for P0 = %g: [%g, %g]', P0, n_lo, n_hi)
    return n_lo, n_hi
###END def _find_bracket


def solve_carrier_number(P0: float, model: LifetimeModel) -> float:
    """Solve the steady-state rate equation for the carrier number.

    Finds `n_c0` with `P0 = n_c0 (1/tau_r(n_c0) + 1/tau_nr(n_c0))` using
    Brent's method on a geometrically expanded bracket, falling back to
    bisection if Brent's method fails or leaves a residual above
    `STEADY_STATE_RTOL`.

    Parameters
    ----------
    P0 : float
        Pump rate [1/s].
    model : LifetimeModel
        The recombination laws.

    Returns
    -------
    float
        The steady-state carrier number.

    Raises
    ------
    UnphysicalParameterError
        If `P0` is not positive.
    NoSteadyStateError
        If the residual does not change sign within the search range, or the
        root found does not meet the residual tolerance.
    """
    if not (P0 > 0 and math.isfinite(P0)):
        raise UnphysicalParameterError(
            f'`P0` must be positive and finite, got {P0}'
        )
    n_lo, n_hi = _find_bracket(P0, model)
    if model.total_rate(n_lo) == P0:
        return n_lo
    if model.total_rate(n_hi) == P0:
        return n_hi

    def residual(n: float) -> float:
        return model.total_rate(n) - P0

    def relative_residual(n: float) -> float:
        return abs(residual(n)) / P0

    xtol: float = n_lo * 1e-15
    n_c0: float
    try:
        n_c0 = optimize.brentq(residual, n_lo, n_hi, xtol=xtol, maxiter=500)
    except RuntimeError as _err:
        logger.debug('brentq failed for P0 = %g (%s), bisecting', P0, _err)
        n_c0 = math.nan
    if not (math.isfinite(n_c0) and relative_residual(n_c0) < STEADY_STATE_RTOL):
        n_c0 = optimize.bisect(residual, n_lo, n_hi, xtol=xtol, maxiter=4000)
    if not relative_residual(n_c0) < STEADY_STATE_RTOL:
        raise NoSteadyStateError(
            f'No steady state in search range [{n_lo:g}, {n_hi:g}] for '
            f'P0 = {P0}: best root {n_c0:g} has relative residual '
            f'{relative_residual(n_c0):g}'
        )
    return n_c0
###END def solve_carrier_number


def extract_K(
        model: LifetimeModel,
        n_c0: float,
        method: tp.Literal['analytic', 'numeric'] = 'analytic',
        rel_step: float = DEFAULT_REL_STEP,
) -> tuple[float, float]:
    """Return the lifetime sensitivities `(K_r, K_nr)` at `n_c0`.

    `method='analytic'` uses the logarithmic slopes of the rate laws
    (`K_r = p_r - 1` for a radiative power law). `method='numeric'` takes
    central differences of `ln tau` with respect to `ln n_c` with relative
    step `rel_step`. Without a non-radiative channel, `K_nr = 0`.

    Raises
    ------
    UnphysicalParameterError
        If `n_c0` is not positive or a derivative is not finite.
    ValueError
        If `method` is not recognized.
    """
    if not n_c0 > 0:
        raise UnphysicalParameterError(f'`n_c0` must be positive, got {n_c0}')
    K_r: float
    K_nr: float
    if method == 'analytic':
        K_r = model.radiative.log_slope(n_c0) - 1.0
        K_nr = 0.0 if model.nonradiative is None \
            else 1.0 - model.nonradiative.log_slope(n_c0)
    elif method == 'numeric':
        n_up: float = n_c0 * (1.0 + rel_step)
        n_down: float = n_c0 * (1.0 - rel_step)
        dlog_n: float = math.log(n_up / n_down)
        K_r = -math.log(model.tau_r(n_up) / model.tau_r(n_down)) / dlog_n
        K_nr = 0.0 if model.nonradiative is None \
            else math.log(model.tau_nr(n_up) / model.tau_nr(n_down)) / dlog_n
    else:
        raise ValueError(
            f'`method` must be "analytic" or "numeric", got {method!r}'
        )
    if not (math.isfinite(K_r) and math.isfinite(K_nr)):
        raise UnphysicalParameterError(
            f'Non-finite lifetime sensitivity at n_c0 = {n_c0}: '
            f'K_r = {K_r}, K_nr = {K_nr}'
        )
    return K_r, K_nr
###END def extract_K


def _il_point(
        P: float,
        model: LifetimeModel,
        beta0: float,
        rel_step: float,
) -> tuple[float, float, float, float, float, float]:
    """Return `(P, n_c, V, N, eta_num, eta_d_num)` at pump rate `P`."""
    try:
        n_c: float = solve_carrier_number(P, model)
        dP: float = rel_step * P
        V_up: float = model.radiative_rate(solve_carrier_number(P + dP, model))
        V_down: float = model.radiative_rate(
            solve_carrier_number(P - dP, model)
        )
    except NoSteadyStateError as _err:
        raise NoSteadyStateError(f'At P = {P}: {_err}') from _err
    V: float = model.radiative_rate(n_c)
    N: float = beta0 * V
    return P, n_c, V, N, N / P, beta0 * (V_up - V_down) / (2.0 * dP)
###END def _il_point


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class ILCurve:
    """A sampled I-L curve.

    Attributes
    ----------
    data : pandas.DataFrame
        One row per pump rate, in increasing order, with columns `P` (pump
        rate), `n_c` (carrier number), `V` (cavity output flux), `N`
        (detected flux), `eta_num` (secant slope `N/P`) and `eta_d_num`
        (tangent slope `dN/dP`).
    beta0 : float
        Transfer efficiency used for `N = beta0 V`.
    """
    data: pd.DataFrame
    beta0: float

    COLUMNS: tp.ClassVar[tuple[str, ...]] = (
        'P', 'n_c', 'V', 'N', 'eta_num', 'eta_d_num'
    )

    def to_frame(self) -> pd.DataFrame:
        return self.data.copy()

###END class ILCurve


def il_curve(
        P_range: tuple[float, float],
        model: LifetimeModel,
        beta0: float,
        n_points: int = 50,
        rel_step: float = DEFAULT_REL_STEP,
        spacing: tp.Literal['linear', 'log'] = 'linear',
) -> ILCurve:
    """Sample the I-L curve of a device.

    Parameters
    ----------
    P_range : (float, float)
        Smallest and largest pump rate [1/s]. Both are sampled.
    model : LifetimeModel
        The recombination laws.
    beta0 : float
        Transfer efficiency from cavity output to detected photons.
    n_points : int, optional
        Number of pump rates. Defaults to 50.
    rel_step : float, optional
        Relative pump step for the central-difference tangent slope.
        Defaults to `1e-4`.
    spacing : {'linear', 'log'}, optional
        Spacing of the pump rates. Defaults to 'linear'.

    Returns
    -------
    ILCurve

    Raises
    ------
    UnphysicalParameterError
        If the pump range is not positive and increasing, or `beta0` is
        outside `[0, 1]`.
    NoSteadyStateError
        If the steady state cannot be found at some pump rate. The message
        names that pump rate.
    """
    P_min, P_max = P_range
    if not 0 < P_min < P_max:
        raise UnphysicalParameterError(
            f'Pump range must be positive and increasing, got {P_range}'
        )
    if not 0.0 <= beta0 <= 1.0:
        raise UnphysicalParameterError(
            f'`beta0` must lie in [0, 1], got {beta0}'
        )
    if n_points < 2:
        raise ValueError(f'`n_points` must be at least 2, got {n_points}')
    if not 0 < rel_step < 1:
        raise ValueError(f'`rel_step` must lie in (0, 1), got {rel_step}')
    pump_rates: np.ndarray = np.geomspace(P_min, P_max, n_points) \
        if spacing == 'log' else np.linspace(P_min, P_max, n_points)
    logger.info(
        'Sampling I-L curve at %d pump rates in [%g, %g]',
        n_points, P_min, P_max,
    )
    rows: list[tuple[float, ...]] = [
        _il_point(float(_P), model, beta0, rel_step) for _P in pump_rates
    ]
    return ILCurve(
        data=pd.DataFrame(rows, columns=list(ILCurve.COLUMNS)),
        beta0=beta0,
    )
###END def il_curve


@dataclasses.dataclass(kw_only=True, slots=True)
class ConsistencyReport:
    """Comparison of the numerical I-L tangent slope with the small-signal
    differential efficiency.

    Attributes
    ----------
    P0, n_c0 : float
        Pump rate and steady-state carrier number.
    K_r, K_nr : float
        Sensitivities from `extract_K`.
    eps0, eps_prime : float
        `tau_r/tau_nr` at `n_c0` and its differential counterpart.
    eta_num, eta_d_num : float
        Secant and tangent slopes of the I-L curve at `P0`.
    eta_d_theory : float
        `beta0/(1 + eps_prime)`.
    rel_error : float
        `|eta_d_num - eta_d_theory|/eta_d_theory`.
    rtol : float
        Tolerance on `rel_error`.
    passed : bool
        Whether `rel_error < rtol`.
    failed_checks : pandas.DataFrame or None
        A one-row frame with both efficiencies if the check failed, else
        None.
    """
    P0: float
    n_c0: float
    K_r: float
    K_nr: float
    eps0: float
    eps_prime: float
    eta_num: float
    eta_d_num: float
    eta_d_theory: float
    rel_error: float
    rtol: float
    passed: bool
    failed_checks: pd.DataFrame | None

    def to_dict(self) -> dict[str, float | bool]:
        return {
            _field.name: getattr(self, _field.name)
            for _field in dataclasses.fields(self)
            if _field.name != 'failed_checks'
        }

###END class ConsistencyReport


def consistency_check(
        model: LifetimeModel,
        P0: float,
        beta0: float,
        rtol: float = 1e-4,
        rel_step: float = DEFAULT_REL_STEP,
) -> ConsistencyReport:
    """Check that the I-L tangent slope at `P0` equals `beta0/(1 +
    eps_prime)` with `eps_prime` built from `extract_K`.

    The check never raises on a mismatch; the outcome is in
    `ConsistencyReport.passed`.
    """
    P, n_c0, _V, _N, eta_num, eta_d_num = _il_point(P0, model, beta0, rel_step)
    K_r, K_nr = extract_K(model, n_c0)
    eps0: float = model.nonradiative_rate(n_c0) / model.radiative_rate(n_c0)
    _eta, eta_d_theory = efficiencies_from_K(eps0, beta0, K_r, K_nr)
    eps_prime: float = eps0 * (1.0 - K_nr) / (1.0 + K_r)
    rel_error: float = abs(eta_d_num - eta_d_theory) / eta_d_theory \
        if eta_d_theory != 0 else abs(eta_d_num)
    passed: bool = rel_error < rtol
    if not passed:
        logger.warning(
            'I-L slope %g disagrees with small-signal eta_d %g at P0 = %g',
            eta_d_num, eta_d_theory, P0,
        )
    return ConsistencyReport(
        P0=P,
        n_c0=n_c0,
        K_r=K_r,
        K_nr=K_nr,
        eps0=eps0,
        eps_prime=eps_prime,
        eta_num=eta_num,
        eta_d_num=eta_d_num,
        eta_d_theory=eta_d_theory,
        rel_error=rel_error,
        rtol=rtol,
        passed=passed,
        failed_checks=None if passed else pd.DataFrame(
            [(P0, eta_d_num, eta_d_theory, rel_error)],
            columns=['P0', 'eta_d_num', 'eta_d_theory', 'rel_error'],
        ),
    )
###END def consistency_check


def device_at(
        model: LifetimeModel,
        P0: float,
        *,
        kappa0: float,
        xi: float = 1.0,
) -> DeviceParams:
    """Linearize a lifetime model at pump rate `P0` into single-mode device
    parameters.

    Parameters
    ----------
    model : LifetimeModel
        The recombination laws.
    P0 : float
        Pump rate [1/s].
    kappa0 : float
        Photon escape rate of the mode [1/s].
    xi : float, optional
        Detection transmission of the mode. Defaults to 1.

    Returns
    -------
    DeviceParams
        A single-mode device whose lifetimes and sensitivities are those of
        `model` at the steady state for `P0`.
    """
    n_c0: float = solve_carrier_number(P0, model)
    K_r, K_nr = extract_K(model, n_c0)
    return DeviceParams(
        modes=(ModeParams(
            kappa0=kappa0,
            tau_r_l0=model.tau_r(n_c0),
            K_r_l=K_r,
            xi_l=xi,
        ),),
        tau_nr0=model.tau_nr(n_c0),
        K_nr=K_nr,
    )
###END def device_at
