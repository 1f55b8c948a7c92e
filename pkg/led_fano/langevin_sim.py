"""Monte Carlo simulation of the linearized Langevin rate equations.

The simulator integrates the small-signal equations for the carrier number
and the photon number of each mode, driven by Gaussian white noise with the
diffusion coefficients of the shot-noise sources, passes the mode output
fluxes through the beam-splitter detection model, and estimates the Fano
factor spectrum of the detected flux from segment-averaged periodograms.

Since all results of the linearized theory are second moments, Gaussian
noise with the exact diffusion coefficients reproduces them without any
event-level photon counting.

Per-step noise draws have variance `D/dt`, where `D` is the diffusion
coefficient of the source:

========================  ==================================
source                    `D`
========================  ==================================
pump, `Gamma_P`           `W_e P0`
non-radiative, `G_nr`     `n_c0/tau_nr0`
radiative, `F_r,l`        `V_l0 = n_c0/tau_r_l0`
escape, `F_kappa,l`       `kappa_l n_l0 = V_l0`
partition, mode `l`       `xi_l (1 - xi_l) V_l0`
========================  ==================================

The total radiative carrier noise is `Gamma_r = -sum_l F_r,l`, which gives
`<Gamma_r^2> = n_c0/tau_r0` and `<Gamma_r F_r,l> = -V_l0` by construction.

Functions
---------
synthesize_noise(op, W_e, dt, n_steps, rng) -> NoiseState
integrate(op, W_e, cfg, modulation, rng, noise, noise_state) -> SimulationRun
detect(run, op, rng) -> numpy.ndarray
estimate_fano(delta_N, N0, cfg) -> SpectrumEstimate
run_experiment(device, pump, cfg, n_workers) -> ExperimentResult
check_agreement(estimate, analytic) -> AgreementCheckResult
log_omega_grid(omega_min, omega_max, n_omega) -> tuple[float, ...]
"""
from __future__ import annotations

from collections.abc import Sequence
import concurrent.futures
import dataclasses
import logging
import math
import os
import typing as tp

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy import signal

from .analytic import FanoQuery, carrier_variance, fano_master
from .core_params import (
    DeviceParams,
    OperatingPoint,
    PumpSpec,
    derive_operating_point,
)
from .exceptions import (
    ConfigError,
    InsufficientDataError,
    SimulationInstabilityError,
    UnphysicalParameterError,
    ZeroEfficiencyError,
)
from .key_utils import not_none


logger = logging.getLogger(__name__)

MIN_STEPS_PER_TAU_DD: tp.Final[int] = 50
"""`dt` may be at most `tau_dd` divided by this number."""
MIN_SEGMENTS: tp.Final[int] = 20
"""A series must span at least this many segment lengths."""
INSTABILITY_FACTOR: tp.Final[float] = 1e6
"""A carrier excursion this many times its expected scale aborts a run."""
THREADS_ENV_VAR: tp.Final[str] = 'LED_FANO_THREADS'
"""Environment variable capping the number of simulation threads."""



def log_omega_grid(
        omega_min: float,
        omega_max: float,
        n_omega: int,
) -> tuple[float, ...]:
    """Logarithmic angular frequency grid with both endpoints included
    exactly."""
    if not 0 < omega_min < omega_max:
        raise ValueError(
            'Frequency bounds must satisfy 0 < omega_min < omega_max, got '
            f'{omega_min}, {omega_max}'
        )
    if n_omega < 2:
        raise ValueError(f'`n_omega` must be at least 2, got {n_omega}')
    grid: np.ndarray = np.geomspace(omega_min, omega_max, n_omega)
    grid[0] = omega_min
    grid[-1] = omega_max
    return tuple(grid.tolist())


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class SimConfig:
    """Settings of a Monte Carlo run.

    Attributes
    ----------
    dt : float
        Time step [s]. Must not exceed `tau_dd/50` for the simulated
        operating point (checked by `check_step`).
    duration : float
        Length of each trajectory [s], at least `20 * segment_length * dt`.
    n_traj : int
        Number of independent trajectories.
    seed : int
        Master seed, `0 <= seed < 2**64`.
    segment_length : int
        Samples per spectral segment.
    omega_grid : tuple of float
        Angular frequencies [rad/s] at which the Fano factor is estimated,
        strictly increasing.
    band_fraction : float
        Relative width of the frequency band averaged around each grid
        point. The band is never narrower than one frequency bin on each
        side. Defaults to 0.2.
    """
    dt: float
    duration: float
    n_traj: int
    seed: int
    segment_length: int
    omega_grid: tuple[float, ...]
    band_fraction: float = 0.2

    def __post_init__(self) -> None:
        if not isinstance(self.omega_grid, tuple):
            object.__setattr__(
                self, 'omega_grid', tuple(float(_w) for _w in self.omega_grid)
            )
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f'`dt` must be positive, got {self.dt}')
        if self.segment_length < 8 or self.segment_length % 2 != 0:
            raise ValueError(
                '`segment_length` must be an even number of at least 8 '
                f'samples, got {self.segment_length}'
            )
        required_duration: float = MIN_SEGMENTS * self.segment_length * self.dt
        if self.n_steps < MIN_SEGMENTS * self.segment_length:
            raise InsufficientDataError(
                f'`duration` = {self.duration} s is too short: at least '
                f'{required_duration:g} s ({MIN_SEGMENTS} segments of '
                f'{self.segment_length} steps) is required'
            )
        if self.n_traj < 1:
            raise ValueError(f'`n_traj` must be at least 1, got {self.n_traj}')
        if not 0 <= self.seed < 2**64:
            raise ValueError(
                f'`seed` must be an unsigned 64-bit integer, got {self.seed}'
            )
        grid: np.ndarray = np.asarray(self.omega_grid)
        if len(grid) == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ValueError(
                '`omega_grid` must be non-empty, positive and strictly '
                'increasing'
            )
        if not 0 < self.band_fraction < 1:
            raise ValueError(
                f'`band_fraction` must lie in (0, 1), got {self.band_fraction}'
            )
    ###END def SimConfig.__post_init__

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def check_step(self, op: OperatingPoint) -> None:
        """Raise `UnphysicalParameterError` if `dt > tau_dd/50`."""
        if self.dt > op.tau_dd / MIN_STEPS_PER_TAU_DD:
            raise UnphysicalParameterError(
                f'Time step dt = {self.dt:g} s is too large for tau_dd = '
                f'{op.tau_dd:g} s; use dt <= {op.tau_dd / MIN_STEPS_PER_TAU_DD:g} s'
            )

###END class SimConfig


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True, eq=False)
class NoiseState:
    """Per-step noise draws of one trajectory.

    Each attribute is an array with one row per time step; per-mode sources
    have one column per mode.

    Attributes
    ----------
    pump : numpy.ndarray
        Total pump noise.
    gamma_nr : numpy.ndarray
        Non-radiative carrier noise.
    F_r : numpy.ndarray
        Radiative noise of each mode.
    F_kappa : numpy.ndarray
        Escape noise of each mode.
    partition : numpy.ndarray
        Detection partition noise of each mode.
    """
    pump: npt.NDArray[np.float64]
    gamma_nr: npt.NDArray[np.float64]
    F_r: npt.NDArray[np.float64]
    F_kappa: npt.NDArray[np.float64]
    partition: npt.NDArray[np.float64]

    @property
    def gamma_r(self) -> npt.NDArray[np.float64]:
        """Radiative carrier noise, `-sum_l F_r,l`."""
        return -self.F_r.sum(axis=1)

    @property
    def carrier_drive(self) -> npt.NDArray[np.float64]:
        """Total noise acting on the carrier number."""
        return self.pump + self.gamma_r + self.gamma_nr

    @classmethod
    def zeros(cls, n_steps: int, n_modes: int) -> tp.Self:
        return cls(
            pump=np.zeros(n_steps),
            gamma_nr=np.zeros(n_steps),
            F_r=np.zeros((n_steps, n_modes)),
            F_kappa=np.zeros((n_steps, n_modes)),
            partition=np.zeros((n_steps, n_modes)),
        )

    def coarsen(self, factor: int) -> tp.Self:
        """Noise of the same realization on a step `factor` times longer.

        Each coarse draw is the mean of `factor` consecutive draws, which
        keeps the integral of every source over each coarse step and hence
        its variance `D/dt` at the longer step.
        """
        n_steps: int = len(self.pump)
        if factor < 1 or n_steps % factor != 0:
            raise ValueError(
                f'Cannot coarsen {n_steps} steps by a factor of {factor}'
            )

        def _mean(values: np.ndarray) -> np.ndarray:
            return values.reshape(
                n_steps // factor, factor, *values.shape[1:]
            ).mean(axis=1)

        return type(self)(
            pump=_mean(self.pump),
            gamma_nr=_mean(self.gamma_nr),
            F_r=_mean(self.F_r),
            F_kappa=_mean(self.F_kappa),
            partition=_mean(self.partition),
        )
    ###END def NoiseState.coarsen

###END class NoiseState


def synthesize_noise(
        op: OperatingPoint,
        W_e: float,
        dt: float,
        n_steps: int,
        rng: np.random.Generator,
) -> NoiseState:
    """Draw the white-noise sources of one trajectory.

    All sources are independent Gaussian draws except `Gamma_r`, which is
    derived from the mode noises (see `NoiseState.gamma_r`), so the joint
    covariance is positive semidefinite by construction. Draws are taken
    from `rng` in a fixed order, so a given generator state always produces
    the same noise.

    Parameters
    ----------
    op : OperatingPoint
        The operating point.
    W_e : float
        Pump Fano factor. `W_e = 0` gives identically zero pump noise.
    dt : float
        Time step [s].
    n_steps : int
        Number of steps.
    rng : numpy.random.Generator
        Random number generator.
    """
    if not W_e >= 0:
        raise UnphysicalParameterError(f'`W_e` must be non-negative, got {W_e}')
    V_l0: np.ndarray = np.asarray(op.V_l0)
    xi: np.ndarray = np.asarray(op.xi)
    n_modes: int = op.n_modes
    pump_std: float = math.sqrt(W_e * op.P0 / dt)
    nr_std: float = math.sqrt(op.n_c0 * op.inv_tau_nr0 / dt)
    mode_std: np.ndarray = np.sqrt(V_l0 / dt)
    escape_std: np.ndarray = np.sqrt(np.asarray(op.kappa0) * np.asarray(op.n_l0) / dt)
    partition_std: np.ndarray = np.sqrt(xi * (1.0 - xi) * V_l0 / dt)
    return NoiseState(
        pump=pump_std * rng.standard_normal(n_steps),
        gamma_nr=nr_std * rng.standard_normal(n_steps),
        F_r=mode_std * rng.standard_normal((n_steps, n_modes)),
        F_kappa=escape_std * rng.standard_normal((n_steps, n_modes)),
        partition=partition_std * rng.standard_normal((n_steps, n_modes)),
    )
###END def synthesize_noise


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True, eq=False)
class SimulationRun:
    """Time series of one trajectory.

    Attributes
    ----------
    dt : float
        Time step [s].
    n_c : numpy.ndarray
        Carrier-number deviation at the step boundaries, `n_steps + 1`
        values.
    n_l : numpy.ndarray
        Photon-number deviation of each mode at the step boundaries, shape
        `(n_steps + 1, n_modes)`.
    V_l : numpy.ndarray
        Output-flux deviation of each mode averaged over each step, shape
        `(n_steps, n_modes)`.
    noise : NoiseState
        The noise that drove the trajectory.
    """
    dt: float
    n_c: npt.NDArray[np.float64]
    n_l: npt.NDArray[np.float64]
    V_l: npt.NDArray[np.float64]
    noise: NoiseState

    @property
    def n_steps(self) -> int:
        return len(self.V_l)

    @property
    def t(self) -> npt.NDArray[np.float64]:
        """Times of the step boundaries [s]."""
        return np.arange(self.n_steps + 1) * self.dt

###END class SimulationRun


def _check_stability(
        n_c: np.ndarray,
        op: OperatingPoint,
        W_e: float,
        modulation: tuple[float, float] | None,
) -> None:
    scale: float = math.sqrt(carrier_variance(op, W_e))
    if modulation is not None:
        scale = max(scale, modulation[0] * op.tau_dd)
    bound: float = INSTABILITY_FACTOR * scale
    bad: np.ndarray = ~(np.abs(n_c) <= bound)
    if np.any(bad):
        step: int = int(np.argmax(bad))
        raise SimulationInstabilityError(
            f'Trajectory diverged at step {step}: |dn_c| = '
            f'{abs(n_c[step]):g} exceeds {INSTABILITY_FACTOR:g} times its '
            f'expected scale {scale:g} (tau_dd = {op.tau_dd:g} s)'
        )
###END def _check_stability


def integrate(
        op: OperatingPoint,
        W_e: float,
        cfg: SimConfig,
        modulation: tuple[float, float] | None = None,
        rng: np.random.Generator | None = None,
        noise: bool = True,
        noise_state: NoiseState | None = None,
) -> SimulationRun:
    """Integrate the linearized rate equations over one trajectory.

    The carrier deviation follows
    `d dn_c = (dP - dn_c/tau_dd) dt + noise`, integrated with the
    Euler-Maruyama scheme. The photon modes relax at rates `kappa_l` that are
    usually much faster than `1/dt`; they are advanced with the exact
    exponential step for a drive that is constant over the step, and the
    step-averaged output flux is taken from photon-number conservation over
    the step,
    `dV_l = dn_c/tau_r_l_eff + F_r,l - (dn_l(t + dt) - dn_l(t))/dt`, which
    equals the step average of `kappa_l dn_l - F_kappa,l` with the same
    `F_kappa,l` draws that drove `dn_l`.

    With noise, the carrier deviation starts from a draw of its stationary
    distribution; without noise it starts at zero.

    Parameters
    ----------
    op : OperatingPoint
        The operating point.
    W_e : float
        Pump Fano factor.
    cfg : SimConfig
        Step size and trajectory length.
    modulation : (float, float), optional
        Sinusoidal pump modulation `(amplitude [1/s], omega [rad/s])`,
        `dP(t) = amplitude * sin(omega t)`.
    rng : numpy.random.Generator, optional
        Random number generator. Defaults to one seeded with `cfg.seed`.
    noise : bool, optional
        Whether to drive the system with noise. Defaults to True.
    noise_state : NoiseState, optional
        Noise to drive the system with instead of fresh draws from `rng`,
        e.g. a finer realization passed through `NoiseState.coarsen`. It
        must have `cfg.n_steps` rows. `rng` still draws the initial carrier
        deviation.

    Raises
    ------
    UnphysicalParameterError
        If `cfg.dt > tau_dd/50`.
    ValueError
        If `noise_state` does not have `cfg.n_steps` rows.
    SimulationInstabilityError
        If the carrier deviation exceeds a million times its expected scale.
    """
    cfg.check_step(op)
    dt: float = cfg.dt
    n_steps: int = cfg.n_steps
    n_modes: int = op.n_modes
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if noise_state is None:
        noise_state = synthesize_noise(op, W_e, dt, n_steps, rng) \
            if noise else NoiseState.zeros(n_steps, n_modes)
    elif len(noise_state.pump) != n_steps:
        raise ValueError(
            f'`noise_state` has {len(noise_state.pump)} steps, expected '
            f'{n_steps}'
        )
    n_c_start: float = rng.normal(0.0, math.sqrt(carrier_variance(op, W_e))) \
        if noise else 0.0

    drive: np.ndarray = noise_state.carrier_drive
    if modulation is not None:
        amplitude, omega = modulation
        t_mid: np.ndarray = (np.arange(n_steps) + 0.5) * dt
        drive = drive + amplitude * np.sin(omega * t_mid)
    decay: float = 1.0 - dt / op.tau_dd
    n_c_after, _ = signal.lfilter(
        [dt], [1.0, -decay], drive, zi=[decay * n_c_start]
    )
    n_c: np.ndarray = np.concatenate(([n_c_start], n_c_after))
    _check_stability(n_c, op, W_e, modulation)

    n_c_mid: np.ndarray = 0.5 * (n_c[:-1] + n_c[1:])
    inv_tau_l: np.ndarray = 1.0 / np.asarray(op.tau_r_l_eff)
    n_l: np.ndarray = np.zeros((n_steps + 1, n_modes))
    V_l: np.ndarray = np.empty((n_steps, n_modes))
    for _l in range(n_modes):
        _kappa_dt: float = op.kappa0[_l] * dt
        _emission: np.ndarray = n_c_mid * inv_tau_l[_l] + noise_state.F_r[:, _l]
        n_l[1:, _l] = signal.lfilter(
            [-math.expm1(-_kappa_dt) / op.kappa0[_l]],
            [1.0, -math.exp(-_kappa_dt)],
            _emission + noise_state.F_kappa[:, _l],
        )
        V_l[:, _l] = _emission - np.diff(n_l[:, _l]) / dt
    logger.debug('Integrated %d steps of %d mode(s)', n_steps, n_modes)
    return SimulationRun(dt=dt, n_c=n_c, n_l=n_l, V_l=V_l, noise=noise_state)
###END def integrate


def detect(
        run: SimulationRun,
        op: OperatingPoint,
        rng: np.random.Generator | None = None,
) -> npt.NDArray[np.float64]:
    """Detected-flux deviation `dN = sum_l xi_l dV_l + partition noise`.

    Parameters
    ----------
    run : SimulationRun
        Output of `integrate`.
    op : OperatingPoint
        The operating point that `run` was integrated for.
    rng : numpy.random.Generator, optional
        If given, fresh partition noise is drawn from it. Otherwise the
        partition noise in `run.noise` is used.
    """
    partition: np.ndarray
    if rng is None:
        partition = run.noise.partition
    else:
        xi: np.ndarray = np.asarray(op.xi)
        partition = np.sqrt(xi * (1.0 - xi) * np.asarray(op.V_l0) / run.dt) \
            * rng.standard_normal(run.V_l.shape)
    return run.V_l @ np.asarray(op.xi) + partition.sum(axis=1)
###END def detect


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class _SpectralBins:
    """Frequency bins of the segment periodograms and the bin range averaged
    for each grid frequency."""
    omegas: np.ndarray
    bands: tuple[tuple[int, int], ...]


def _spectral_bins(cfg: SimConfig) -> _SpectralBins:
    omegas: np.ndarray = 2.0 * math.pi \
        * np.fft.rfftfreq(cfg.segment_length, d=cfg.dt)
    d_omega: float = float(omegas[1])
    # Bin 0 (DC) and the last bin (Nyquist) are never used.
    first: int = 1
    last: int = len(omegas) - 2
    bands: list[tuple[int, int]] = []
    for _omega in cfg.omega_grid:
        if not omegas[first] <= _omega <= omegas[last]:
            raise InsufficientDataError(
                f'Grid frequency {_omega:g} rad/s is outside the resolvable '
                f'range [{omegas[first]:g}, {omegas[last]:g}] rad/s; for '
                'lower frequencies increase segment_length to at least '
                f'{math.ceil(2.0 * math.pi / (_omega * cfg.dt))}'
            )
        _half_width: float = max(cfg.band_fraction * _omega / 2.0, d_omega)
        _in_band: np.ndarray = np.nonzero(
            np.abs(omegas[first:last + 1] - _omega) <= _half_width
        )[0] + first
        bands.append((int(_in_band[0]), int(_in_band[-1]) + 1))
    return _SpectralBins(omegas=omegas, bands=tuple(bands))
###END def _spectral_bins


def _segment_fano(
        delta_N: np.ndarray,
        N0: float,
        cfg: SimConfig,
        bins: _SpectralBins,
) -> np.ndarray:
    """Band-averaged Fano factor of each segment of one series, shape
    `(n_segments, n_grid)`."""
    if len(delta_N) < MIN_SEGMENTS * cfg.segment_length:
        raise InsufficientDataError(
            f'Series of {len(delta_N)} samples is too short: at least '
            f'{MIN_SEGMENTS * cfg.segment_length * cfg.dt:g} s '
            f'({MIN_SEGMENTS * cfg.segment_length} samples) are required'
        )
    _f, _t, density = signal.spectrogram(
        delta_N,
        fs=1.0 / cfg.dt,
        window='hann',
        nperseg=cfg.segment_length,
        noverlap=cfg.segment_length // 2,
        detrend=False,
        return_onesided=True,
        scaling='density',
        mode='psd',
    )
    # One-sided density per Hz; a shot-noise flux of rate N0 has 2 N0.
    fano: np.ndarray = density.T / (2.0 * N0)
    return np.column_stack([
        fano[:, _lo:_hi].mean(axis=1) for _lo, _hi in bins.bands
    ])
###END def _segment_fano


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True, eq=False)
class SpectrumEstimate:
    """Monte Carlo estimate of the photon Fano factor spectrum.

    Attributes
    ----------
    omega_grid : numpy.ndarray
        Angular frequencies [rad/s].
    W_ph : numpy.ndarray
        Estimated Fano factor at each grid frequency.
    stderr : numpy.ndarray
        Standard error of each estimate, from the scatter of the estimates
        of all segments, widened by `overlap_variance_factor` for the
        correlation of overlapping segments. NaN for single-trajectory runs.
    n_segments : int
        Number of segments averaged.
    n_traj : int
        Number of trajectories the segments came from.
    bin_omegas : numpy.ndarray
        Angular frequencies of the periodogram bins.
    bands : tuple of (int, int)
        For each grid frequency, the half-open range of bins averaged.
    """
    omega_grid: npt.NDArray[np.float64]
    W_ph: npt.NDArray[np.float64]
    stderr: npt.NDArray[np.float64]
    n_segments: int
    n_traj: int
    bin_omegas: npt.NDArray[np.float64]
    bands: tuple[tuple[int, int], ...]

    def band_average(
            self,
            func: tp.Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
    ) -> npt.NDArray[np.float64]:
        """Average `func(omega)` over the bins of each grid frequency."""
        return np.array([
            np.mean(func(self.bin_omegas[_lo:_hi])) for _lo, _hi in self.bands
        ])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'omega': self.omega_grid,
            'W_ph_mc': self.W_ph,
            'stderr': self.stderr,
        })

###END class SpectrumEstimate


def overlap_variance_factor(segment_length: int) -> float:
    """Variance of the mean of many half-overlapping Hann periodograms,
    relative to the mean of as many independent ones.

    Adjacent segments share half their samples. Their window overlap
    `c = sum w[n] w[n + L/2] / sum w[n]^2` is 1/6 for the Hann window, and
    their periodograms are correlated by `rho = c^2`. Segments further apart
    do not overlap, which gives the factor `1 + 2 rho`.
    """
    window: np.ndarray = signal.get_window('hann', segment_length)
    shift: int = segment_length // 2
    rho: float = (
        np.dot(window[:-shift], window[shift:]) / np.dot(window, window)
    )**2
    return 1.0 + 2.0 * rho
###END def overlap_variance_factor


def _pool_segments(
        per_series: Sequence[np.ndarray],
        cfg: SimConfig,
        bins: _SpectralBins,
) -> SpectrumEstimate:
    segments: np.ndarray = np.concatenate(per_series, axis=0)
    n_segments: int = segments.shape[0]
    stderr: np.ndarray
    if len(per_series) > 1 and n_segments > 1:
        stderr = segments.std(axis=0, ddof=1) * math.sqrt(
            overlap_variance_factor(cfg.segment_length) / n_segments
        )
    else:
        stderr = np.full(len(cfg.omega_grid), np.nan)
    return SpectrumEstimate(
        omega_grid=np.asarray(cfg.omega_grid),
        W_ph=segments.mean(axis=0),
        stderr=stderr,
        n_segments=n_segments,
        n_traj=len(per_series),
        bin_omegas=bins.omegas,
        bands=bins.bands,
    )
###END def _pool_segments


def estimate_fano(
        delta_N: npt.NDArray[np.float64] | Sequence[npt.NDArray[np.float64]],
        N0: float,
        cfg: SimConfig,
) -> SpectrumEstimate:
    """Estimate the Fano factor spectrum `W_ph = S_N/N0` of a detected-flux
    series.

    Each series is cut into Hann-windowed segments of `cfg.segment_length`
    samples with 50% overlap. Segment periodograms are one-sided densities
    without detrending, normalized so that white noise with the density of
    shot noise at flux `N0` gives `W_ph = 1`. At each grid frequency the
    estimate averages the bins within `max(band_fraction * omega/2, d_omega)`
    of it, where `d_omega` is the bin spacing; DC and Nyquist bins are
    excluded.

    Parameters
    ----------
    delta_N : numpy.ndarray or sequence of numpy.ndarray
        Detected-flux deviation of one trajectory, or one array per
        trajectory. Segments of all trajectories are pooled.
    N0 : float
        Mean detected flux [1/s].
    cfg : SimConfig
        Step size, segment length and frequency grid.

    Raises
    ------
    ZeroEfficiencyError
        If `N0` is not positive.
    InsufficientDataError
        If a series spans fewer than 20 segment lengths, or a grid frequency
        is outside the resolvable range.
    """
    if not N0 > 0:
        raise ZeroEfficiencyError(
            f'The detected flux N0 = {N0} must be positive'
        )
    series: list[np.ndarray] = [np.asarray(delta_N)] \
        if isinstance(delta_N, np.ndarray) and delta_N.ndim == 1 \
        else [np.asarray(_s) for _s in delta_N]
    bins: _SpectralBins = _spectral_bins(cfg)
    return _pool_segments(
        [_segment_fano(_s, N0, cfg, bins) for _s in series], cfg, bins
    )
###END def estimate_fano


@dataclasses.dataclass(kw_only=True, slots=True)
class AgreementCheckResult:
    """Comparison of a Monte Carlo estimate with the analytic spectrum.

    Attributes
    ----------
    passed : bool
        Whether every grid point is within tolerance.
    deviation : numpy.ndarray
        `|W_ph_mc - W_ph_analytic|` at each grid frequency.
    tolerance : numpy.ndarray
        `max(n_sigma * stderr, rel_tol * |W_ph_analytic - 1| + abs_tol)` at
        each grid frequency. Missing standard errors count as zero.
    failed_checks : pandas.DataFrame or None
        Rows (`omega`, `W_ph_mc`, `W_ph_analytic`, `deviation`,
        `tolerance`) of the grid points outside tolerance, or None if all
        passed.
    """
    passed: bool
    deviation: npt.NDArray[np.float64]
    tolerance: npt.NDArray[np.float64]
    failed_checks: pd.DataFrame | None

###END class AgreementCheckResult


def check_agreement(
        estimate: SpectrumEstimate,
        analytic: npt.ArrayLike,
        *,
        n_sigma: float = 3.0,
        rel_tol: float = 0.05,
        abs_tol: float = 0.01,
) -> AgreementCheckResult:
    """Check a Monte Carlo estimate against analytic values on its grid.

    A grid point agrees if `|W_mc - W_analytic| < max(n_sigma * stderr,
    rel_tol * |W_analytic - 1| + abs_tol)`.
    """
    analytic_array: np.ndarray = np.asarray(analytic, dtype=float)
    deviation: np.ndarray = np.abs(estimate.W_ph - analytic_array)
    sigma_tol: np.ndarray = n_sigma * np.nan_to_num(estimate.stderr, nan=0.0)
    tolerance: np.ndarray = np.maximum(
        sigma_tol, rel_tol * np.abs(analytic_array - 1.0) + abs_tol
    )
    failed: np.ndarray = ~(deviation < tolerance)
    failed_checks: pd.DataFrame | None = None
    if np.any(failed):
        failed_checks = pd.DataFrame({
            'omega': estimate.omega_grid[failed],
            'W_ph_mc': estimate.W_ph[failed],
            'W_ph_analytic': analytic_array[failed],
            'deviation': deviation[failed],
            'tolerance': tolerance[failed],
        })
    return AgreementCheckResult(
        passed=failed_checks is None,
        deviation=deviation,
        tolerance=tolerance,
        failed_checks=failed_checks,
    )
###END def check_agreement


@dataclasses.dataclass(kw_only=True, slots=True)
class ExperimentResult:
    """Result of `run_experiment`.

    Attributes
    ----------
    op : OperatingPoint
        The simulated operating point.
    W_e : float
        Pump Fano factor.
    estimate : SpectrumEstimate
        The Monte Carlo estimate.
    analytic : numpy.ndarray
        The master formula evaluated at the grid frequencies.
    analytic_band : numpy.ndarray
        The master formula averaged over the same bins as the estimate. This
        is what the estimate is compared with.
    agreement : AgreementCheckResult
        Outcome of `check_agreement` against `analytic_band`.
    """
    op: OperatingPoint
    W_e: float
    estimate: SpectrumEstimate
    analytic: npt.NDArray[np.float64]
    analytic_band: npt.NDArray[np.float64]
    agreement: AgreementCheckResult

    def to_frame(self) -> pd.DataFrame:
        """Return a frame with columns `omega`, `W_ph_mc`, `stderr`,
        `W_ph_analytic` and `W_ph_analytic_band`."""
        frame: pd.DataFrame = self.estimate.to_frame()
        frame['W_ph_analytic'] = self.analytic
        frame['W_ph_analytic_band'] = self.analytic_band
        return frame

###END class ExperimentResult


def max_workers(n_traj: int) -> int:
    """Number of simulation threads: at most `n_traj`, capped by the
    `LED_FANO_THREADS` environment variable if set."""
    env_value: str | None = os.environ.get(THREADS_ENV_VAR)
    cap: int = os.cpu_count() or 1
    if env_value is not None and env_value.strip() != '':
        try:
            cap = int(env_value)
        except ValueError:
            cap = 0
        if cap < 1:
            raise ConfigError(
                f'must be a positive integer, got {env_value!r}',
                key=THREADS_ENV_VAR,
            )
    return max(1, min(n_traj, cap))
###END def max_workers


def run_experiment(
        device: DeviceParams,
        pump: PumpSpec,
        cfg: SimConfig,
        n_workers: int | None = None,
) -> ExperimentResult:
    """Simulate a device and compare the estimated Fano factor spectrum with
    the master formula.

    Trajectory `i` uses the `i`-th child of `SeedSequence(cfg.seed)`, and
    segment estimates are pooled in trajectory order, so the result depends
    only on `cfg`, `device` and `pump`, not on the number of threads.

    Parameters
    ----------
    device : DeviceParams
        The device.
    pump : PumpSpec
        The pump. Its modulation, if any, is applied to every trajectory.
    cfg : SimConfig
        Simulation settings.
    n_workers : int, optional
        Number of threads. Defaults to `max_workers(cfg.n_traj)`.

    Returns
    -------
    ExperimentResult
    """
    op: OperatingPoint = derive_operating_point(device, pump)
    cfg.check_step(op)
    if not op.N0 > 0:
        raise ZeroEfficiencyError(
            'No light reaches the detector (beta0 = 0); the Fano factor of '
            'the detected flux is undefined'
        )
    bins: _SpectralBins = _spectral_bins(cfg)
    child_seeds: list[np.random.SeedSequence] = \
        np.random.SeedSequence(cfg.seed).spawn(cfg.n_traj)
    workers: int = max_workers(cfg.n_traj) if n_workers is None else n_workers

    def run_trajectory(index: int) -> np.ndarray:
        _rng = np.random.default_rng(child_seeds[index])
        _run = integrate(op, pump.W_e, cfg, pump.modulation, _rng)
        logger.debug('Trajectory %d of %d done', index + 1, cfg.n_traj)
        return _segment_fano(detect(_run, op), op.N0, cfg, bins)

    logger.info(
        'Simulating %d trajectories of %d steps on %d thread(s)',
        cfg.n_traj, cfg.n_steps, workers,
    )
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as _pool:
        per_trajectory: list[np.ndarray] = list(
            _pool.map(run_trajectory, range(cfg.n_traj))
        )
    estimate: SpectrumEstimate = _pool_segments(per_trajectory, cfg, bins)

    def master(omega: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        return np.asarray(fano_master(FanoQuery(op=op, W_e=pump.W_e, omega=omega)))

    analytic_band: np.ndarray = estimate.band_average(master)
    agreement: AgreementCheckResult = check_agreement(estimate, analytic_band)
    if not agreement.passed:
        logger.warning(
            'Monte Carlo estimate disagrees with the master formula at %d of '
            '%d frequencies', len(not_none(agreement.failed_checks)),
            len(cfg.omega_grid),
        )
    return ExperimentResult(
        op=op,
        W_e=pump.W_e,
        estimate=estimate,
        analytic=master(estimate.omega_grid),
        analytic_band=analytic_band,
        agreement=agreement,
    )
###END def run_experiment
