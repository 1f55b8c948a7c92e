import dataclasses
import math

import numpy as np
import pytest
from scipy import optimize, signal

from led_fano.analytic import carrier_spectrum
from led_fano.config import (
    device_from_config,
    pump_from_config,
    sim_config_from_config,
)
from led_fano.core_params import (
    DeviceParams,
    ModeParams,
    PumpSpec,
    derive_operating_point,
)
from led_fano.default_fixtures import load_fixture
from led_fano.exceptions import (
    ConfigError,
    InsufficientDataError,
    SimulationInstabilityError,
    UnphysicalParameterError,
)
from led_fano.langevin_sim import (
    THREADS_ENV_VAR,
    SimConfig,
    _check_stability,
    check_agreement,
    detect,
    estimate_fano,
    integrate,
    log_omega_grid,
    max_workers,
    overlap_variance_factor,
    run_experiment,
    synthesize_noise,
)


def _small_config(**changes) -> SimConfig:
    """A short run of the single-mode fixture (tau_dd = 5e-10 s)."""
    settings = dict(
        dt=5.0e-12,
        duration=1.1e-7,
        n_traj=3,
        seed=42,
        segment_length=1024,
        omega_grid=log_omega_grid(5.0e9, 1.0e11, 4),
    )
    settings.update(changes)
    return SimConfig(**settings)



def test_log_omega_grid_endpoints_are_exact():
    grid = log_omega_grid(0.05e9, 20.0e9, 12)
    assert len(grid) == 12
    assert grid[0] == 0.05e9
    assert grid[-1] == 20.0e9
    assert np.all(np.diff(grid) > 0)


def test_sim_config_validation():
    with pytest.raises(InsufficientDataError, match='duration'):
        _small_config(duration=1.0e-8)
    with pytest.raises(ValueError, match='segment_length'):
        _small_config(segment_length=1023)
    with pytest.raises(ValueError, match='seed'):
        _small_config(seed=-1)
    with pytest.raises(ValueError, match='omega_grid'):
        _small_config(omega_grid=(2.0e9, 1.0e9))


def test_time_step_check(single_mode_device, pump):
    op = derive_operating_point(single_mode_device, pump)
    with pytest.raises(UnphysicalParameterError, match='dt'):
        _small_config(dt=2.0e-11, duration=5.0e-7).check_step(op)


def test_noise_covariances(two_mode_device, pump, rng):
    op = derive_operating_point(two_mode_device, pump)
    dt: float = 1.0e-12
    n_steps: int = 400_000
    noise = synthesize_noise(op, 1.0, dt, n_steps, rng)
    assert np.var(noise.pump) * dt == pytest.approx(op.P0, rel=0.02)
    assert np.var(noise.gamma_nr) * dt == pytest.approx(
        op.n_c0 / op.tau_nr0, rel=0.02
    )
    assert np.var(noise.gamma_r) * dt == pytest.approx(
        op.n_c0 / op.tau_r0, rel=0.02
    )
    for _l in range(op.n_modes):
        assert np.mean(noise.gamma_r * noise.F_r[:, _l]) * dt \
            == pytest.approx(-op.V_l0[_l], rel=0.03)
        assert np.var(noise.F_kappa[:, _l]) * dt == pytest.approx(
            op.V_l0[_l], rel=0.02
        )
    assert np.mean(noise.pump * noise.gamma_nr) * dt \
        == pytest.approx(0.0, abs=0.01 * op.P0)
    # Both modes are either fully detected or not detected at all.
    assert np.all(noise.partition == 0.0)


def test_noiseless_pump(single_mode_device, pump, rng):
    op = derive_operating_point(single_mode_device, pump)
    noise = synthesize_noise(op, 0.0, 1.0e-12, 1000, rng)
    assert np.all(noise.pump == 0.0)


def test_white_noise_calibration(rng):
    cfg = SimConfig(
        dt=1.0e-3,
        duration=256 * 2000 * 1.0e-3,
        n_traj=1,
        seed=0,
        segment_length=256,
        omega_grid=log_omega_grid(50.0, 2000.0, 6),
    )
    N0: float = 3.0
    series = math.sqrt(N0 / cfg.dt) * rng.standard_normal(cfg.n_steps)
    estimate = estimate_fano(series, N0, cfg)
    np.testing.assert_allclose(estimate.W_ph, 1.0, atol=0.05)
    assert np.all(np.isnan(estimate.stderr))
    assert estimate.n_traj == 1

    second = math.sqrt(N0 / cfg.dt) * rng.standard_normal(cfg.n_steps)
    pooled = estimate_fano([series, second], N0, cfg)
    assert pooled.n_traj == 2
    assert pooled.n_segments == 2 * estimate.n_segments
    assert np.all(np.isfinite(pooled.stderr))
    assert np.all(pooled.stderr < 0.05)


def test_estimate_rejects_short_series(rng):
    cfg = _small_config()
    with pytest.raises(InsufficientDataError):
        estimate_fano(rng.standard_normal(1000), 1.0, cfg)


def test_unresolvable_frequency(rng):
    cfg = _small_config(omega_grid=(1.0e8,))
    with pytest.raises(InsufficientDataError, match='segment_length'):
        estimate_fano(rng.standard_normal(cfg.n_steps), 1.0, cfg)


@pytest.mark.parametrize('omega_tau', [0.1, 1.0, 10.0])
def test_modulation_response(omega_tau):
    device = DeviceParams(
        modes=(ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9, xi_l=0.8),),
    )
    op = derive_operating_point(device, PumpSpec(P0=1.0e9))
    tau_dd: float = op.tau_dd
    omega: float = omega_tau / tau_dd
    amplitude: float = 1.0e8
    dt: float = tau_dd / 500.0
    # Twenty relaxation times of transient, then at least five periods.
    settle: int = int(20 * tau_dd / dt)
    n_steps: int = settle + int(5 * 2.0 * math.pi / omega / dt)
    cfg = SimConfig(
        dt=dt,
        duration=n_steps * dt,
        n_traj=1,
        seed=0,
        segment_length=8,
        omega_grid=(omega,),
    )
    run = integrate(op, 0.0, cfg, modulation=(amplitude, omega), noise=False)
    delta_N = detect(run, op)[settle:]
    t_mid = (np.arange(cfg.n_steps) + 0.5)[settle:] * dt
    basis = np.column_stack([np.sin(omega * t_mid), np.cos(omega * t_mid)])
    (a, b), *_ = np.linalg.lstsq(basis, delta_N, rcond=None)
    expected: float = op.eta_d / math.sqrt(1.0 + omega_tau**2)
    assert math.hypot(a, b) / amplitude == pytest.approx(expected, rel=0.01)


def test_noiseless_run_stays_at_rest(single_mode_device, pump):
    op = derive_operating_point(single_mode_device, pump)
    run = integrate(op, 1.0, _small_config(), noise=False)
    assert np.all(run.n_c == 0.0)
    assert np.all(run.V_l == 0.0)
    assert run.t[-1] == pytest.approx(run.n_steps * run.dt)


def _half_detected_device() -> DeviceParams:
    return DeviceParams(
        modes=(ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9, xi_l=0.5),),
        tau_nr0=1.0e-9,
    )


def test_partition_noise_covariance(rng):
    op = derive_operating_point(_half_detected_device(), PumpSpec(P0=1.0e9))
    dt: float = 1.0e-12
    noise = synthesize_noise(op, 1.0, dt, 400_000, rng)
    assert np.var(noise.partition[:, 0]) * dt == pytest.approx(
        0.25 * op.V_l0[0], rel=0.02
    )
    assert np.mean(noise.partition[:, 0] * noise.F_r[:, 0]) * dt \
        == pytest.approx(0.0, abs=0.01 * op.V_l0[0])


def test_half_detected_mode_spectrum():
    pump = PumpSpec(P0=1.0e9, W_e=0.0)
    device = _half_detected_device()
    op = derive_operating_point(device, pump)
    cfg = _small_config(n_traj=4)
    detected: list[np.ndarray] = []
    emitted: list[np.ndarray] = []
    for _seed in range(cfg.n_traj):
        _run = integrate(op, pump.W_e, cfg, rng=np.random.default_rng(_seed))
        detected.append(detect(_run, op))
        emitted.append(_run.V_l[:, 0])
    detected_estimate = estimate_fano(detected, op.N0, cfg)
    emitted_estimate = estimate_fano(emitted, op.V0, cfg)
    # S_NN = xi^2 S_VV + xi (1 - xi) V0 with N0 = xi V0 and xi = 1/2.
    assert check_agreement(
        detected_estimate, 0.5 * emitted_estimate.W_ph + 0.5, n_sigma=5.0,
    ).passed

    result = run_experiment(device, pump, cfg)
    assert result.op.zeta2 == pytest.approx(1.0)
    assert check_agreement(
        result.estimate, result.analytic_band, n_sigma=5.0,
    ).passed


def test_noise_coarsening_keeps_variance(rng):
    op = derive_operating_point(_half_detected_device(), PumpSpec(P0=1.0e9))
    dt: float = 1.0e-12
    fine = synthesize_noise(op, 1.0, dt, 200_000, rng)
    coarse = fine.coarsen(4)
    assert len(coarse.pump) == 50_000
    assert coarse.F_r.shape == (50_000, 1)
    assert np.var(coarse.pump) * 4 * dt == pytest.approx(op.P0, rel=0.03)
    assert np.sum(coarse.F_kappa) * 4 == pytest.approx(np.sum(fine.F_kappa))
    with pytest.raises(ValueError):
        fine.coarsen(3)


def test_halving_dt_changes_estimate_by_less_than_stderr(
        single_mode_device, pump,
):
    op = derive_operating_point(single_mode_device, pump)
    coarse_cfg = _small_config(n_traj=4)
    fine_cfg = dataclasses.replace(
        coarse_cfg,
        dt=coarse_cfg.dt / 2.0,
        segment_length=2 * coarse_cfg.segment_length,
    )
    coarse_series: list[np.ndarray] = []
    fine_series: list[np.ndarray] = []
    for _seed in range(coarse_cfg.n_traj):
        # Both step sizes see the same noise realization and start state.
        _fine_noise = synthesize_noise(
            op, pump.W_e, fine_cfg.dt, fine_cfg.n_steps,
            np.random.default_rng(_seed),
        )
        _fine = integrate(
            op, pump.W_e, fine_cfg, rng=np.random.default_rng(100 + _seed),
            noise_state=_fine_noise,
        )
        _coarse = integrate(
            op, pump.W_e, coarse_cfg, rng=np.random.default_rng(100 + _seed),
            noise_state=_fine_noise.coarsen(2),
        )
        fine_series.append(detect(_fine, op))
        coarse_series.append(detect(_coarse, op))
    fine = estimate_fano(fine_series, op.N0, fine_cfg)
    coarse = estimate_fano(coarse_series, op.N0, coarse_cfg)
    assert fine.n_segments == coarse.n_segments
    assert np.all(np.abs(fine.W_ph - coarse.W_ph) < coarse.stderr)


def test_noise_state_length_is_checked(single_mode_device, pump, rng):
    op = derive_operating_point(single_mode_device, pump)
    cfg = _small_config()
    noise = synthesize_noise(op, pump.W_e, cfg.dt, cfg.n_steps // 2, rng)
    with pytest.raises(ValueError, match='noise_state'):
        integrate(op, pump.W_e, cfg, noise_state=noise)


def test_carrier_spectrum_is_lorentzian(single_mode_device, pump):
    op = derive_operating_point(single_mode_device, pump)
    cfg = _small_config(duration=2**20 * 5.0e-12, n_traj=1)
    run = integrate(op, pump.W_e, cfg, rng=np.random.default_rng(7))
    freqs, density = signal.welch(
        run.n_c, fs=1.0 / cfg.dt, window='hann', nperseg=4096,
    )
    x = 2.0 * math.pi * freqs * op.tau_dd
    fit = (x > 0) & (x < 20.0)
    (log_amplitude, width), _ = optimize.curve_fit(
        lambda _x, _a, _w: _a - np.log1p((_x / _w)**2),
        x[fit], np.log(density[fit]), p0=(np.log(density[1]), 1.0),
    )
    # Half-width in units of 1/tau_dd.
    assert abs(width) == pytest.approx(1.0, rel=0.05)
    # One-sided density per Hz is twice the two-sided angular spectrum.
    assert math.exp(log_amplitude) == pytest.approx(
        2.0 * carrier_spectrum(op, 0.0, pump.W_e), rel=0.05
    )


def test_overlap_variance_factor():
    # Half-overlapping Hann windows overlap by 1/6.
    assert overlap_variance_factor(1024) == pytest.approx(
        1.0 + 2.0 / 36.0, rel=1e-3
    )


def test_instability_is_reported(single_mode_device, pump):
    op = derive_operating_point(single_mode_device, pump)
    with pytest.raises(SimulationInstabilityError, match='step 2'):
        _check_stability(np.array([0.0, 1.0, 1.0e30]), op, 1.0, None)


def test_agreement_tolerance():
    cfg = _small_config()
    estimate = estimate_fano(
        [np.random.default_rng(_i).standard_normal(cfg.n_steps) / math.sqrt(cfg.dt)
         for _i in range(2)],
        1.0, cfg,
    )
    assert check_agreement(estimate, np.ones(4), n_sigma=5.0).passed
    result = check_agreement(estimate, np.full(4, 2.0))
    assert not result.passed
    assert result.failed_checks is not None
    assert len(result.failed_checks) == 4
    np.testing.assert_allclose(
        result.tolerance,
        np.maximum(3.0 * estimate.stderr, 0.05 * 1.0 + 0.01),
    )


def test_max_workers(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, '2')
    assert max_workers(8) == 2
    assert max_workers(1) == 1
    monkeypatch.setenv(THREADS_ENV_VAR, 'many')
    with pytest.raises(ConfigError, match=THREADS_ENV_VAR):
        max_workers(4)
    monkeypatch.delenv(THREADS_ENV_VAR)
    assert 1 <= max_workers(4) <= 4


def test_results_do_not_depend_on_thread_count(single_mode_device, pump):
    cfg = _small_config()
    serial = run_experiment(single_mode_device, pump, cfg, n_workers=1)
    threaded = run_experiment(single_mode_device, pump, cfg, n_workers=3)
    np.testing.assert_array_equal(serial.estimate.W_ph, threaded.estimate.W_ph)
    np.testing.assert_array_equal(
        serial.estimate.stderr, threaded.estimate.stderr
    )
    other_seed = run_experiment(
        single_mode_device, pump, dataclasses.replace(cfg, seed=43),
        n_workers=1,
    )
    assert not np.array_equal(serial.estimate.W_ph, other_seed.estimate.W_ph)


def test_experiment_frame(single_mode_device, pump):
    result = run_experiment(single_mode_device, pump, _small_config())
    frame = result.to_frame()
    assert list(frame.columns) == [
        'omega', 'W_ph_mc', 'stderr', 'W_ph_analytic', 'W_ph_analytic_band',
    ]
    assert len(frame) == 4


def _fixture_experiment(name: str, eps0_zero: bool):
    config = load_fixture(name)
    device = device_from_config(config)
    if eps0_zero:
        device = dataclasses.replace(device, tau_nr0=math.inf)
    return run_experiment(
        device, pump_from_config(config), sim_config_from_config(config)
    )


@pytest.mark.slow
@pytest.mark.parametrize('name, eps0_zero', [
    ('fig4a', False),
    ('fig4b', False),
    ('fig4c', False),
    ('fig4d', False),
    ('fig4b', True),
    ('fig4c', True),
    ('two_mode', False),
])
def test_monte_carlo_matches_master_formula(name, eps0_zero):
    result = _fixture_experiment(name, eps0_zero)
    assert result.agreement.passed, result.agreement.failed_checks


@pytest.mark.slow
def test_monte_carlo_sub_poissonian_over_whole_grid():
    result = _fixture_experiment('fig4d', False)
    assert np.all(result.analytic_band < 1.0)
    # Above the cutoff W_ph - 1 falls below the statistical resolution.
    below_cutoff = result.estimate.omega_grid * result.op.tau_dd <= 1.0
    assert np.any(below_cutoff)
    assert np.all(result.estimate.W_ph[below_cutoff] < 1.0)


@pytest.mark.slow
def test_monte_carlo_cutoff_ratio():

    def lorentzian(omega, W0, tau):
        return 1.0 + (W0 - 1.0) / (1.0 + (omega * tau)**2)

    fitted_tau: list[float] = []
    for _eps0_zero in (False, True):
        _estimate = _fixture_experiment('fig4a', _eps0_zero).estimate
        (_W0, _tau), _ = optimize.curve_fit(
            lorentzian, _estimate.omega_grid, _estimate.W_ph,
            p0=(0.5, 5.0e-10), sigma=_estimate.stderr, absolute_sigma=True,
        )
        fitted_tau.append(abs(_tau))
    assert fitted_tau[1] / fitted_tau[0] == pytest.approx(4.0 / 3.0, rel=0.05)
