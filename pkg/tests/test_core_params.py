import math

import pytest

from led_fano.core_params import (
    DeviceParams,
    ModeParams,
    PumpSpec,
    check_low_injection,
    derive_operating_point,
    efficiencies_from_K,
)
from led_fano.exceptions import UnphysicalParameterError



def test_single_mode_operating_point(single_mode_device, pump):
    op = derive_operating_point(single_mode_device, pump)
    assert op.n_c0 == pytest.approx(0.5)
    assert op.eps0 == pytest.approx(1.0)
    assert op.eta == pytest.approx(0.5)
    assert op.eta_d == pytest.approx(0.5)
    assert op.tau_dd == pytest.approx(5.0e-10)
    assert op.V0 == pytest.approx(5.0e8)
    assert op.N0 == pytest.approx(5.0e8)
    assert op.zeta1 == pytest.approx(1.0)
    assert op.zeta2 == pytest.approx(1.0)
    assert op.n_l0 == pytest.approx((5.0e-4,))


def test_two_mode_multimodeness(two_mode_device, pump):
    op = derive_operating_point(two_mode_device, pump)
    assert op.beta0 == pytest.approx(0.5)
    assert op.K_r == pytest.approx(0.5)
    assert op.eta == pytest.approx(0.25)
    assert op.eta_d == pytest.approx(0.3)
    assert op.eff_emission_weights == pytest.approx((1.0 / 3.0, 2.0 / 3.0))
    assert op.zeta1 == pytest.approx(2.0 / 3.0)
    assert op.zeta2 == pytest.approx(4.0 / 9.0)


def test_equal_sensitivities_give_unit_zeta(pump):
    device = DeviceParams(modes=(
        ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9, K_r_l=0.3, xi_l=0.9),
        ModeParams(kappa0=5.0e11, tau_r_l0=3.0e-9, K_r_l=0.3, xi_l=0.1),
    ))
    op = derive_operating_point(device, pump)
    assert op.zeta1 == pytest.approx(1.0, rel=1e-12)
    assert op.zeta2 == pytest.approx(1.0, rel=1e-12)


def test_zeta_above_one_when_detected_mode_is_more_sensitive(pump):
    device = DeviceParams(modes=(
        ModeParams(kappa0=1.0e12, tau_r_l0=2.0e-9, K_r_l=1.0, xi_l=1.0),
        ModeParams(kappa0=1.0e12, tau_r_l0=2.0e-9, K_r_l=0.0, xi_l=0.0),
    ))
    op = derive_operating_point(device, pump)
    assert op.zeta1 == pytest.approx(4.0 / 3.0)


def test_no_nonradiative_channel(pump):
    device = DeviceParams(
        modes=(ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9, K_r_l=0.5,
                          xi_l=0.4),),
        K_nr=0.7,
    )
    op = derive_operating_point(device, pump)
    assert op.eps0 == 0.0
    assert math.isinf(op.tau_nr_eff)
    assert op.eta == pytest.approx(0.4)
    assert op.eta_d == pytest.approx(0.4)
    assert op.tau_dd == pytest.approx(1.0e-9 / 1.5)


def test_efficiencies_from_K():
    eta, eta_d = efficiencies_from_K(1.0, 1.0, 0.5, 0.5)
    assert eta == pytest.approx(0.5)
    assert eta_d == pytest.approx(0.75)
    eta, eta_d = efficiencies_from_K(1.0, 1.0, -0.5, -0.5)
    assert eta_d == pytest.approx(0.25)


@pytest.mark.parametrize(
    'eps0, K_r, K_nr',
    [(1.0, -1.0, 0.0), (1.0, -1.5, 0.0), (1.0, 0.0, 3.0)],
)
def test_efficiencies_from_K_rejects_unphysical(eps0, K_r, K_nr):
    with pytest.raises(UnphysicalParameterError):
        efficiencies_from_K(eps0, 1.0, K_r, K_nr)


def test_unphysical_relaxation_rate(pump):
    device = DeviceParams(
        modes=(ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9),),
        tau_nr0=1.0e-9,
        K_nr=3.0,
    )
    with pytest.raises(UnphysicalParameterError, match='K_nr'):
        derive_operating_point(device, pump)


def test_unphysical_radiative_sensitivity(pump):
    device = DeviceParams(
        modes=(ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9, K_r_l=-1.0),),
    )
    with pytest.raises(UnphysicalParameterError, match='K_r'):
        derive_operating_point(device, pump)


@pytest.mark.parametrize('kwargs', [
    {'kappa0': 0.0, 'tau_r_l0': 1.0e-9},
    {'kappa0': 1.0e12, 'tau_r_l0': -1.0e-9},
    {'kappa0': 1.0e12, 'tau_r_l0': 1.0e-9, 'xi_l': 1.5},
    {'kappa0': 1.0e12, 'tau_r_l0': 1.0e-9, 'K_r_l': math.nan},
])
def test_mode_validation(kwargs):
    with pytest.raises(UnphysicalParameterError):
        ModeParams(**kwargs)


def test_device_validation():
    mode = ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9)
    with pytest.raises(UnphysicalParameterError):
        DeviceParams(modes=())
    with pytest.raises(UnphysicalParameterError, match='nbar_thermal'):
        DeviceParams(modes=(mode,), nbar_thermal=0.1)
    with pytest.raises(UnphysicalParameterError):
        DeviceParams(modes=(mode,), tau_nr0=0.0)
    assert isinstance(DeviceParams(modes=[mode]).modes, tuple)


def test_pump_validation():
    with pytest.raises(UnphysicalParameterError):
        PumpSpec(P0=0.0)
    with pytest.raises(UnphysicalParameterError):
        PumpSpec(P0=1.0e9, W_e=-0.1)
    with pytest.raises(UnphysicalParameterError):
        PumpSpec(P0=1.0e9, modulation=(-1.0, 1.0e9))


def test_to_frame_numbers_modes_from_one(two_mode_device, pump):
    frame = derive_operating_point(two_mode_device, pump).to_frame()
    assert list(frame.columns) == ['quantity', 'value']
    quantities = set(frame['quantity'])
    assert {'eta', 'eta_d', 'n_l0[1]', 'n_l0[2]', 'xi[2]'} <= quantities
    assert 'n_l0[0]' not in quantities


def test_low_injection_led_passes(single_mode_device, pump):
    report = check_low_injection(
        single_mode_device, pump,
        cavity_volume=1.0e-6,
        active_volume=9.0e-14,
        R_abs_per_length=1.0e6,
        device_transit_time=1.0e-11,
        Q=1.0,
    )
    assert report.passed
    assert report.failed_checks is None
    assert report.R_abs_ratio < 1.0e-4


def test_low_injection_laser_diode_fails(single_mode_device, pump):
    report = check_low_injection(
        single_mode_device, pump,
        cavity_volume=1.0e-12,
        active_volume=1.0e-12,
        R_abs_per_length=1.0e6,
        device_transit_time=1.0e-15,
        Q=1.0,
    )
    assert not report.passed
    assert report.failed_checks is not None
    assert list(report.failed_checks['quantity']) == ['R_abs_ratio']
    assert report.R_abs_ratio == pytest.approx(100.0, rel=1e-2)


def test_low_injection_rejects_zero_volume(single_mode_device, pump):
    with pytest.raises(UnphysicalParameterError, match='cavity_volume'):
        check_low_injection(
            single_mode_device, pump,
            cavity_volume=0.0, active_volume=1.0e-14, R_abs_per_length=1.0,
            device_transit_time=1.0e-11, Q=1.0,
        )


@pytest.mark.parametrize('name', ['device_transit_time', 'Q', 'R_abs_per_length'])
@pytest.mark.parametrize('value', [0.0, -1.0])
def test_low_injection_rejects_non_positive_inputs(
        single_mode_device, pump, name, value,
):
    kwargs = dict(
        cavity_volume=1.0e-6,
        active_volume=9.0e-14,
        R_abs_per_length=1.0e6,
        device_transit_time=1.0e-11,
        Q=1.0,
    )
    kwargs[name] = value
    with pytest.raises(UnphysicalParameterError, match=name):
        check_low_injection(single_mode_device, pump, **kwargs)


@pytest.mark.parametrize('n_modes', [1, 2, 5])
def test_lifetime_additivity_and_flux_balance(
        make_random_device, rng, n_modes,
):
    for _ in range(50):
        device = make_random_device(rng, n_modes=n_modes)
        P0: float = 10.0**rng.uniform(6.0, 12.0)
        op = derive_operating_point(device, PumpSpec(P0=P0))
        assert 1.0 / op.tau_r0 == pytest.approx(
            math.fsum(1.0 / _tau for _tau in op.tau_r_l0), rel=1e-12
        )
        assert op.n_c0 * (1.0 / op.tau_r0 + op.inv_tau_nr0) \
            == pytest.approx(P0, rel=1e-12)
        assert op.V0 == pytest.approx(P0 / (1.0 + op.eps0), rel=1e-12)
        assert op.V0 == pytest.approx(math.fsum(op.V_l0), rel=1e-12)
        assert op.N0 == pytest.approx(op.beta0 * op.V0, rel=1e-12)
        assert 0.0 <= op.beta0 <= 1.0
        assert 0.0 < op.eta <= op.beta0
