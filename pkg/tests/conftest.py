"""Shared fixtures for the led_fano tests."""
import math

import numpy as np
import pytest

from led_fano.core_params import DeviceParams, ModeParams, PumpSpec



@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def single_mode_device() -> DeviceParams:
    """Single mode with equal radiative and non-radiative lifetimes."""
    return DeviceParams(
        modes=(ModeParams(kappa0=1.0e12, tau_r_l0=1.0e-9),),
        tau_nr0=1.0e-9,
    )


@pytest.fixture
def two_mode_device() -> DeviceParams:
    """Two equally bright modes; only mode 1 is detected and only mode 2 has
    a density-dependent lifetime."""
    return DeviceParams(
        modes=(
            ModeParams(kappa0=1.0e12, tau_r_l0=2.0e-9, K_r_l=0.0, xi_l=1.0),
            ModeParams(kappa0=1.0e12, tau_r_l0=2.0e-9, K_r_l=1.0, xi_l=0.0),
        ),
        tau_nr0=1.0e-9,
    )


@pytest.fixture
def pump() -> PumpSpec:
    return PumpSpec(P0=1.0e9, W_e=1.0)


def random_device(
        rng: np.random.Generator,
        n_modes: int = 1,
        xi_max: float = 0.95,
) -> DeviceParams:
    """Draw a valid device with a non-radiative channel.

    `K_nr < 1` keeps the non-radiative contribution to `1/tau_dd` positive,
    and mode sensitivities above -0.9 keep `K_r > -1`.
    """
    modes: list[ModeParams] = [
        ModeParams(
            kappa0=10.0**rng.uniform(11.0, 13.0),
            tau_r_l0=10.0**rng.uniform(-10.0, -8.0),
            K_r_l=rng.uniform(-0.9, 2.0),
            xi_l=rng.uniform(0.05, xi_max),
        )
        for _ in range(n_modes)
    ]
    tau_r0: float = 1.0 / math.fsum(1.0 / _m.tau_r_l0 for _m in modes)
    return DeviceParams(
        modes=tuple(modes),
        tau_nr0=tau_r0 / rng.uniform(0.01, 5.0),
        K_nr=rng.uniform(-2.0, 0.99),
    )


@pytest.fixture
def make_random_device():
    return random_device
