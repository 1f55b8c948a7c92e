"""Photon-number Fano factor of multimode semiconductor LEDs.

Closed-form Fano factor spectra of the linearized rate equations, the
steady-state and quantum-well models the lifetime sensitivities come from,
and a Monte Carlo simulator of the effective Langevin equations to verify
them. The `led-fano` command (`led_fano.cli`) exposes every workflow.
"""
from importlib import metadata as _metadata

try:
    __version__: str = _metadata.version('led-fano')
except _metadata.PackageNotFoundError:
    __version__ = '0+unknown'

from . import exceptions
from . import constants
from . import core_params
from . import analytic
from . import qw_semission
from . import steady_state
from . import langevin_sim
from . import config
from . import default_fixtures
from . import report_utils

from .core_params import (
    DeviceParams,
    ModeParams,
    OperatingPoint,
    PumpSpec,
    derive_operating_point,
)
from .default_fixtures import load_fixture
