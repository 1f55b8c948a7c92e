"""Built-in configuration fixtures, package defaults and reference data."""
import dataclasses
from pathlib import Path
from typing import Final

from .config import Config, ConfigSource, load_config, merge_configs


_data_root: Final[Path] = Path(__file__).parent / 'data'

fixtures_path: Final[Path] = _data_root / 'fixtures'
defaults_path: Final[Path] = _data_root / 'defaults.yaml'

FIXTURE_NAMES: Final[tuple[str, ...]] = (
    'single_mode',
    'two_mode',
    'fig4a',
    'fig4b',
    'fig4c',
    'fig4d',
    'il_power',
    'il_qw',
)
"""Names of the configuration files in `fixtures_path`, without suffix.

`fig4a` to `fig4d` are single-mode devices with `K_r = K_nr = 0.5` (a, b) or
`-0.5` (c, d) and a noiseless (a, c) or Poissonian (b, d) pump, with a
non-radiative channel of `tau_nr0 = tau_r0`.
"""


@dataclasses.dataclass(frozen=True, kw_only=True, slots=True)
class Table1Row:
    """Measured efficiencies and Fano factor ratios of one LED.

    Attributes
    ----------
    eta, eta_d : float
        Measured quantum and differential quantum efficiency.
    r_exp : float
        Measured ratio of the Fano factors for a noiseless and a Poissonian
        pump.
    r_published : float
        The ratio from `analytic.ratio_r`, rounded to two decimals.
    r_classic_published : float
        `1 - eta`, rounded to two decimals.
    """
    eta: float
    eta_d: float
    r_exp: float
    r_published: float
    r_classic_published: float


TABLE1_ROWS: Final[tuple[Table1Row, ...]] = (
    Table1Row(eta=0.067, eta_d=0.090, r_exp=0.90, r_published=0.89,
              r_classic_published=0.93),
    Table1Row(eta=0.104, eta_d=0.125, r_exp=0.84, r_published=0.86,
              r_classic_published=0.90),
    Table1Row(eta=0.150, eta_d=0.175, r_exp=0.81, r_published=0.81,
              r_classic_published=0.85),
)
"""Efficiencies and ratios measured on three LEDs with a constant-current
(noiseless) and a Poissonian pump."""

TABLE1_TOLERANCE: Final[float] = 0.005
"""Allowed absolute difference from the two-decimal published ratios."""


_defaults: ConfigSource | None = None


def get_defaults(force_reload: bool = False) -> ConfigSource:
    """Return the package default configuration values.

    After the first call, the values are cached and reused on subsequent
    calls unless `force_reload` is `True`.
    """
    global _defaults
    if _defaults is None or force_reload:
        _defaults = load_config(defaults_path)
    return _defaults
###END def get_defaults


def get_fixture_path(name: str) -> Path:
    """Return the path of a built-in fixture.

    Raises
    ------
    ValueError
        If `name` is not in `FIXTURE_NAMES`.
    """
    if name not in FIXTURE_NAMES:
        raise ValueError(
            f'Unknown fixture {name!r}. Built-in fixtures are '
            f'{", ".join(FIXTURE_NAMES)}.'
        )
    return fixtures_path / f'{name}.yaml'


def load_fixture(name: str) -> Config:
    """Load a built-in fixture merged with the package defaults."""
    return merge_configs([load_config(get_fixture_path(name)), get_defaults()])
