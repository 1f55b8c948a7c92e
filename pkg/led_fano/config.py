"""Reading, merging and validating flat key/value configuration files.

A configuration is a flat YAML mapping from dot-separated keys to scalars,
e.g.::

    mode.1.kappa0: 1.0e+12
    mode.1.tau_r: 1.0e-9
    tau_nr0: .inf
    P0: 1.0e+9

Several sources (command-line overrides, a configuration file, the package
defaults) are merged in priority order, earlier sources taking precedence.
The merged `Config` remembers which source and line each value came from, so
that errors can name the file, line and key.

Functions
---------
load_config(path) -> ConfigSource
    Read a configuration file.
parse_overrides(assignments) -> ConfigSource
    Parse `KEY=VALUE` command-line overrides.
merge_configs(sources) -> Config
    Merge sources in prioritized order and check for unknown keys.
get_invalid_keys(keys) -> list[str]
get_missing_keys(config, required) -> list[str]
device_from_config(config) -> DeviceParams
pump_from_config(config) -> PumpSpec
sim_config_from_config(config, seed, n_traj) -> SimConfig
regime_kwargs_from_config(config) -> dict | None
lifetime_model_from_config(config) -> LifetimeModel
"""
from collections.abc import Iterable, Sequence
import dataclasses
import hashlib
import json
import math
from pathlib import Path
import typing as tp

import ruamel.yaml as yaml
from ruamel.yaml.error import YAMLError

from .core_params import DeviceParams, ModeParams, PumpSpec
from .exceptions import ConfigError, UnphysicalParameterError
from .key_utils import (
    MODE_KEY_PATTERN,
    get_component_keys,
    get_mode_numbers,
    get_parent_key,
    mode_key,
)
from .langevin_sim import SimConfig, log_omega_grid
from .steady_state import LifetimeModel, PowerLaw, QuantumWellEmission


ConfigValue = tp.Union[float, int, str, bool]

MODE_FIELDS: tp.Final[tuple[str, ...]] = ('kappa0', 'tau_r', 'K_r', 'xi')
"""Fields of the per-mode `mode.N.*` keys."""

KNOWN_KEYS: tp.Final[frozenset[str]] = frozenset({
    'tau_nr0', 'K_nr', 'nbar_thermal',
    'P0', 'W_e', 'modulation.amplitude', 'modulation.omega',
    'sim.dt', 'sim.duration', 'sim.n_traj', 'sim.seed', 'sim.segment_length',
    'sim.omega_min', 'sim.omega_max', 'sim.n_omega', 'sim.band_fraction',
    'regime.cavity_volume', 'regime.active_volume',
    'regime.R_abs_per_length', 'regime.device_transit_time', 'regime.Q',
    'regime.threshold',
    'model.radiative', 'model.p_r', 'model.tau_r_ref', 'model.n_ref',
    'model.nonradiative', 'model.p_nr', 'model.tau_nr_ref',
    'qw.m_eff', 'qw.T', 'qw.area', 'qw.rate_max',
    'il.P_min', 'il.P_max', 'il.n_points', 'il.beta0',
})
"""Every valid key except the per-mode keys."""

SIM_KEYS: tp.Final[tuple[str, ...]] = (
    'sim.dt', 'sim.duration', 'sim.n_traj', 'sim.seed', 'sim.segment_length',
    'sim.omega_min', 'sim.omega_max', 'sim.n_omega',
)
"""Keys that `sim_config_from_config` requires."""

REGIME_KEYS: tp.Final[tuple[str, ...]] = (
    'regime.cavity_volume', 'regime.active_volume',
    'regime.R_abs_per_length', 'regime.device_transit_time', 'regime.Q',
)
"""Keys of the low-injection check, apart from the threshold."""



@dataclasses.dataclass(kw_only=True, slots=True)
class ConfigSource:
    """Values read from a single source.

    Attributes
    ----------
    values : dict
        Mapping from key to scalar value, in file order.
    path : str, optional
        Name of the source (a file path or a label such as `--set`).
    lines : dict
        1-based line number of each key in `path`, where known.
    """
    values: dict[str, ConfigValue]
    path: str | None = None
    lines: dict[str, int] = dataclasses.field(default_factory=dict)

###END class ConfigSource


def _plain(value: tp.Any) -> ConfigValue:
    """Convert a ruamel scalar to a plain Python scalar."""
    if isinstance(value, bool):
        return bool(value)
    if isinstance(value, int):
        return int(value)
    if isinstance(value, float):
        return float(value)
    return str(value)


def load_config(path: Path | str) -> ConfigSource:
    """Read a flat YAML configuration file.

    Parameters
    ----------
    path : Path or str
        The file to read.

    Returns
    -------
    ConfigSource

    Raises
    ------
    ConfigError
        If the file cannot be read or parsed, is not a mapping, or has a
        value that is not a scalar.
    """
    path_str: str = str(path)
    yaml_obj = yaml.YAML(typ='rt')
    try:
        with open(path, encoding='utf-8') as _file:
            data = yaml_obj.load(_file)
    except OSError as _err:
        raise ConfigError(f'cannot read file ({_err.strerror})',
                          path=path_str) from _err
    except YAMLError as _err:
        mark = getattr(_err, 'problem_mark', None)
        raise ConfigError(
            f'invalid YAML: {getattr(_err, "problem", None) or _err}',
            path=path_str,
            line=None if mark is None else mark.line + 1,
        ) from _err
    if data is None:
        return ConfigSource(values={}, path=path_str)
    if not isinstance(data, dict):
        raise ConfigError(
            'the top level must be a mapping of keys to values',
            path=path_str,
        )
    values: dict[str, ConfigValue] = {}
    lines: dict[str, int] = {}
    for _key, _value in data.items():
        _key_str: str = str(_key)
        try:
            lines[_key_str] = data.lc.key(_key)[0] + 1
        except (AttributeError, KeyError, TypeError):
            pass
        if isinstance(_value, (dict, list)):
            raise ConfigError(
                'values must be scalars; write nested keys with dots, e.g. '
                '`mode.1.kappa0: 1.0e+12`',
                path=path_str, line=lines.get(_key_str), key=_key_str,
            )
        values[_key_str] = _plain(_value)
    return ConfigSource(values=values, path=path_str, lines=lines)
###END def load_config


def parse_overrides(assignments: Sequence[str]) -> ConfigSource:
    """Parse `KEY=VALUE` overrides. Values are parsed as YAML scalars."""
    yaml_obj = yaml.YAML(typ='safe')
    values: dict[str, ConfigValue] = {}
    for _assignment in assignments:
        _key, _sep, _text = _assignment.partition('=')
        _key = _key.strip()
        if _sep == '' or _key == '':
            raise ConfigError(
                f'override {_assignment!r} is not of the form KEY=VALUE',
                path='--set',
            )
        try:
            _value = yaml_obj.load(_text)
        except YAMLError as _err:
            raise ConfigError(f'invalid value {_text!r}', path='--set',
                              key=_key) from _err
        if _value is None or isinstance(_value, (dict, list)):
            raise ConfigError(f'invalid value {_text!r}', path='--set',
                              key=_key)
        values[_key] = _plain(_value)
    return ConfigSource(values=values, path='--set')
###END def parse_overrides


def get_invalid_keys(keys: Iterable[str]) -> list[str]:
    """Return the keys that are not part of the configuration schema."""
    invalid: list[str] = []
    for _key in keys:
        if _key in KNOWN_KEYS:
            continue
        _match = MODE_KEY_PATTERN.match(_key)
        if _match is not None and _match.group(2) in MODE_FIELDS:
            continue
        invalid.append(_key)
    return invalid


class Config:
    """Merged configuration.

    Values are looked up with the typed getters (`get_float`, `get_int`,
    `get_str`), which raise `ConfigError` naming the source, line and key of
    a missing or malformed value.
    """

    def __init__(self, sources: Sequence[ConfigSource]) -> None:
        """
        Parameters
        ----------
        sources : sequence of ConfigSource
            The sources, in order of priority (earlier ones take
            precedence).
        """
        self.sources: list[ConfigSource] = list(sources)
        self.values: dict[str, ConfigValue] = {}
        self.origins: dict[str, ConfigSource] = {}
        for _source in self.sources[-1::-1]:
            self.values.update(_source.values)
            self.origins.update({_key: _source for _key in _source.values})
    ###END def Config.__init__

    def __contains__(self, key: str) -> bool:
        return key in self.values

    def error(self, key: str, message: str) -> ConfigError:
        """Return a `ConfigError` for `key` located at its source.

        A key without a value (e.g. a missing required key) is located at
        the first key of its group, if the group has any keys.
        """
        located_key: str = key
        if key not in self.origins:
            parent: str | None = get_parent_key(key)
            siblings: list[str] = [] if parent is None \
                else get_component_keys(parent, self.values)
            if len(siblings) == 0:
                file_source: ConfigSource | None = next(
                    (_s for _s in self.sources
                     if _s.path not in (None, '--set')),
                    None,
                )
                return ConfigError(
                    message,
                    path=None if file_source is None else file_source.path,
                    key=key,
                )
            located_key = siblings[0]
        source: ConfigSource = self.origins[located_key]
        return ConfigError(
            message, path=source.path, line=source.lines.get(located_key),
            key=key,
        )
    ###END def Config.error

    def get_float(self, key: str, default: float | None = None) -> float:
        """Return a numeric value. Strings such as `inf` or `1e-9` are
        converted."""
        if key not in self.values:
            if default is None:
                raise self.error(key, 'required key is missing')
            return default
        value: ConfigValue = self.values[key]
        if isinstance(value, bool):
            raise self.error(key, f'expected a number, got {value!r}')
        try:
            return float(value)
        except ValueError:
            raise self.error(key, f'expected a number, got {value!r}') from None

    def get_int(self, key: str, default: int | None = None) -> int:
        if key not in self.values:
            if default is None:
                raise self.error(key, 'required key is missing')
            return default
        value: float = self.get_float(key)
        if not (math.isfinite(value) and value == int(value)):
            raise self.error(key, f'expected an integer, got {value!r}')
        return int(value)

    def get_str(self, key: str, default: str | None = None) -> str:
        if key not in self.values:
            if default is None:
                raise self.error(key, 'required key is missing')
            return default
        return str(self.values[key])

    def snapshot(self) -> dict[str, ConfigValue]:
        """Return the resolved values, sorted by key."""
        return {_key: self.values[_key] for _key in sorted(self.values)}

    def sha256(self) -> str:
        """SHA-256 hex digest of the resolved values."""
        text: str = json.dumps(self.snapshot(), sort_keys=True)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

###END class Config


def merge_configs(sources: Sequence[ConfigSource]) -> Config:
    """Merge configuration sources in prioritized order.

    Values in earlier sources take precedence over values for the same key
    in later sources.

    Raises
    ------
    ConfigError
        If a source contains a key that is not part of the schema.
    """
    for _source in sources:
        invalid: list[str] = get_invalid_keys(_source.values)
        if len(invalid) > 0:
            raise ConfigError(
                'unknown key' + (
                    '' if len(invalid) == 1
                    else f' (also unknown: {", ".join(invalid[1:])})'
                ),
                path=_source.path,
                line=_source.lines.get(invalid[0]),
                key=invalid[0],
            )
    return Config(sources)
###END def merge_configs


def get_missing_keys(config: Config, required: Iterable[str]) -> list[str]:
    """Return the keys in `required` that `config` has no value for."""
    return [_key for _key in required if _key not in config]


def _require(config: Config, required: Iterable[str]) -> None:
    missing: list[str] = get_missing_keys(config, required)
    if len(missing) > 0:
        raise config.error(
            missing[0],
            'required key is missing' + (
                '' if len(missing) == 1
                else f' (also missing: {", ".join(missing[1:])})'
            ),
        )


def _key_for_error(
        err: Exception,
        field_keys: dict[str, str],
        fallback: str,
) -> str:
    """Return the configuration key of the first `field` named in backticks
    in the message of `err`."""
    message: str = str(err)
    return next(
        (_key for _field, _key in field_keys.items()
         if f'`{_field}`' in message),
        fallback,
    )


def device_from_config(config: Config) -> DeviceParams:
    """Build `DeviceParams` from the `mode.N.*`, `tau_nr0`, `K_nr` and
    `nbar_thermal` keys.

    Modes are numbered from 1 without gaps. `mode.N.K_r` defaults to 0 and
    `mode.N.xi` to 1.
    """
    mode_numbers: list[int] = get_mode_numbers(config.values)
    if len(mode_numbers) == 0:
        raise config.error(mode_key(1, 'kappa0'), 'required key is missing')
    if mode_numbers != list(range(1, len(mode_numbers) + 1)):
        raise config.error(
            mode_key(mode_numbers[-1], 'kappa0'),
            f'modes must be numbered 1, 2, ... without gaps, got '
            f'{mode_numbers}',
        )
    modes: list[ModeParams] = []
    for _number in mode_numbers:
        try:
            modes.append(ModeParams(
                kappa0=config.get_float(mode_key(_number, 'kappa0')),
                tau_r_l0=config.get_float(mode_key(_number, 'tau_r')),
                K_r_l=config.get_float(mode_key(_number, 'K_r'), 0.0),
                xi_l=config.get_float(mode_key(_number, 'xi'), 1.0),
            ))
        except UnphysicalParameterError as _err:
            raise config.error(
                _key_for_error(_err, {
                    'kappa0': mode_key(_number, 'kappa0'),
                    'tau_r_l0': mode_key(_number, 'tau_r'),
                    'K_r_l': mode_key(_number, 'K_r'),
                    'xi_l': mode_key(_number, 'xi'),
                }, mode_key(_number, 'kappa0')),
                str(_err),
            ) from _err
    try:
        return DeviceParams(
            modes=tuple(modes),
            tau_nr0=config.get_float('tau_nr0', math.inf),
            K_nr=config.get_float('K_nr', 0.0),
            nbar_thermal=config.get_float('nbar_thermal', 0.0),
        )
    except UnphysicalParameterError as _err:
        raise config.error(
            _key_for_error(
                _err,
                {'K_nr': 'K_nr', 'nbar_thermal': 'nbar_thermal'},
                'nbar_thermal' if 'Thermal' in str(_err) else 'tau_nr0',
            ),
            str(_err),
        ) from _err
###END def device_from_config


def pump_from_config(config: Config) -> PumpSpec:
    """Build a `PumpSpec` from `P0`, `W_e` and the `modulation.*` keys."""
    modulation: tuple[float, float] | None = None
    if len(get_component_keys('modulation', config.values)) > 0:
        _require(config, ('modulation.amplitude', 'modulation.omega'))
        modulation = (
            config.get_float('modulation.amplitude'),
            config.get_float('modulation.omega'),
        )
    try:
        return PumpSpec(
            P0=config.get_float('P0'),
            W_e=config.get_float('W_e', 1.0),
            modulation=modulation,
        )
    except UnphysicalParameterError as _err:
        raise config.error(
            _key_for_error(_err, {'P0': 'P0', 'W_e': 'W_e'},
                           'modulation.amplitude'),
            str(_err),
        ) from _err
###END def pump_from_config


def sim_config_from_config(
        config: Config,
        *,
        seed: int | None = None,
        n_traj: int | None = None,
) -> SimConfig:
    """Build a `SimConfig` from the `sim.*` keys.

    `seed` and `n_traj`, if given, override the configured values. The
    frequency grid is logarithmic from `sim.omega_min` to `sim.omega_max`
    with `sim.n_omega` points.
    """
    _require(config, SIM_KEYS)
    try:
        return SimConfig(
            dt=config.get_float('sim.dt'),
            duration=config.get_float('sim.duration'),
            n_traj=config.get_int('sim.n_traj') if n_traj is None else n_traj,
            seed=config.get_int('sim.seed') if seed is None else seed,
            segment_length=config.get_int('sim.segment_length'),
            omega_grid=log_omega_grid(
                config.get_float('sim.omega_min'),
                config.get_float('sim.omega_max'),
                config.get_int('sim.n_omega'),
            ),
            band_fraction=config.get_float('sim.band_fraction', 0.2),
        )
    except ConfigError:
        raise
    except ValueError as _err:
        raise config.error(
            _key_for_error(_err, {
                'dt': 'sim.dt',
                'duration': 'sim.duration',
                'n_traj': 'sim.n_traj',
                'seed': 'sim.seed',
                'segment_length': 'sim.segment_length',
                'n_omega': 'sim.n_omega',
                'band_fraction': 'sim.band_fraction',
            }, 'sim.omega_min'),
            str(_err),
        ) from _err
###END def sim_config_from_config


def regime_kwargs_from_config(config: Config) -> dict[str, float] | None:
    """Return keyword arguments for `check_low_injection`, or None if the
    configuration has no `regime.*` geometry keys."""
    if not any(_key in config for _key in REGIME_KEYS):
        return None
    _require(config, REGIME_KEYS)
    kwargs: dict[str, float] = {
        _key.split('.', 1)[1]: config.get_float(_key) for _key in REGIME_KEYS
    }
    kwargs['threshold'] = config.get_float('regime.threshold', 0.01)
    return kwargs
###END def regime_kwargs_from_config


def lifetime_model_from_config(config: Config) -> LifetimeModel:
    """Build a `LifetimeModel` from the `model.*` and `qw.*` keys.

    `model.radiative` is `power` (keys `model.p_r`, `model.tau_r_ref`,
    `model.n_ref`) or `qw` (keys `qw.T`, `qw.area`, `qw.rate_max`, optional
    `qw.m_eff`). `model.nonradiative` is `none` (the default) or `power`
    (keys `model.p_nr`, `model.tau_nr_ref`, `model.n_ref`).
    """
    radiative_kind: str = config.get_str('model.radiative')
    nonradiative_kind: str = config.get_str('model.nonradiative', 'none')
    if radiative_kind not in ('power', 'qw'):
        raise config.error(
            'model.radiative',
            f'expected "power" or "qw", got {radiative_kind!r}',
        )
    if nonradiative_kind not in ('power', 'none'):
        raise config.error(
            'model.nonradiative',
            f'expected "power" or "none", got {nonradiative_kind!r}',
        )
    radiative: PowerLaw | QuantumWellEmission
    nonradiative: PowerLaw | None = None
    try:
        if radiative_kind == 'power':
            radiative = PowerLaw(
                exponent=config.get_float('model.p_r'),
                tau_ref=config.get_float('model.tau_r_ref'),
                n_ref=config.get_float('model.n_ref'),
            )
        else:
            radiative = QuantumWellEmission(
                T=config.get_float('qw.T'),
                area=config.get_float('qw.area'),
                rate_max=config.get_float('qw.rate_max'),
                m_eff=config.get_float('qw.m_eff', 0.1),
            )
    except UnphysicalParameterError as _err:
        raise config.error(
            _key_for_error(_err, {
                'exponent': 'model.p_r',
                'tau_ref': 'model.tau_r_ref',
                'n_ref': 'model.n_ref',
                'T': 'qw.T',
                'area': 'qw.area',
                'rate_max': 'qw.rate_max',
                'm_eff': 'qw.m_eff',
            }, 'model.radiative'),
            str(_err),
        ) from _err
    if nonradiative_kind == 'power':
        try:
            nonradiative = PowerLaw(
                exponent=config.get_float('model.p_nr'),
                tau_ref=config.get_float('model.tau_nr_ref'),
                n_ref=config.get_float('model.n_ref'),
            )
        except UnphysicalParameterError as _err:
            raise config.error(
                _key_for_error(_err, {
                    'exponent': 'model.p_nr',
                    'tau_ref': 'model.tau_nr_ref',
                    'n_ref': 'model.n_ref',
                }, 'model.nonradiative'),
                str(_err),
            ) from _err
    return LifetimeModel(radiative=radiative, nonradiative=nonradiative)
###END def lifetime_model_from_config
