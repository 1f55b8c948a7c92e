"""The `led-fano` command.

Subcommands
-----------
operating-point
    Print the running-point quantities of a device, the zero-frequency Fano
    factor and the low-injection check.
fano-sweep
    Evaluate Fano factor formulas on a logarithmic frequency grid.
simulate
    Run the Monte Carlo simulator and compare with the master formula.
table1
    Recompute the Fano factor ratios of the built-in LED measurements.
il-curve
    Sample the I-L curve of a lifetime model.
qw-serate
    Tabulate the quantum-well spontaneous emission rate and its `K_r`.

Configuration is read from `--config` (a file path or the name of a built-in
fixture), overridden by `--set KEY=VALUE` and command-specific flags, and
completed by the package defaults. Tables go to stdout as CSV unless `--out
DIR` is given, in which case they are written to `DIR` together with a
`manifest.yaml`.

Exit codes: 0 on success, 2 for invalid configuration or parameters, 3 when
a built-in check fails, 4 for numerical failures.
"""
import argparse
from collections.abc import Callable, Sequence
import dataclasses
import logging
import math
from pathlib import Path
import sys
import time
import typing as tp

import numpy as np
import pandas as pd
import ruamel.yaml as yaml

from . import __version__
from .analytic import (
    cutoff_frequency,
    fano_sweep,
    fano_zero_freq,
    ratio_r,
    spl_condition,
)
from .config import (
    Config,
    ConfigSource,
    ConfigValue,
    device_from_config,
    lifetime_model_from_config,
    load_config,
    merge_configs,
    parse_overrides,
    pump_from_config,
    regime_kwargs_from_config,
    sim_config_from_config,
)
from .core_params import (
    DeviceParams,
    OperatingPoint,
    RegimeReport,
    check_low_injection,
    derive_operating_point,
)
from .default_fixtures import (
    FIXTURE_NAMES,
    TABLE1_ROWS,
    TABLE1_TOLERANCE,
    get_defaults,
    get_fixture_path,
)
from .exceptions import (
    ConfigError,
    InsufficientDataError,
    NoSteadyStateError,
    SimulationInstabilityError,
    UnphysicalParameterError,
)
from .key_utils import not_none
from .langevin_sim import ExperimentResult, log_omega_grid, run_experiment
from .qw_semission import qw_sweep
from .report_utils.csv_output import provenance_line, write_csv
from .report_utils.formatter import JSONReportFormatter, TextReportFormatter
from .steady_state import ConsistencyReport, consistency_check, il_curve


logger = logging.getLogger(__name__)

EXIT_OK: tp.Final[int] = 0
EXIT_CONFIG_ERROR: tp.Final[int] = 2
EXIT_CHECK_FAILED: tp.Final[int] = 3
EXIT_NUMERICAL_FAILURE: tp.Final[int] = 4

MANIFEST_NAME: tp.Final[str] = 'manifest.yaml'
FLAG_SOURCE: tp.Final[str] = 'command line'

DEFAULT_TEMPERATURES: tp.Final[tuple[float, ...]] = (3.0, 15.0, 80.0)
DEFAULT_N_S_RANGE: tp.Final[tuple[float, float]] = (1.0e13, 1.0e17)
DEFAULT_N_S_POINTS: tp.Final[int] = 200



@dataclasses.dataclass(kw_only=True, slots=True)
class RunManifest:
    """Record of one command run, written as `manifest.yaml`.

    Attributes
    ----------
    command : str
        Name of the subcommand.
    config : dict
        Resolved configuration values, including command-line overrides.
    seed : int or None
        Seed of the random numbers, or None if the command uses none.
    version : str
        Version of `led-fano`.
    outputs : list of str
        Paths of the files written, apart from the manifest itself.
    duration_s : float
        Wall-clock duration of the run [s].
    """
    command: str
    config: dict[str, ConfigValue]
    seed: int | None
    version: str
    outputs: list[str] = dataclasses.field(default_factory=list)
    duration_s: float = 0.0

    def to_dict(self) -> dict[str, tp.Any]:
        return dataclasses.asdict(self)

    def write(self, path: Path) -> Path:
        yaml_obj = yaml.YAML(typ='rt')
        yaml_obj.default_flow_style = False
        with open(path, 'w', encoding='utf-8') as _file:
            yaml_obj.dump(self.to_dict(), _file)
        return path

###END class RunManifest


@dataclasses.dataclass(kw_only=True, slots=True)
class _CommandContext:
    """Output settings and bookkeeping of one command run."""
    command: str
    config: Config
    out_dir: Path | None
    as_json: bool
    seed: int | None = None
    outputs: list[Path] = dataclasses.field(default_factory=list)
    started: float = dataclasses.field(default_factory=time.perf_counter)

    def save_table(self, frame: pd.DataFrame, filename: str) -> None:
        """Write `frame` to the output directory, if one was given."""
        if self.out_dir is None:
            return
        self.outputs.append(write_csv(
            frame, self.out_dir / filename,
            version=__version__,
            config_sha256=self.config.sha256(),
            seed=self.seed,
        ))
    ###END def _CommandContext.save_table

    def emit_table(self, frame: pd.DataFrame, filename: str) -> None:
        """Write `frame` to the output directory, or print it to stdout as
        CSV (or JSON with `--json`) if there is none."""
        if self.out_dir is not None:
            self.save_table(frame, filename)
        elif self.as_json:
            sys.stdout.write(
                JSONReportFormatter().format(frame.to_dict(orient='list'))
            )
        else:
            sys.stdout.write(
                provenance_line(__version__, self.config.sha256(), self.seed)
                + '\n'
            )
            frame.to_csv(sys.stdout, index=False, float_format='%.17g')
    ###END def _CommandContext.emit_table

    def finish(self, exit_code: int = EXIT_OK) -> int:
        """Write the manifest, if there is an output directory, and return
        `exit_code`."""
        if self.out_dir is not None:
            manifest = RunManifest(
                command=self.command,
                config=self.config.snapshot(),
                seed=self.seed,
                version=__version__,
                outputs=[str(_path) for _path in self.outputs],
                duration_s=time.perf_counter() - self.started,
            )
            manifest.write(self.out_dir / MANIFEST_NAME)
        return exit_code
    ###END def _CommandContext.finish

###END class _CommandContext


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(_item) for _item in text.split(',') if _item != '')
    except ValueError:
        raise argparse.ArgumentTypeError(
            f'expected a comma-separated list of numbers, got {text!r}'
        ) from None


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(_item.strip() for _item in text.split(',') if _item.strip())


def _u64(text: str) -> int:
    try:
        value: int = int(text)
    except ValueError:
        value = -1
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(
            f'expected an unsigned 64-bit integer, got {text!r}'
        )
    return value


def _config_source(spec: str) -> ConfigSource:
    """Load `spec` as a file path, or as a built-in fixture if no such file
    exists."""
    path = Path(spec)
    if not path.exists() and spec in FIXTURE_NAMES:
        path = get_fixture_path(spec)
    return load_config(path)


def _load_config(
        args: argparse.Namespace,
        *,
        required: bool,
        flags: dict[str, ConfigValue | None] | None = None,
) -> Config:
    """Merge command-line flags, `--set` overrides, the `--config` file and
    the package defaults, in that order of priority."""
    sources: list[ConfigSource] = []
    if flags is not None:
        sources.append(ConfigSource(
            values={_k: _v for _k, _v in flags.items() if _v is not None},
            path=FLAG_SOURCE,
        ))
    sources.append(parse_overrides(args.set or []))
    if args.config is not None:
        sources.append(_config_source(args.config))
    elif required:
        raise ConfigError(
            'no configuration given. Pass --config with a file path or one '
            f'of the built-in fixtures: {", ".join(FIXTURE_NAMES)}'
        )
    sources.append(get_defaults())
    return merge_configs(sources)
###END def _load_config


def _context(
        args: argparse.Namespace,
        config: Config,
        seed: int | None = None,
) -> _CommandContext:
    return _CommandContext(
        command=args.command,
        config=config,
        out_dir=args.out,
        as_json=args.json,
        seed=seed,
    )


def _quantity_frame(values: dict[str, tp.Any]) -> pd.DataFrame:
    return pd.DataFrame(list(values.items()), columns=['quantity', 'value'])


def _operating_point_summary(op: OperatingPoint, W_e: float) -> dict[str, tp.Any]:
    """Quantities printed below the operating point itself."""
    spl = spl_condition(op)
    return {
        'W_e': W_e,
        'W_ph_0': fano_zero_freq(op, W_e) if op.eta > 0 else math.nan,
        'cutoff_frequency': cutoff_frequency(op),
        'eta_equals_eta_d': math.isclose(op.eta, op.eta_d, rel_tol=1e-12),
        'sub_poissonian': spl.sub_poissonian,
    }


def cmd_operating_point(args: argparse.Namespace) -> int:
    config: Config = _load_config(args, required=True)
    ctx: _CommandContext = _context(args, config)
    device: DeviceParams = device_from_config(config)
    pump = pump_from_config(config)
    op: OperatingPoint = derive_operating_point(device, pump)
    regime_kwargs: dict[str, float] | None = regime_kwargs_from_config(config)
    regime: RegimeReport | None = None
    if regime_kwargs is not None:
        regime = check_low_injection(device, pump, **regime_kwargs)
        if not regime.passed:
            logger.warning(
                'The device is not in the low-injection regime:\n%s',
                not_none(regime.failed_checks).to_string(index=False),
            )
    summary: dict[str, tp.Any] = _operating_point_summary(op, pump.W_e)
    frame: pd.DataFrame = pd.concat(
        [op.to_frame(), _quantity_frame(summary)], ignore_index=True
    )
    if args.json:
        sys.stdout.write(JSONReportFormatter().format({
            'operating_point': op.to_dict(),
            **summary,
            'regime': None if regime is None else regime.to_dict(),
        }))
    else:
        text_formatter = TextReportFormatter()
        sys.stdout.write(text_formatter.format(frame, title='Operating point'))
        if regime is not None:
            sys.stdout.write('\n' + text_formatter.format(
                regime.to_frame(), title='Low-injection check'
            ))
    ctx.save_table(frame, 'operating_point.csv')
    if regime is not None:
        ctx.save_table(regime.to_frame(), 'regime.csv')
    return ctx.finish()
###END def cmd_operating_point


def _with_eps0(device: DeviceParams, eps0: float) -> DeviceParams:
    """Return `device` with the non-radiative lifetime set to
    `tau_r0/eps0`."""
    if not (math.isfinite(eps0) and eps0 >= 0):
        raise UnphysicalParameterError(f'`eps0` must be >= 0, got {eps0}')
    return dataclasses.replace(
        device,
        tau_nr0=math.inf if eps0 == 0 else device.tau_r0 / eps0,
    )


def cmd_fano_sweep(args: argparse.Namespace) -> int:
    """Evaluate formulas on a frequency grid.

    The output has one column per formula, `W_ph_<formula>`, or with
    `--eps0` one per formula and `eps0` value, `W_ph_<formula>_eps0_<value>`.
    """
    config: Config = _load_config(args, required=True)
    ctx: _CommandContext = _context(args, config)
    device: DeviceParams = device_from_config(config)
    pump = pump_from_config(config)
    omega_min: float = args.omega_min if args.omega_min is not None \
        else config.get_float('sim.omega_min')
    omega_max: float = args.omega_max if args.omega_max is not None \
        else config.get_float('sim.omega_max')
    n_points: int = args.n_points if args.n_points is not None \
        else config.get_int('sim.n_omega')
    grid: np.ndarray = np.asarray(log_omega_grid(omega_min, omega_max, n_points))
    omegas: np.ndarray = grid / device.tau_r0 \
        if args.omega_unit == 'tau_r0' else grid
    frame = pd.DataFrame({'omega': omegas})
    if args.omega_unit == 'tau_r0':
        frame['omega_tau_r0'] = grid
    eps0_values: Sequence[float | None] = args.eps0 if args.eps0 else (None,)
    for _eps0 in eps0_values:
        _device = device if _eps0 is None else _with_eps0(device, _eps0)
        _op = derive_operating_point(_device, pump)
        _long = fano_sweep(_op, pump.W_e, omegas, args.formulas)
        _suffix = '' if _eps0 is None else f'_eps0_{_eps0:g}'
        for _formula in args.formulas:
            frame[f'W_ph_{_formula}{_suffix}'] = \
                _long.loc[_long['formula'] == _formula, 'W_ph'].to_numpy()
    ctx.emit_table(frame, 'fano_sweep.csv')
    return ctx.finish()
###END def cmd_fano_sweep


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run the Monte Carlo simulator. Exits with 3 if the estimate disagrees
    with the master formula."""
    config: Config = _load_config(
        args, required=True,
        flags={'sim.seed': args.seed, 'sim.n_traj': args.n_traj},
    )
    device: DeviceParams = device_from_config(config)
    pump = pump_from_config(config)
    sim_config = sim_config_from_config(config)
    ctx: _CommandContext = _context(args, config, seed=sim_config.seed)
    result: ExperimentResult = run_experiment(device, pump, sim_config)
    ctx.emit_table(result.to_frame(), 'simulate.csv')
    if not result.agreement.passed:
        failed: pd.DataFrame = not_none(result.agreement.failed_checks)
        sys.stderr.write(
            'Monte Carlo estimate disagrees with the master formula at '
            f'{len(failed)} of {len(sim_config.omega_grid)} frequencies:\n'
            + failed.to_string(index=False) + '\n'
        )
        return ctx.finish(EXIT_CHECK_FAILED)
    return ctx.finish()
###END def cmd_simulate


def table1_frame() -> pd.DataFrame:
    """Recompute the ratios of the built-in LED measurements.

    Returns
    -------
    pandas.DataFrame
        Columns `eta`, `eta_d`, `r_exp` (measured), `r_theory` (from
        `analytic.ratio_r`), `r_classic` (`1 - eta`) and the published
        two-decimal values `r_theory_published` and `r_classic_published`.
    """
    return pd.DataFrame([
        {
            'eta': _row.eta,
            'eta_d': _row.eta_d,
            'r_exp': _row.r_exp,
            'r_theory': ratio_r(_row.eta, _row.eta_d),
            'r_classic': 1.0 - _row.eta,
            'r_theory_published': _row.r_published,
            'r_classic_published': _row.r_classic_published,
        }
        for _row in TABLE1_ROWS
    ])


def cmd_table1(args: argparse.Namespace) -> int:
    """Print the ratio table. Exits with 3 if a recomputed ratio differs
    from the published one by more than `TABLE1_TOLERANCE`."""
    ctx: _CommandContext = _context(args, merge_configs([]))
    frame: pd.DataFrame = table1_frame()
    failed: pd.DataFrame = frame[
        ((frame['r_theory'] - frame['r_theory_published']).abs()
         > TABLE1_TOLERANCE)
        | ((frame['r_classic'] - frame['r_classic_published']).abs()
           > TABLE1_TOLERANCE)
    ]
    if args.json:
        sys.stdout.write(JSONReportFormatter().format({
            'rows': frame.to_dict(orient='records'),
            'tolerance': TABLE1_TOLERANCE,
            'passed': len(failed) == 0,
        }))
    else:
        sys.stdout.write(
            frame.to_string(index=False, float_format=lambda _v: f'{_v:.3f}')
            + '\n'
        )
    ctx.save_table(frame, 'table1.csv')
    if len(failed) > 0:
        sys.stderr.write(
            f'Recomputed ratios differ from the published ones by more than '
            f'{TABLE1_TOLERANCE}:\n' + failed.to_string(index=False) + '\n'
        )
        return ctx.finish(EXIT_CHECK_FAILED)
    return ctx.finish()
###END def cmd_table1


def cmd_il_curve(args: argparse.Namespace) -> int:
    """Sample the I-L curve. If the configuration has `P0`, also check the
    small-signal differential efficiency against the curve there, exiting
    with 3 on a mismatch."""
    config: Config = _load_config(
        args, required=True, flags={'il.n_points': args.n_points},
    )
    ctx: _CommandContext = _context(args, config)
    model = lifetime_model_from_config(config)
    beta0: float = config.get_float('il.beta0')
    try:
        curve = il_curve(
            (config.get_float('il.P_min'), config.get_float('il.P_max')),
            model,
            beta0,
            n_points=config.get_int('il.n_points'),
            spacing=args.spacing,
        )
    except UnphysicalParameterError as _err:
        key: str = 'il.beta0' if 'beta0' in str(_err) else 'il.P_min'
        raise config.error(key, str(_err)) from _err
    ctx.emit_table(curve.to_frame(), 'il_curve.csv')
    if 'P0' not in config:
        return ctx.finish()
    report: ConsistencyReport = consistency_check(
        model, config.get_float('P0'), beta0
    )
    report_frame: pd.DataFrame = _quantity_frame(report.to_dict())
    sys.stderr.write(TextReportFormatter().format(
        report_frame, title='Small-signal consistency at P0'
    ))
    ctx.save_table(report_frame, 'consistency.csv')
    return ctx.finish(EXIT_OK if report.passed else EXIT_CHECK_FAILED)
###END def cmd_il_curve


def cmd_qw_serate(args: argparse.Namespace) -> int:
    """Tabulate the quantum-well SE rate, one block of rows per
    temperature in the order given by `--T`."""
    config: Config = _load_config(
        args, required=False, flags={'qw.m_eff': args.m_eff},
    )
    ctx: _CommandContext = _context(args, config)
    if not 0 < args.n_min < args.n_max:
        raise ValueError(
            'Density bounds must satisfy 0 < n_min < n_max, got '
            f'{args.n_min}, {args.n_max}'
        )
    if args.n_points < 2:
        raise ValueError(f'--n-points must be at least 2, got {args.n_points}')
    frame: pd.DataFrame = qw_sweep(
        np.geomspace(args.n_min, args.n_max, args.n_points),
        args.temperatures,
        config.get_float('qw.m_eff'),
    )
    ctx.emit_table(frame, 'qw_serate.csv')
    return ctx.finish()
###END def cmd_qw_serate


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of `led-fano`."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None,
                        help='Configuration file, or the name of a built-in '
                        f'fixture ({", ".join(FIXTURE_NAMES)}).')
    common.add_argument('--out', type=Path, default=None,
                        help='Directory to write CSV files and manifest.yaml '
                        'to. Tables are printed to stdout if not given.')
    common.add_argument('--seed', type=_u64, default=None,
                        help='Seed of the random numbers (overrides sim.seed).')
    common.add_argument('--json', action='store_true',
                        help='Print results as JSON.')
    common.add_argument('--set', action='append', default=None,
                        metavar='KEY=VALUE',
                        help='Override a configuration value. Can be repeated.')
    common.add_argument('-v', '--verbose', action='store_true',
                        help='Log debug messages.')

    parser = argparse.ArgumentParser(
        prog='led-fano',
        description='Photon-number Fano factor of multimode LEDs.',
    )
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)

    operating_point = subparsers.add_parser(
        'operating-point', parents=[common],
        help='Print the running-point quantities of a device.',
    )
    operating_point.set_defaults(handler=cmd_operating_point)

    sweep = subparsers.add_parser(
        'fano-sweep', parents=[common],
        help='Evaluate Fano factor formulas on a frequency grid.',
    )
    sweep.add_argument('--omega-min', type=float, default=None,
                       help='Lowest frequency (default: sim.omega_min).')
    sweep.add_argument('--omega-max', type=float, default=None,
                       help='Highest frequency (default: sim.omega_max).')
    sweep.add_argument('--n-points', type=int, default=None,
                       help='Number of frequencies (default: sim.n_omega).')
    sweep.add_argument('--formulas', type=_str_list, default=('master',),
                       help='Comma-separated formula names (default: master).')
    sweep.add_argument('--eps0', type=_float_list, default=None,
                       help='Comma-separated values of tau_r0/tau_nr0 to '
                       'evaluate instead of the configured tau_nr0.')
    sweep.add_argument('--omega-unit', choices=('rad_s', 'tau_r0'),
                       default='rad_s',
                       help='Unit of --omega-min/--omega-max: rad/s, or '
                       'multiples of 1/tau_r0.')
    sweep.set_defaults(handler=cmd_fano_sweep)

    simulate = subparsers.add_parser(
        'simulate', parents=[common],
        help='Run the Monte Carlo simulator.',
    )
    simulate.add_argument('--n-traj', type=int, default=None,
                          help='Number of trajectories (overrides sim.n_traj).')
    simulate.set_defaults(handler=cmd_simulate)

    table1 = subparsers.add_parser(
        'table1', parents=[common],
        help='Recompute the ratios of the built-in LED measurements.',
    )
    table1.set_defaults(handler=cmd_table1)

    il = subparsers.add_parser(
        'il-curve', parents=[common],
        help='Sample the I-L curve of a lifetime model.',
    )
    il.add_argument('--n-points', type=int, default=None,
                    help='Number of pump rates (overrides il.n_points).')
    il.add_argument('--spacing', choices=('linear', 'log'), default='linear',
                    help='Spacing of the pump rates.')
    il.set_defaults(handler=cmd_il_curve)

    qw = subparsers.add_parser(
        'qw-serate', parents=[common],
        help='Tabulate the quantum-well SE rate and K_r.',
    )
    qw.add_argument('--T', dest='temperatures', type=_float_list,
                    default=DEFAULT_TEMPERATURES,
                    help='Comma-separated temperatures [K] (default: 3,15,80).')
    qw.add_argument('--m-eff', type=float, default=None,
                    help='Effective mass in units of m_e (overrides qw.m_eff).')
    qw.add_argument('--n-min', type=float, default=DEFAULT_N_S_RANGE[0],
                    help='Lowest sheet density [1/m^2].')
    qw.add_argument('--n-max', type=float, default=DEFAULT_N_S_RANGE[1],
                    help='Highest sheet density [1/m^2].')
    qw.add_argument('--n-points', type=int, default=DEFAULT_N_S_POINTS,
                    help='Number of densities.')
    qw.set_defaults(handler=cmd_qw_serate)

    return parser
###END def build_parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(levelname)s - %(name)s - %(message)s',
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run `led-fano` and return its exit code."""
    parser: argparse.ArgumentParser = build_parser()
    try:
        args: argparse.Namespace = parser.parse_args(argv)
    except SystemExit as _exit:
        return _exit.code if isinstance(_exit.code, int) else EXIT_CONFIG_ERROR
    _configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], int] = args.handler
    exit_code: int
    try:
        exit_code = handler(args)
    except (NoSteadyStateError, SimulationInstabilityError,
            InsufficientDataError) as _err:
        sys.stderr.write(f'led-fano {args.command}: error: {_err}\n')
        exit_code = EXIT_NUMERICAL_FAILURE
    except (ConfigError, ValueError) as _err:
        sys.stderr.write(f'led-fano {args.command}: error: {_err}\n')
        exit_code = EXIT_CONFIG_ERROR
    logger.debug('%s finished with exit code %d', args.command, exit_code)
    return exit_code
###END def main


if __name__ == '__main__':
    sys.exit(main())
