import json

import numpy as np
import pytest
import ruamel.yaml as yaml

from led_fano.cli import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    MANIFEST_NAME,
    main,
    table1_frame,
)
from led_fano.langevin_sim import THREADS_ENV_VAR
from led_fano.report_utils.csv_output import read_csv


SMALL_SIM: tuple[str, ...] = (
    '--set', 'sim.duration=1.1e-7',
    '--set', 'sim.segment_length=1024',
    '--set', 'sim.omega_min=5.0e+9',
    '--set', 'sim.omega_max=1.0e+11',
    '--set', 'sim.n_omega=4',
)



def test_operating_point_text(capsys):
    assert main(['operating-point', '--config', 'single_mode']) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith('Operating point\n')
    lines = {_line.split()[0]: _line.split()[1:] for _line in out.splitlines()
             if _line.strip()}
    assert lines['eta_equals_eta_d'] == ['yes']
    assert lines['eta'] == ['0.5']
    assert 'Low-injection' in lines


def test_operating_point_json(capsys):
    assert main(['operating-point', '--config', 'two_mode', '--json']) \
        == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document['operating_point']['zeta1'] == pytest.approx(2.0 / 3.0)
    assert document['W_ph_0'] == pytest.approx(0.92)
    assert document['regime']['passed'] is True


def test_missing_required_key(tmp_path, capsys):
    path = tmp_path / 'device.yaml'
    path.write_text('mode.1.kappa0: 1.0e+12\nmode.1.tau_r: 1.0e-9\n')
    assert main(['operating-point', '--config', str(path)]) \
        == EXIT_CONFIG_ERROR
    err = capsys.readouterr().err
    assert 'P0' in err
    assert str(path) in err


def test_missing_config(capsys):
    assert main(['operating-point']) == EXIT_CONFIG_ERROR
    assert '--config' in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    assert main(['operating-point', '--config',
                 str(tmp_path / 'absent.yaml')]) == EXIT_CONFIG_ERROR
    assert 'absent.yaml' in capsys.readouterr().err


def test_unknown_override_key(capsys):
    assert main(['operating-point', '--config', 'single_mode',
                 '--set', 'mode.1.colour=red']) == EXIT_CONFIG_ERROR
    assert 'mode.1.colour' in capsys.readouterr().err


def test_bad_seed_is_a_usage_error(capsys):
    assert main(['simulate', '--config', 'single_mode', '--seed', '-3']) \
        == EXIT_CONFIG_ERROR


def test_fano_sweep_over_eps0(tmp_path):
    out_dir = tmp_path / 'fig4d'
    assert main([
        'fano-sweep', '--config', 'fig4d', '--eps0', '0,1',
        '--omega-unit', 'tau_r0', '--omega-min', '0.05', '--omega-max', '20',
        '--n-points', '12', '--out', str(out_dir),
    ]) == EXIT_OK
    provenance, frame = read_csv(out_dir / 'fano_sweep.csv')
    assert provenance['seed'] == 'none'
    assert list(frame.columns) == [
        'omega', 'omega_tau_r0', 'W_ph_master_eps0_0', 'W_ph_master_eps0_1',
    ]
    assert frame['omega_tau_r0'].iloc[0] == 0.05
    assert frame['omega_tau_r0'].iloc[-1] == 20.0
    np.testing.assert_allclose(frame['omega'], frame['omega_tau_r0'] / 1.0e-9)
    assert np.all(frame['W_ph_master_eps0_1'] < frame['W_ph_master_eps0_0'])
    assert frame['W_ph_master_eps0_1'].iloc[0] == pytest.approx(0.75, abs=1e-3)
    assert (out_dir / MANIFEST_NAME).exists()


def test_fano_sweep_formulas_to_stdout(capsys):
    assert main(['fano-sweep', '--config', 'two_mode',
                 '--formulas', 'master,alternative', '--n-points', '3']) \
        == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith('# led-fano ')
    assert lines[1] == 'omega,W_ph_master,W_ph_alternative'
    assert len(lines) == 5


def test_fano_sweep_unknown_formula(capsys):
    assert main(['fano-sweep', '--config', 'two_mode',
                 '--formulas', 'quantum']) == EXIT_CONFIG_ERROR
    assert 'quantum' in capsys.readouterr().err


def test_fano_sweep_inhomogeneous_with_zeta_above_one(tmp_path, capsys):
    path = tmp_path / 'sensitive.yaml'
    path.write_text(
        'mode.1.kappa0: 1.0e+12\nmode.1.tau_r: 2.0e-9\n'
        'mode.1.K_r: 1.0\nmode.1.xi: 1.0\n'
        'mode.2.kappa0: 1.0e+12\nmode.2.tau_r: 2.0e-9\n'
        'mode.2.K_r: 0.0\nmode.2.xi: 0.0\n'
        'P0: 1.0e+9\n'
    )
    assert main(['fano-sweep', '--config', str(path),
                 '--formulas', 'master,inhomogeneous', '--n-points', '3']) \
        == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == 'omega,W_ph_master,W_ph_inhomogeneous'
    assert len(lines) == 5


def test_table1(tmp_path, capsys):
    assert main(['table1', '--out', str(tmp_path)]) == EXIT_OK
    assert 'r_theory' in capsys.readouterr().out
    _, frame = read_csv(tmp_path / 'table1.csv')
    np.testing.assert_allclose(
        frame['r_theory'], frame['r_theory_published'], atol=0.005
    )
    assert len(table1_frame()) == 3


def _simulate(out_dir, *extra: str) -> bytes:
    exit_code = main([
        'simulate', '--config', 'single_mode', '--seed', '42',
        '--out', str(out_dir), *SMALL_SIM, *extra,
    ])
    assert exit_code in (EXIT_OK, EXIT_CHECK_FAILED)
    return (out_dir / 'simulate.csv').read_bytes()


def test_simulate_is_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, '1')
    first = _simulate(tmp_path / 'first', '--n-traj', '2')
    again = _simulate(tmp_path / 'again', '--n-traj', '2')
    monkeypatch.setenv(THREADS_ENV_VAR, '2')
    threaded = _simulate(tmp_path / 'threaded', '--n-traj', '2')
    assert first == again == threaded
    assert first.startswith(b'# led-fano ')
    assert b' seed=42\n' in first

    manifest = yaml.YAML(typ='safe').load(tmp_path / 'first' / MANIFEST_NAME)
    assert manifest['command'] == 'simulate'
    assert manifest['seed'] == 42
    assert manifest['config']['sim.n_traj'] == 2
    assert manifest['config']['sim.duration'] == 1.1e-7


def test_simulate_single_trajectory_has_no_stderr(tmp_path):
    _simulate(tmp_path, '--n-traj', '1')
    _, frame = read_csv(tmp_path / 'simulate.csv')
    assert list(frame.columns) == [
        'omega', 'W_ph_mc', 'stderr', 'W_ph_analytic', 'W_ph_analytic_band',
    ]
    assert frame['stderr'].isna().all()


def test_simulate_rejects_short_duration(capsys):
    assert main(['simulate', '--config', 'single_mode',
                 '--set', 'sim.duration=1.0e-9']) == EXIT_CONFIG_ERROR
    assert 'sim.duration' in capsys.readouterr().err


def test_invalid_thread_count(monkeypatch, capsys):
    monkeypatch.setenv(THREADS_ENV_VAR, '0')
    assert main(['simulate', '--config', 'single_mode', *SMALL_SIM]) \
        == EXIT_CONFIG_ERROR
    assert THREADS_ENV_VAR in capsys.readouterr().err


def test_qw_serate_keeps_temperature_order(capsys):
    assert main(['qw-serate', '--n-points', '5']) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == 'n_s,T,f_e,R_rel,K_r'
    temperatures = [float(_line.split(',')[1]) for _line in lines[2:]]
    assert temperatures == [3.0] * 5 + [15.0] * 5 + [80.0] * 5


def test_qw_serate_validates_range(capsys):
    assert main(['qw-serate', '--n-min', '1e15', '--n-max', '1e14']) \
        == EXIT_CONFIG_ERROR


def test_il_curve_writes_manifest(tmp_path, capsys):
    assert main(['il-curve', '--config', 'il_power', '--n-points', '20',
                 '--out', str(tmp_path)]) == EXIT_OK
    assert 'Small-signal consistency' in capsys.readouterr().err
    _, frame = read_csv(tmp_path / 'il_curve.csv')
    assert len(frame) == 20
    manifest = yaml.YAML(typ='safe').load(tmp_path / MANIFEST_NAME)
    assert sorted(manifest['outputs']) == sorted([
        str(tmp_path / 'il_curve.csv'), str(tmp_path / 'consistency.csv'),
    ])
    assert manifest['seed'] is None
    assert manifest['config']['il.n_points'] == 20


def test_il_curve_qw(capsys):
    assert main(['il-curve', '--config', 'il_qw', '--spacing', 'log']) \
        == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == 'P,n_c,V,N,eta_num,eta_d_num'
    assert len(lines) == 2 + 50


def test_il_curve_invalid_beta0(capsys):
    assert main(['il-curve', '--config', 'il_power',
                 '--set', 'il.beta0=1.5']) == EXIT_CONFIG_ERROR
    assert 'il.beta0' in capsys.readouterr().err
