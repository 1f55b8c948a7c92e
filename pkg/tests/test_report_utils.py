import json
import math

import numpy as np
import pandas as pd
import pytest

from led_fano.report_utils.csv_output import (
    parse_provenance_line,
    provenance_line,
    read_csv,
    write_csv,
)
from led_fano.report_utils.formatter import (
    JSONReportFormatter,
    TextQuantityFormatter,
    TextReportFormatter,
)



def test_text_quantity_formatter():
    formatter = TextQuantityFormatter(name_width=6)
    assert formatter.format('eta', 0.123456789) == 'eta     0.123457'
    assert formatter.format('tau', math.inf) == 'tau     inf'
    assert formatter.format('passed', True) == 'passed  yes'
    assert formatter.format('modes', 2) == 'modes   2'


def test_text_report_formatter():
    frame = pd.DataFrame({'quantity': ['eta', 'sub_poissonian'],
                          'value': [0.25, False]})
    text = TextReportFormatter().format(frame, title='Operating point')
    lines = text.splitlines()
    assert lines[0] == 'Operating point'
    assert lines[1].split() == ['eta', '0.25']
    assert lines[2].split() == ['sub_poissonian', 'no']
    assert text.endswith('\n')


def test_json_formatter_writes_infinities_as_strings():
    text = JSONReportFormatter().format(
        {'tau_nr0': math.inf, 'eta': 0.5, 'per_mode': [1.0, -math.inf]},
        title='operating_point',
    )
    document = json.loads(text)
    assert document == {'operating_point': {
        'tau_nr0': 'inf', 'eta': 0.5, 'per_mode': [1.0, '-inf'],
    }}


def test_provenance_line():
    line = provenance_line('0.1.0', 'ab12', seed=7)
    assert line == '# led-fano 0.1.0 config_sha256=ab12 seed=7'
    assert parse_provenance_line(line) \
        == {'version': '0.1.0', 'config_sha256': 'ab12', 'seed': '7'}
    assert provenance_line('0.1.0', 'ab12').endswith('seed=none')
    with pytest.raises(ValueError):
        parse_provenance_line('omega,W_ph')


def test_csv_keeps_full_precision(tmp_path):
    frame = pd.DataFrame({'omega': math.pi * np.geomspace(1.0e7, 1.0e11, 5),
                          'W_ph': 1.0 / np.arange(3.0, 8.0)})
    path = write_csv(frame, tmp_path / 'out' / 'sweep.csv',
                     version='0.1.0', config_sha256='ab12', seed=3)
    assert path.read_text().splitlines()[1] == 'omega,W_ph'
    provenance, loaded = read_csv(path)
    assert provenance['seed'] == '3'
    pd.testing.assert_frame_equal(loaded, frame, check_exact=True)
    assert pd.read_csv(path, comment='#').shape == (5, 2)
