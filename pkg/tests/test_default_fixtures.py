import pytest

from led_fano.config import device_from_config, pump_from_config
from led_fano.default_fixtures import (
    FIXTURE_NAMES,
    fixtures_path,
    get_defaults,
    get_fixture_path,
    load_fixture,
)



def test_fixture_files_match_names():
    assert sorted(_p.stem for _p in fixtures_path.glob('*.yaml')) \
        == sorted(FIXTURE_NAMES)


@pytest.mark.parametrize('name', FIXTURE_NAMES)
def test_fixtures_load(name):
    config = load_fixture(name)
    assert 'il.beta0' in config
    if name.startswith('il_'):
        assert 'model.radiative' in config
    else:
        assert len(device_from_config(config).modes) >= 1
        assert pump_from_config(config).P0 > 0


def test_unknown_fixture():
    with pytest.raises(ValueError, match='single_mode'):
        get_fixture_path('laser')


def test_defaults_are_cached():
    defaults = get_defaults()
    assert get_defaults() is defaults
    reloaded = get_defaults(force_reload=True)
    assert reloaded is not defaults
    assert reloaded.values == defaults.values


def test_fig4_pump_noise():
    assert pump_from_config(load_fixture('fig4a')).W_e == 0.0
    assert pump_from_config(load_fixture('fig4b')).W_e == 1.0
