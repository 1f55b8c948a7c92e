"""Script to write the `fig4a.yaml` ... `fig4d.yaml` fixtures.

Each fixture is a single-mode LED with equal radiative and non-radiative
lifetime sensitivities, `K_r = K_nr`, and a non-radiative channel as fast as
the radiative one (`tau_nr0 = tau_r0`). The four fixtures differ in the
sensitivity and the pump noise:

- `fig4a`: `K_r = K_nr = 0.5`, noiseless pump (`W_e = 0`)
- `fig4b`: `K_r = K_nr = 0.5`, Poissonian pump (`W_e = 1`)
- `fig4c`: `K_r = K_nr = -0.5`, noiseless pump
- `fig4d`: `K_r = K_nr = -0.5`, Poissonian pump

The curves without a non-radiative channel are obtained from the same
fixtures with `led-fano fano-sweep --eps0 0,1`.
"""

# %%
# Imports
from pathlib import Path
import sys

import ruamel.yaml as yaml
from ruamel.yaml.comments import CommentedMap

# %%
# Parameters shared by all panels
tau_r0: float = 1.0e-9
common_device: dict[str, float] = {
    'mode.1.kappa0': 1.0e12,
    'mode.1.tau_r': tau_r0,
    'mode.1.xi': 1.0,
    'tau_nr0': tau_r0,
    'P0': 1.0e9,
}
common_sim: dict[str, float | int] = {
    'sim.dt': 5.0e-12,
    'sim.duration': 3.3e-6,
    'sim.n_traj': 4,
    'sim.seed': 20240601,
    'sim.segment_length': 32768,
    'sim.omega_min': 0.05 / tau_r0,
    'sim.omega_max': 20.0 / tau_r0,
    'sim.n_omega': 12,
    'sim.band_fraction': 0.2,
}
panels: dict[str, tuple[float, float]] = {
    'fig4a': (0.5, 0.0),
    'fig4b': (0.5, 1.0),
    'fig4c': (-0.5, 0.0),
    'fig4d': (-0.5, 1.0),
}

# %%
# Build and write one file per panel
output_dir: Path = Path(__file__).parent.parent / 'led_fano' / 'data' \
    / 'fixtures'

yaml_obj = yaml.YAML(typ='rt')

for _name, (_K, _W_e) in panels.items():
    _fixture = CommentedMap()
    _fixture.update(common_device)
    _fixture['mode.1.K_r'] = _K
    _fixture['K_nr'] = _K
    _fixture['W_e'] = _W_e
    _fixture.update(common_sim)
    _fixture.yaml_set_start_comment(
        f'K_r = K_nr = {_K}, W_e = {_W_e}, tau_nr0 = tau_r0. Written by '
        'scripts/make_fig4_fixtures.py.'
    )
    yaml_obj.dump(_fixture, sys.stdout)
    yaml_obj.dump(_fixture, output_dir / f'{_name}.yaml')
