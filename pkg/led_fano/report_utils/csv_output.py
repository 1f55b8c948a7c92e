"""Write result tables as CSV files with a provenance line.

Every CSV file written by the command line tool starts with a comment line
of the form

    # led-fano <version> config_sha256=<hex> seed=<seed>

followed by a normal header row and the data. `read_csv` skips the
comment line, so the files load directly with `pandas.read_csv(path,
comment='#')`.
"""
from pathlib import Path
import typing as tp

import pandas as pd



PROVENANCE_PREFIX: tp.Final[str] = '# led-fano'


def provenance_line(
        version: str,
        config_sha256: str,
        seed: int | None = None,
) -> str:
    """Return the provenance comment line, without a trailing newline.

    `seed` is written as `none` for outputs that do not depend on random
    numbers.
    """
    seed_str: str = 'none' if seed is None else str(seed)
    return f'{PROVENANCE_PREFIX} {version} config_sha256={config_sha256} ' \
        f'seed={seed_str}'
###END def provenance_line


def parse_provenance_line(line: str) -> dict[str, str]:
    """Parse a provenance line back into its fields.

    Returns a dict with keys `version`, `config_sha256` and `seed`.

    Raises
    ------
    ValueError
        If the line does not start with the provenance prefix.
    """
    if not line.startswith(PROVENANCE_PREFIX + ' '):
        raise ValueError(f'Not a provenance line: {line!r}')
    fields: list[str] = line[len(PROVENANCE_PREFIX):].split()
    parsed: dict[str, str] = {'version': fields[0]}
    for _field in fields[1:]:
        _name, _, _value = _field.partition('=')
        parsed[_name] = _value
    return parsed
###END def parse_provenance_line


def write_csv(
        frame: pd.DataFrame,
        path: Path | str,
        *,
        version: str,
        config_sha256: str,
        seed: int | None = None,
) -> Path:
    """Write `frame` to `path` with a provenance line above the header.

    The index is not written. Floats are written with full precision so that
    two runs with the same seed produce byte-identical files.

    Returns
    -------
    Path
        The path written to.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as _file:
        _file.write(provenance_line(version, config_sha256, seed) + '\n')
        frame.to_csv(_file, index=False, float_format='%.17g')
    return path
###END def write_csv


def read_csv(path: Path | str) -> tuple[dict[str, str], pd.DataFrame]:
    """Read a file written by `write_csv`.

    Returns
    -------
    tuple
        The parsed provenance line and the data.
    """
    with open(path) as _file:
        provenance: dict[str, str] = parse_provenance_line(
            _file.readline().rstrip('\n')
        )
        frame: pd.DataFrame = pd.read_csv(_file)
    return provenance, frame
###END def read_csv
