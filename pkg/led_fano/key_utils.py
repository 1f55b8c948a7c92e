"""Utility functions for working with hierarchical configuration keys.

Configuration keys are dot-separated names such as `mode.2.kappa0` or
`sim.dt`. The first component names a group, and groups of per-mode keys have
the 1-based mode number as their second component.
"""
from collections.abc import Iterable
import re
from typing import TypeVar


MODE_KEY_PATTERN: re.Pattern[str] = re.compile(r'^mode\.([1-9][0-9]*)\.([^.]+)$')



def get_parent_key(key: str, sep: str = '.') -> str | None:
    """Get the key of the group that a given key belongs to.

    Parameters
    ----------
    key : str
        The key, e.g. `mode.2.kappa0`.
    sep : str, optional
        The separator used in the keys. Defaults to ".".

    Returns
    -------
    str or None
        The key without its last component (`mode.2` for `mode.2.kappa0`),
        or None if the key has only one component.
    """
    if sep not in key:
        return None
    return sep.join(key.split(sep)[:-1])


def get_component_keys(
        key: str,
        keys: Iterable[str],
        num_sublevels: int | None = None,
        sep: str = '.',
) -> list[str]:
    """Get the keys in `keys` that lie below a given group key.

    Parameters
    ----------
    key : str
        The group key, e.g. `mode` or `mode.1`.
    keys : iterable of str
        The keys to search.
    num_sublevels : int, optional
        How many sublevels below `key` to include. Set to None (the default)
        to include all sublevels.
    sep : str, optional
        The separator used in the keys. Defaults to ".".

    Returns
    -------
    list of str
        The matching keys, in the order they appear in `keys`.
    """
    return [
        _key for _key in keys
        if _key.startswith(key + sep) and (
            (num_sublevels is None) or
            (_key.count(sep) - key.count(sep) <= num_sublevels)
        )
    ]


def get_mode_numbers(keys: Iterable[str]) -> list[int]:
    """Return the sorted 1-based mode numbers that appear in `mode.N.*`
    keys."""
    return sorted({
        int(_match.group(1)) for _key in keys
        if (_match := MODE_KEY_PATTERN.match(_key)) is not None
    })


def mode_key(mode_number: int, field: str) -> str:
    """Return the key of a per-mode field, e.g. `mode_key(2, 'xi')` returns
    `mode.2.xi`."""
    return f'mode.{mode_number}.{field}'


TV = TypeVar('TV')

class IsNoneError(ValueError):
    """Raised when a value is None."""
    ...

def not_none(
        x: TV|None,
) -> TV:
    """Returns a value if not None, otherwise raises an IsNoneError"""
    if x is None:
        raise IsNoneError()
    return x
