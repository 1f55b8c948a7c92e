"""Exceptions raised by the `led_fano` package."""


class LedFanoError(Exception):
    """Base class for all errors raised by `led_fano`."""
    ...


class UnphysicalParameterError(LedFanoError, ValueError):
    """Raised when device, pump or derived parameters are outside the
    physically meaningful range (e.g. a negative effective lifetime)."""
    ...


class ZeroEfficiencyError(UnphysicalParameterError):
    """Raised when a formula divides by a zero quantum efficiency."""
    ...


class NoSteadyStateError(LedFanoError, RuntimeError):
    """Raised when the carrier rate equation has no root in the search
    range."""
    ...


class SimulationInstabilityError(LedFanoError, RuntimeError):
    """Raised when a Langevin trajectory diverges."""
    ...


class InsufficientDataError(LedFanoError, ValueError):
    """Raised when a time series is too short for the requested spectral
    estimate."""
    ...


class ConfigError(LedFanoError, ValueError):
    """Raised for unreadable or invalid configuration.

    Attributes
    ----------
    path : str or None
        The configuration file the error was found in, if any.
    line : int or None
        1-based line number in `path`, if known.
    key : str or None
        The offending configuration key, if any.
    """

    def __init__(
            self,
            message: str,
            *,
            path: str | None = None,
            line: int | None = None,
            key: str | None = None,
    ) -> None:
        self.path = path
        self.line = line
        self.key = key
        location: list[str] = []
        if path is not None:
            location.append(str(path) if line is None else f'{path}:{line}')
        if key is not None:
            location.append(f'key {key!r}')
        prefix: str = f'{", ".join(location)}: ' if location else ''
        super().__init__(prefix + message)
    ###END def ConfigError.__init__

###END class ConfigError
