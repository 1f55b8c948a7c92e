"""Classes to format result tables for printing.

Result objects such as `OperatingPoint` and `RegimeReport` convert to a
two-column `pandas.DataFrame` (`quantity`, `value`) with one row per
quantity. The formatters here turn such frames into text for the terminal.

Abstract base classes
---------------------
QuantityFormatter
    Base class for formatting a single `(quantity, value)` row. Subclasses
    must implement the `format` method.
ReportFormatter
    Base class for formatting a whole table. Subclasses must implement the
    `format` method, which should use a consistent subclass of
    `QuantityFormatter` to format the individual rows.

Classes
-------
TextQuantityFormatter
    Formats a row as a left-aligned name and a value with 6 significant
    digits.
TextReportFormatter
    Formats a table as an optional title line followed by one aligned line
    per row.
JSONReportFormatter
    Formats a mapping of quantities as a JSON document.
"""
import abc
from collections.abc import Mapping
import json
import math
import typing as tp

import pandas as pd



class QuantityFormatter(abc.ABC):
    """Base class for formatting a single `(quantity, value)` row."""
    @abc.abstractmethod
    def format(self, name: str, value: tp.Any) -> str:
        """Return a string representation of the row."""
        pass
    ###END def QuantityFormatter.format

###END class QuantityFormatter


class ReportFormatter(abc.ABC):
    """Base class for formatting a table of quantities."""
    @abc.abstractmethod
    def format(self, report: tp.Any, title: str = '') -> str:
        """Return a string representation of the table."""
        pass
    ###END def ReportFormatter.format

###END class ReportFormatter


class TextQuantityFormatter(QuantityFormatter):
    """Formats a row as `name  value`, with the name padded to `name_width`
    characters."""

    def __init__(self, name_width: int = 20, precision: int = 6):
        self.name_width: int = name_width
        self.precision: int = precision

    def format(self, name: str, value: tp.Any) -> str:
        value_str: str
        if isinstance(value, bool):
            value_str = 'yes' if value else 'no'
        elif isinstance(value, float):
            value_str = 'inf' if math.isinf(value) and value > 0 \
                else f'{value:.{self.precision}g}'
        else:
            value_str = str(value)
        return f'{name:<{self.name_width}}  {value_str}'
    ###END def TextQuantityFormatter.format

###END class TextQuantityFormatter


class TextReportFormatter(ReportFormatter):
    """Formats a `quantity`/`value` DataFrame as aligned text lines."""

    def __init__(self, quantity_formatter: tp.Optional[TextQuantityFormatter] = None):
        if quantity_formatter is None:
            self.quantity_formatter = TextQuantityFormatter()
        else:
            self.quantity_formatter: TextQuantityFormatter = quantity_formatter
    ###END def TextReportFormatter.__init__

    def format(self, report: pd.DataFrame, title: str = '') -> str:
        """Return the table as text.

        Parameters
        ----------
        report : pandas.DataFrame
            Frame with columns `quantity` and `value`.
        title : str, optional
            Printed on its own line above the rows if not empty.
        """
        lines: list[str] = [] if title == '' else [title]
        lines.extend(
            self.quantity_formatter.format(str(_name), _value)
            for _name, _value in zip(report['quantity'], report['value'])
        )
        return '\n'.join(lines) + '\n'
    ###END def TextReportFormatter.format

###END class TextReportFormatter


class JSONReportFormatter(ReportFormatter):
    """Formats a mapping of quantities (e.g. `OperatingPoint.to_dict()`) as a
    JSON document. Infinite values are written as the string `"inf"`."""

    def __init__(self, indent: int | None = 2):
        self.indent: int | None = indent

    @staticmethod
    def _jsonable(value: tp.Any) -> tp.Any:
        if isinstance(value, float) and not math.isfinite(value):
            return str(value)
        if isinstance(value, (list, tuple)):
            return [JSONReportFormatter._jsonable(_v) for _v in value]
        if isinstance(value, Mapping):
            return {
                str(_k): JSONReportFormatter._jsonable(_v)
                for _k, _v in value.items()
            }
        return value

    def format(self, report: Mapping[str, tp.Any], title: str = '') -> str:
        """Return the mapping as JSON. A non-empty `title` becomes the single
        top-level key."""
        document: tp.Any = self._jsonable(report)
        if title != '':
            document = {title: document}
        return json.dumps(document, indent=self.indent) + '\n'
    ###END def JSONReportFormatter.format

###END class JSONReportFormatter
